#pragma once

#include <cstdint>
#include <vector>

namespace brittle {

// SplitMix64 finalizer; used as a stateless counter-based generator so that
// every (seed, stream, counter) triple maps to the same value regardless of
// evaluation order or thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(splitmix64(seed ^ splitmix64(stream + 0x51ed2701'8c3a9f6bULL))) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(state_ ^ splitmix64(counter));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  CounterRng substream(std::uint64_t stream) const {
    CounterRng r(0);
    r.state_ = splitmix64(state_ ^ splitmix64(stream * 0x9e3779b9'7f4a7c15ULL + 1));
    return r;
  }

 private:
  std::uint64_t state_;
};

// Point of the additive-recurrence (R_d) low-discrepancy sequence in [0,1)^dim,
// shifted by offset01 so that distinct restarts explore distinct lattices.
std::vector<double> rd_sequence_point(std::size_t dim, std::uint64_t index, double offset01);

}  // namespace brittle
