#include "brittle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace brittle {

namespace {

constexpr double kDenominatorFloor = 1e-300;
constexpr double kNearSingular = 1e-12;
constexpr double kPruneWeight = 1e-10;
constexpr double kLpTol = 1e-9;

double sense_sign(ObjectiveSense s) {
  return s == ObjectiveSense::Sup ? 1.0 : -1.0;
}

// ---------------------------------------------------------------------------
// Variable layout
//
// The flat decision vector holds, per measure variable: free atom positions,
// then (for fractional kinds) the full weight simplex over pinned + free
// atoms, then (band in limit mode) the relative-likelihood ratio rho.
// Prior-type kinds optimise positions only; their weights come from the
// inner linear program.

struct Block {
  int pos_offset = 0;
  int n_free = 0;
  int w_offset = -1;
  int n_atoms = 0;
  int rho_offset = -1;
  std::vector<double> pinned;
};

struct Layout {
  std::vector<Block> blocks;
  int dim = 0;
  bool outer_weights = false;
  Interval rho_box{1.0, 1.0};
};

bool is_fractional_kind(ProgramKind k) {
  return k == ProgramKind::PosteriorFractional ||
         k == ProgramKind::LambdaThreshold;
}

bool uses_rho(const ReducedProgram& p) {
  return is_fractional_kind(p.kind) && p.limit_mode && p.band.has_value();
}

Layout make_layout(const ReducedProgram& p) {
  Layout layout;
  layout.outer_weights = is_fractional_kind(p.kind);
  const bool rho = uses_rho(p);
  if (rho) {
    const double param = p.band->param;
    const double n = p.observation ? static_cast<double>(p.observation->count()) : 1.0;
    if (p.band->mode == DataProbabilityBand::Mode::Joint) {
      layout.rho_box = {1.0 / param, param};
    } else {
      layout.rho_box = {std::pow(param, -n), std::pow(param, n)};
    }
  }
  int off = 0;
  for (const MeasureLayout& m : p.measures) {
    Block b;
    // Ball atoms are bookkept only when data probabilities are built from
    // them; with a band in limit mode the ratio variable replaces them.
    b.pinned = rho ? std::vector<double>{} : m.pinned_positions;
    b.n_free = m.free_atoms;
    b.pos_offset = off;
    off += b.n_free;
    b.n_atoms = static_cast<int>(b.pinned.size()) + b.n_free;
    if (layout.outer_weights) {
      b.w_offset = off;
      off += b.n_atoms;
    }
    if (rho) {
      b.rho_offset = off;
      off += 1;
    }
    layout.blocks.push_back(std::move(b));
  }
  layout.dim = off;
  return layout;
}

// Euclidean projection onto the probability simplex.
void project_simplex(double* w, int n) {
  if (n == 1) {
    w[0] = 1.0;
    return;
  }
  std::vector<double> u(w, w + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (int k = 0; k < n; ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / (k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  for (int i = 0; i < n; ++i) w[i] = std::max(0.0, w[i] - tau);
}

void project_point(const ReducedProgram& p, const Layout& layout,
                   std::vector<double>& x) {
  for (const Block& b : layout.blocks) {
    for (int i = 0; i < b.n_free; ++i) {
      x[b.pos_offset + i] = p.support.clamp(x[b.pos_offset + i]);
    }
    if (b.w_offset >= 0) project_simplex(x.data() + b.w_offset, b.n_atoms);
    if (b.rho_offset >= 0) x[b.rho_offset] = layout.rho_box.clamp(x[b.rho_offset]);
  }
}

// ---------------------------------------------------------------------------
// Inner linear program
//
//   extremise  sum_j c_j v_j
//   subject to v >= 0,  sum_j d_j v_j = 1,
//              sum_j v_j psi_kj in Z_k * sum_j v_j   (ratio rows), or
//              sum_j v_j psi_kj in Z_k               (absolute rows).
//
// Solved exactly by enumerating basic solutions: the normalisation row is
// always active, plus (support size - 1) active constraint hyperplanes.

struct InnerLpResult {
  std::vector<double> v;
  double value = 0.0;
  double violation = std::numeric_limits<double>::infinity();
  bool feasible = false;
  bool normalizable = false;
};

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-13) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c2 = col; c2 < n; ++c2) a[r][c2] -= f * a[col][c2];
      b[r] -= f * b[col];
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double s = b[col];
    for (int c2 = col + 1; c2 < n; ++c2) s -= a[col][c2] * b[c2];
    b[col] = s / a[col][col];
  }
  return true;
}

struct Hyperplane {
  int row;
  double bound;
};

double lp_violation(const std::vector<double>& v, const std::vector<double>& d,
                    const std::vector<std::vector<double>>& rows,
                    const std::vector<Interval>& targets, bool ratio_rows) {
  double total_v = 0.0;
  for (double vi : v) total_v += vi;
  if (!(total_v > 0.0)) return std::numeric_limits<double>::infinity();
  double viol = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double s = 0.0;
    double scale = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      s += v[j] * rows[k][j];
      scale += std::abs(v[j] * rows[k][j]);
    }
    if (ratio_rows) {
      viol += targets[k].distance(s / total_v);
    } else {
      viol += targets[k].distance(s) / (1.0 + scale);
    }
  }
  // Normalisation residual (should vanish by construction).
  double norm = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) norm += v[j] * d[j];
  viol += std::abs(norm - 1.0);
  return viol;
}

InnerLpResult inner_lp(const std::vector<double>& d, const std::vector<double>& c,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<Interval>& targets, bool ratio_rows,
                       ObjectiveSense sense) {
  const int m = static_cast<int>(d.size());
  InnerLpResult best;
  best.v.assign(m, 0.0);
  for (double dj : d) {
    if (dj > kDenominatorFloor) best.normalizable = true;
  }
  if (!best.normalizable) {
    best.violation = 1.0;
    return best;
  }

  // Available active hyperplanes (both finite bounds of every row).
  std::vector<Hyperplane> planes;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (std::isfinite(targets[k].lo)) planes.push_back({static_cast<int>(k), targets[k].lo});
    if (std::isfinite(targets[k].hi) && targets[k].hi != targets[k].lo) {
      planes.push_back({static_cast<int>(k), targets[k].hi});
    }
  }
  const int n_planes = static_cast<int>(planes.size());
  const double sgn = sense_sign(sense);
  double best_obj = -std::numeric_limits<double>::infinity();
  int best_nnz = 0;

  std::vector<int> support;
  std::vector<int> plane_idx;
  std::vector<std::vector<double>> a;
  std::vector<double> rhs;
  std::vector<double> v(m);

  auto consider = [&](const std::vector<int>& sup, const std::vector<int>& act) {
    const int s = static_cast<int>(sup.size());
    a.assign(s, std::vector<double>(s, 0.0));
    rhs.assign(s, 0.0);
    for (int j = 0; j < s; ++j) a[0][j] = d[sup[j]];
    rhs[0] = 1.0;
    for (int r = 1; r < s; ++r) {
      const Hyperplane& h = planes[act[r - 1]];
      for (int j = 0; j < s; ++j) {
        const double base = rows[h.row][sup[j]];
        a[r][j] = ratio_rows ? base - h.bound : base;
      }
      rhs[r] = ratio_rows ? 0.0 : h.bound;
    }
    if (!solve_linear(a, rhs)) return;
    double vmax = 0.0;
    for (int j = 0; j < s; ++j) vmax = std::max(vmax, std::abs(rhs[j]));
    for (int j = 0; j < s; ++j) {
      if (rhs[j] < -1e-9 * std::max(1.0, vmax)) return;  // outside the cone
    }
    std::fill(v.begin(), v.end(), 0.0);
    for (int j = 0; j < s; ++j) v[sup[j]] = std::max(0.0, rhs[j]);
    const double viol = lp_violation(v, d, rows, targets, ratio_rows);
    if (!std::isfinite(viol)) return;
    double obj = 0.0;
    int nnz = 0;
    for (int j = 0; j < m; ++j) {
      obj += c[j] * v[j];
      if (v[j] > kPruneWeight) ++nnz;
    }
    const bool feas = viol <= kLpTol;
    if (feas) {
      if (!best.feasible || sgn * obj > best_obj + 1e-15 ||
          (std::abs(sgn * obj - best_obj) <= 1e-15 && nnz < best_nnz)) {
        best.feasible = true;
        best_obj = sgn * obj;
        best_nnz = nnz;
        best.v = v;
        best.value = obj;
        best.violation = 0.0;
      }
    } else if (!best.feasible && viol < best.violation) {
      best.violation = viol;
      best.v = v;
      best.value = obj;
    }
  };

  // Enumerate supports of size s with s - 1 active planes.
  const int max_s = std::min(m, n_planes + 1);
  std::vector<int> sup_stack, act_stack;
  std::function<void(int, int)> pick_planes = [&](int start, int need) {
    if (need == 0) {
      consider(sup_stack, act_stack);
      return;
    }
    for (int i = start; i <= n_planes - need; ++i) {
      act_stack.push_back(i);
      pick_planes(i + 1, need - 1);
      act_stack.pop_back();
    }
  };
  std::function<void(int, int, int)> pick_support = [&](int start, int need,
                                                        int target_s) {
    if (need == 0) {
      act_stack.clear();
      pick_planes(0, target_s - 1);
      return;
    }
    for (int j = start; j <= m - need; ++j) {
      sup_stack.push_back(j);
      pick_support(j + 1, need - 1, target_s);
      sup_stack.pop_back();
    }
  };
  for (int s = 1; s <= max_s; ++s) {
    sup_stack.clear();
    pick_support(0, s, s);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Program evaluation

struct MeasureStats {
  double phi = 0.0;
  double data_prob = 1.0;
  std::vector<double> psi;
  std::vector<double> ball_masses;  // finite-delta mode only
};

struct Evaluation {
  double objective = 0.0;
  double violation = std::numeric_limits<double>::infinity();
  double merit = -std::numeric_limits<double>::infinity();
  bool feasible = false;
  bool normalizable = false;
  std::vector<double> v;
  std::vector<MeasureStats> stats;
};

class ProgramEvaluator {
 public:
  ProgramEvaluator(const ReducedProgram& p, const Layout& layout)
      : p_(p), layout_(layout), rho_(uses_rho(p)) {
    if (p_.band && p_.observation && !rho_) {
      // Reference ball masses of the uniform density on the support.
      const double width = p_.support.width();
      ref_joint_ = 1.0;
      for (std::size_t i = 0; i < p_.observation->count(); ++i) {
        const Interval ball = p_.observation->ball(i);
        const double overlap = std::max(
            0.0, std::min(ball.hi, p_.support.hi) - std::max(ball.lo, p_.support.lo));
        ref_balls_.push_back(overlap / width);
        ref_joint_ *= ref_balls_.back();
      }
    }
  }

  int n_measures() const { return static_cast<int>(layout_.blocks.size()); }

  MeasureStats measure_stats(const std::vector<double>& x, int j) const {
    const Block& b = layout_.blocks[j];
    MeasureStats st;
    const std::size_t n_psi = p_.psi.dimension();
    st.psi.assign(n_psi, 0.0);
    const int n_pinned = static_cast<int>(b.pinned.size());

    // Free positions are clamped so finite-difference probes remain inside
    // the support (the merit surface is flat past the box edge).
    auto atom_at = [&](int i) {
      return i < n_pinned ? b.pinned[i]
                          : p_.support.clamp(x[b.pos_offset + (i - n_pinned)]);
    };
    auto weight_at = [&](int i) {
      return b.w_offset >= 0 ? x[b.w_offset + i] : 0.0;
    };

    if (b.w_offset >= 0) {
      for (int i = 0; i < b.n_atoms; ++i) {
        const double xi = atom_at(i);
        const double wi = weight_at(i);
        st.phi += wi * p_.phi_atom(xi);
        for (std::size_t k = 0; k < n_psi; ++k) st.psi[k] += wi * p_.psi.eval(k, xi);
      }
    }

    // Data probability.
    if (is_fractional_kind(p_.kind) && p_.observation &&
        p_.observation->count() > 0) {
      if (rho_) {
        st.data_prob = x[b.rho_offset];
      } else if (p_.limit_mode) {
        double dp = 1.0;
        for (int i = 0; i < n_pinned; ++i) dp *= weight_at(i);
        st.data_prob = dp;
      } else {
        st.ball_masses.assign(p_.observation->count(), 0.0);
        for (int i = 0; i < b.n_atoms; ++i) {
          const double xi = atom_at(i);
          const double wi = weight_at(i);
          for (std::size_t o = 0; o < p_.observation->count(); ++o) {
            if (std::abs(xi - p_.observation->centers[o]) < p_.observation->radius) {
              st.ball_masses[o] += wi;
            }
          }
        }
        double dp = 1.0;
        for (double bm : st.ball_masses) dp *= bm;
        st.data_prob = dp;
      }
    }
    return st;
  }

  // Atom values for prior-type kinds (weights decided by the inner LP).
  void atom_coefficients(const std::vector<double>& x, std::vector<double>& d,
                         std::vector<double>& c,
                         std::vector<std::vector<double>>& rows) const {
    const Block& b = layout_.blocks[0];
    const int m = b.n_free;
    const std::size_t n_psi = p_.psi.dimension();
    d.assign(m, 1.0);
    c.assign(m, 0.0);
    rows.assign(n_psi, std::vector<double>(m, 0.0));
    for (int j = 0; j < m; ++j) {
      const double xj = p_.support.clamp(x[b.pos_offset + j]);
      c[j] = p_.phi_atom(xj);
      if (p_.kind == ProgramKind::PositiveMeasure) d[j] = p_.psi0(xj);
      for (std::size_t k = 0; k < n_psi; ++k) rows[k][j] = p_.psi.eval(k, xj);
    }
  }

  double band_violation(const MeasureStats& st) const {
    if (!p_.band || rho_ || !p_.observation || p_.observation->count() == 0) {
      return 0.0;
    }
    const double param = p_.band->param;
    double viol = 0.0;
    if (p_.band->mode == DataProbabilityBand::Mode::Joint) {
      const double lo = ref_joint_ / param;
      const double hi = ref_joint_ * param;
      viol += Interval{lo, hi}.distance(st.data_prob) / std::max(ref_joint_, 1e-30);
    } else {
      for (std::size_t i = 0; i < ref_balls_.size(); ++i) {
        const double ref = std::max(ref_balls_[i], 1e-30);
        const double lo = ref_balls_[i] / param;
        const double hi = ref_balls_[i] * param;
        const double bm = st.ball_masses.empty() ? 0.0 : st.ball_masses[i];
        viol += Interval{lo, hi}.distance(bm) / ref;
      }
    }
    return viol;
  }

  Evaluation evaluate(const std::vector<double>& x, double penalty,
                      const std::vector<MeasureStats>* cached_stats = nullptr,
                      int dirty_measure = -1) const {
    Evaluation ev;
    const double sgn = sense_sign(p_.sense);

    if (is_fractional_kind(p_.kind)) {
      const int M = n_measures();
      ev.stats.resize(M);
      for (int j = 0; j < M; ++j) {
        if (cached_stats != nullptr && j != dirty_measure) {
          ev.stats[j] = (*cached_stats)[j];
        } else {
          ev.stats[j] = measure_stats(x, j);
        }
      }
      std::vector<double> d(M), c(M);
      std::vector<std::vector<double>> rows(p_.psi.dimension(),
                                            std::vector<double>(M, 0.0));
      double band_viol = 0.0;
      for (int j = 0; j < M; ++j) {
        const MeasureStats& st = ev.stats[j];
        const double dp = st.data_prob < kDenominatorFloor ? 0.0 : st.data_prob;
        if (p_.kind == ProgramKind::PosteriorFractional) {
          d[j] = dp;
          c[j] = dp * st.phi;
        } else {  // LambdaThreshold: prior weights directly, level objective
          d[j] = 1.0;
          c[j] = (st.phi - p_.lambda) * dp;
        }
        for (std::size_t k = 0; k < p_.psi.dimension(); ++k) rows[k][j] = st.psi[k];
        band_viol += band_violation(st);
      }
      if (p_.kind == ProgramKind::PosteriorFractional) {
        // Data probabilities can span hundreds of orders of magnitude (a
        // product of near-vanishing ball masses) while the moment rows stay
        // of order one, which makes every basis containing such a column
        // look singular. Dividing d and c by max d substitutes v -> v*dmax:
        // the LP value and the normalised weights are both unchanged, but
        // the normalisation row becomes well scaled.
        double dmax = 0.0;
        for (int j = 0; j < M; ++j) dmax = std::max(dmax, d[j]);
        if (dmax > 0.0) {
          for (int j = 0; j < M; ++j) {
            d[j] /= dmax;
            c[j] /= dmax;
          }
        }
      }
      InnerLpResult lp = inner_lp(d, c, rows, p_.targets.targets,
                                  /*ratio_rows=*/true, p_.sense);
      ev.normalizable = lp.normalizable;
      ev.v = std::move(lp.v);
      ev.objective = lp.value;
      ev.violation = (lp.feasible ? 0.0 : lp.violation) + band_viol;
      ev.feasible = lp.feasible && band_viol <= kLpTol;
      ev.merit = sgn * ev.objective - penalty * ev.violation;
      return ev;
    }

    // Prior-type kinds: single measure, inner LP over atom weights.
    std::vector<double> d, c;
    std::vector<std::vector<double>> rows;
    atom_coefficients(x, d, c, rows);
    const bool ratio = p_.kind == ProgramKind::PriorPrimary;
    InnerLpResult lp = inner_lp(d, c, rows, p_.targets.targets, ratio, p_.sense);
    ev.normalizable = lp.normalizable;
    ev.v = std::move(lp.v);
    ev.objective = lp.value;
    ev.violation = lp.feasible ? 0.0 : lp.violation;
    ev.feasible = lp.feasible;
    ev.merit = sgn * ev.objective - penalty * ev.violation;
    return ev;
  }

  int measure_of_coordinate(int coord) const {
    for (int j = 0; j < n_measures(); ++j) {
      const Block& b = layout_.blocks[j];
      const int end = (b.rho_offset >= 0)
                          ? b.rho_offset + 1
                          : (b.w_offset >= 0 ? b.w_offset + b.n_atoms
                                             : b.pos_offset + b.n_free);
      if (coord >= b.pos_offset && coord < end) return j;
    }
    return -1;
  }

 private:
  const ReducedProgram& p_;
  const Layout& layout_;
  bool rho_;
  std::vector<double> ref_balls_;
  double ref_joint_ = 1.0;
};

// ---------------------------------------------------------------------------
// Initialisation

std::vector<double> initial_point(const ReducedProgram& p, const Layout& layout,
                                  const SolverConfig& cfg, int restart) {
  std::vector<double> x(layout.dim, 0.0);
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(restart) + 17);
  const double offset = rng.uniform(0);

  // Total free-position coordinates drive the low-discrepancy dimension.
  int n_pos = 0;
  for (const Block& b : layout.blocks) n_pos += b.n_free;
  const std::vector<double> ld =
      n_pos > 0 ? rd_sequence_point(static_cast<std::size_t>(n_pos),
                                    static_cast<std::uint64_t>(restart), offset)
                : std::vector<double>{};

  static const double ball_shares[] = {0.5, 0.1, 0.9, 0.02, 0.3, 0.7, 0.05, 0.15};

  int pos_cursor = 0;
  for (std::size_t j = 0; j < layout.blocks.size(); ++j) {
    const Block& b = layout.blocks[j];
    for (int i = 0; i < b.n_free; ++i) {
      double t;
      if (restart == 0) {
        // Structured first restart: spread across the support, starting at
        // the snap candidates when available.
        const std::size_t n_snap = p.snap_points.size();
        const std::size_t idx = static_cast<std::size_t>(pos_cursor);
        if (n_snap > 0 && idx < n_snap) {
          x[b.pos_offset + i] = p.snap_points[(j + idx) % n_snap];
          ++pos_cursor;
          continue;
        }
        t = (static_cast<double>(i) + 0.5) / std::max(1, b.n_free);
      } else {
        t = ld[pos_cursor];
      }
      x[b.pos_offset + i] = p.support.lo + t * p.support.width();
      ++pos_cursor;
    }
    if (b.w_offset >= 0) {
      const int n_pinned = static_cast<int>(b.pinned.size());
      const double share =
          n_pinned > 0
              ? ball_shares[(static_cast<std::size_t>(restart) + j) %
                            (sizeof(ball_shares) / sizeof(double))]
              : 0.0;
      for (int i = 0; i < n_pinned; ++i) {
        x[b.w_offset + i] = share / n_pinned;
      }
      const int n_free_atoms = b.n_atoms - n_pinned;
      for (int i = 0; i < n_free_atoms; ++i) {
        const double u = rng.uniform(100 + static_cast<std::uint64_t>(j) * 64 + i);
        x[b.w_offset + n_pinned + i] =
            (1.0 - share) * (1.0 + 0.5 * u) / n_free_atoms;
      }
      project_simplex(x.data() + b.w_offset, b.n_atoms);
    }
    if (b.rho_offset >= 0) {
      const int pattern = (restart + static_cast<int>(j)) % 4;
      switch (pattern) {
        case 0: x[b.rho_offset] = layout.rho_box.hi; break;
        case 1: x[b.rho_offset] = layout.rho_box.lo; break;
        case 2: x[b.rho_offset] = 1.0; break;
        default:
          x[b.rho_offset] = layout.rho_box.lo +
                            layout.rho_box.width() *
                                rng.uniform(7 + static_cast<std::uint64_t>(j));
      }
      x[b.rho_offset] = layout.rho_box.clamp(x[b.rho_offset]);
    }
  }

  // Structured escape starts for the shrinking-ball limit. The optimal
  // configuration keeps one measure at an arbitrarily small but positive
  // data probability while it carries the extreme of the objective; every
  // other measure abandons the data event entirely. Random simplex starts
  // essentially never find that corner once several ball weights have to
  // vanish together (their product has no usable gradient), so two restarts
  // are seeded with the corner itself and local search only polishes it.
  const bool limit_escape =
      is_fractional_kind(p.kind) && p.limit_mode && !uses_rho(p) &&
      p.observation && p.observation->count() > 0 &&
      layout.blocks.size() >= 2 && (restart == 1 || restart == 2);
  if (limit_escape) {
    const double sgn = sense_sign(p.sense);
    std::vector<double> candidates = p.snap_points;
    candidates.push_back(p.support.lo);
    candidates.push_back(p.support.hi);
    double x_star = p.support.lo;
    double best = -std::numeric_limits<double>::infinity();
    for (double s : candidates) {
      const double v = sgn * p.phi_atom(p.support.clamp(s));
      if (v > best) {
        best = v;
        x_star = p.support.clamp(s);
      }
    }
    const std::size_t carrier = restart == 1 ? 0 : 1;
    for (std::size_t j = 0; j < layout.blocks.size(); ++j) {
      const Block& b = layout.blocks[j];
      const int n_pinned = static_cast<int>(b.pinned.size());
      const int n_free_atoms = b.n_atoms - n_pinned;
      if (j == carrier) {
        const double share = 1e-6;
        for (int i = 0; i < b.n_free; ++i) x[b.pos_offset + i] = x_star;
        for (int i = 0; i < n_pinned; ++i) x[b.w_offset + i] = share / n_pinned;
        for (int i = 0; i < n_free_atoms; ++i) {
          x[b.w_offset + n_pinned + i] = (1.0 - share) / n_free_atoms;
        }
      } else {
        for (int i = 0; i < b.n_free; ++i) {
          const double t = (static_cast<double>(i) + 0.5) / std::max(1, b.n_free);
          x[b.pos_offset + i] = p.support.lo + t * p.support.width();
        }
        for (int i = 0; i < n_pinned; ++i) x[b.w_offset + i] = 0.0;
        for (int i = 0; i < n_free_atoms; ++i) {
          x[b.w_offset + n_pinned + i] = 1.0 / n_free_atoms;
        }
      }
    }
  }
  project_point(p, layout, x);
  return x;
}

// Maps a warm-start measure list into the flat decision vector; returns
// nullopt when the atoms do not fit the layout.
std::optional<std::vector<double>> embed_warm_start(const ReducedProgram& p,
                                                    const Layout& layout,
                                                    const WarmStart& ws) {
  std::vector<double> x(layout.dim, 0.0);
  for (std::size_t j = 0; j < layout.blocks.size(); ++j) {
    const Block& b = layout.blocks[j];
    const DiscreteMeasure& mu = ws.measures[std::min(j, ws.measures.size() - 1)];
    const int n_pinned = static_cast<int>(b.pinned.size());
    std::vector<double> w(b.n_atoms, 0.0);
    std::vector<double> pos(b.n_free, p.support.lo);
    int free_used = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double xi = mu.atoms()[i];
      const double wi = mu.weights()[i];
      int slot = -1;
      for (int k = 0; k < n_pinned; ++k) {
        if (std::abs(b.pinned[k] - xi) < 1e-12) {
          slot = k;
          break;
        }
      }
      if (slot >= 0) {
        w[slot] += wi;
      } else {
        if (free_used >= b.n_free) return std::nullopt;
        pos[free_used] = xi;
        w[n_pinned + free_used] = wi;
        ++free_used;
      }
    }
    // Unused free slots duplicate the last atom with zero weight.
    for (int i = free_used; i < b.n_free; ++i) {
      pos[i] = mu.atoms().back();
    }
    for (int i = 0; i < b.n_free; ++i) x[b.pos_offset + i] = pos[i];
    if (b.w_offset >= 0) {
      for (int i = 0; i < b.n_atoms; ++i) x[b.w_offset + i] = w[i];
      project_simplex(x.data() + b.w_offset, b.n_atoms);
    }
    if (b.rho_offset >= 0) x[b.rho_offset] = layout.rho_box.clamp(1.0);
  }
  project_point(p, layout, x);
  return x;
}

// ---------------------------------------------------------------------------
// Local search

struct LocalRun {
  std::vector<double> x;
  Evaluation eval;
  bool converged = false;
  int iters = 0;
};

LocalRun local_search(const ReducedProgram& p, const Layout& layout,
                      const ProgramEvaluator& evaluator,
                      const SolverConfig& cfg, std::vector<double> x) {
  LocalRun run;
  double penalty = cfg.penalty_initial;
  Evaluation cur = evaluator.evaluate(x, penalty);
  const double domain_scale = std::max(p.support.width(), 1e-6);
  double step = 0.1 * domain_scale;
  const double h = cfg.fd_step;

  std::vector<double> grad(layout.dim, 0.0);
  std::vector<double> cand(layout.dim, 0.0);

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    // Central finite differences; only the touched measure is recomputed.
    for (int k = 0; k < layout.dim; ++k) {
      const int mj = evaluator.measure_of_coordinate(k);
      const double saved = x[k];
      x[k] = saved + h;
      const double up = evaluator.evaluate(x, penalty, &cur.stats, mj).merit;
      x[k] = saved - h;
      const double dn = evaluator.evaluate(x, penalty, &cur.stats, mj).merit;
      x[k] = saved;
      grad[k] = (up - dn) / (2.0 * h);
    }
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    if (gnorm < 1e-16) {
      if (!cur.feasible && penalty < cfg.penalty_max) {
        penalty *= cfg.penalty_growth;
        cur = evaluator.evaluate(x, penalty);
        step = 0.1 * domain_scale;
        continue;
      }
      run.converged = true;
      break;
    }

    bool accepted = false;
    double s = step;
    for (int bt = 0; bt < 45; ++bt) {
      for (int k = 0; k < layout.dim; ++k) {
        cand[k] = x[k] + s * grad[k] / gnorm;
      }
      project_point(p, layout, cand);
      double move = 0.0;
      for (int k = 0; k < layout.dim; ++k) move = std::max(move, std::abs(cand[k] - x[k]));
      if (move < cfg.step_tol) break;
      const Evaluation ev = evaluator.evaluate(cand, penalty);
      if (ev.merit > cur.merit + 1e-15) {
        x = cand;
        cur = ev;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (accepted) {
      step = std::min(s * 1.6, domain_scale);
    } else {
      if (!cur.feasible && penalty < cfg.penalty_max) {
        penalty *= cfg.penalty_growth;
        cur = evaluator.evaluate(x, penalty);
        step = 0.1 * domain_scale;
        continue;
      }
      run.converged = true;
      break;
    }
  }

  // Snap polish: try placing each free position exactly at a kink/candidate
  // point; keep strict merit improvements that do not hurt feasibility.
  if (!p.snap_points.empty()) {
    const double high_penalty = std::max(penalty, 1e6);
    cur = evaluator.evaluate(x, high_penalty);
    for (int round = 0; round < 3; ++round) {
      bool changed = false;
      for (int k = 0; k < layout.dim; ++k) {
        bool is_pos = false;
        for (const Block& b : layout.blocks) {
          if (k >= b.pos_offset && k < b.pos_offset + b.n_free) is_pos = true;
        }
        if (!is_pos) continue;
        const int mj = evaluator.measure_of_coordinate(k);
        const double saved = x[k];
        double best_val = saved;
        double best_merit = cur.merit;
        for (double sp : p.snap_points) {
          if (sp == saved) continue;
          x[k] = sp;
          const Evaluation ev = evaluator.evaluate(x, high_penalty, &cur.stats, mj);
          if (ev.merit > best_merit + 1e-15 &&
              ev.violation <= cur.violation + kLpTol) {
            best_val = sp;
            best_merit = ev.merit;
          }
        }
        x[k] = best_val;
        if (best_val != saved) {
          cur = evaluator.evaluate(x, high_penalty);
          changed = true;
        }
      }
      if (!changed) break;
    }
    cur = evaluator.evaluate(x, penalty);
  }

  run.x = std::move(x);
  run.eval = std::move(cur);
  run.iters = iter;
  return run;
}

// ---------------------------------------------------------------------------
// Witness extraction

SolveResult extract_result(const ReducedProgram& p, const Layout& layout,
                           const ProgramEvaluator& evaluator,
                           const SolverConfig& cfg, const LocalRun& best,
                           int restarts_used) {
  SolveResult res;
  res.restarts_used = restarts_used;

  std::vector<double> x = best.x;
  Evaluation ev = evaluator.evaluate(x, cfg.penalty_max);

  // Prune negligible weights when doing so leaves the evaluation intact.
  if (layout.outer_weights) {
    std::vector<double> pruned = x;
    bool any = false;
    for (const Block& b : layout.blocks) {
      for (int i = 0; i < b.n_atoms; ++i) {
        const double w = pruned[b.w_offset + i];
        if (w > 0.0 && w < kPruneWeight) {
          pruned[b.w_offset + i] = 0.0;
          any = true;
        }
      }
    }
    if (any) {
      for (const Block& b : layout.blocks) {
        double sum = 0.0;
        for (int i = 0; i < b.n_atoms; ++i) sum += pruned[b.w_offset + i];
        if (sum > 0.0) {
          for (int i = 0; i < b.n_atoms; ++i) pruned[b.w_offset + i] /= sum;
        }
      }
      const Evaluation pev = evaluator.evaluate(pruned, cfg.penalty_max);
      if (pev.feasible == ev.feasible &&
          std::abs(pev.objective - ev.objective) <= 1e-9 &&
          pev.violation <= ev.violation + 1e-12) {
        x = std::move(pruned);
        ev = pev;
      }
    }
  }

  res.constraint_residual = ev.violation;
  const bool feasible = ev.violation <= 1e-6;
  res.status = !feasible ? SolveStatus::Infeasible
               : best.converged ? SolveStatus::Converged
                                : SolveStatus::MaxIter;
  if (feasible) res.value = ev.objective;

  // Build witness measures.
  if (layout.outer_weights) {
    double v_sum = 0.0;
    for (double vj : ev.v) v_sum += vj;
    for (std::size_t j = 0; j < layout.blocks.size(); ++j) {
      const Block& b = layout.blocks[j];
      std::vector<double> atoms;
      std::vector<double> weights;
      const int n_pinned = static_cast<int>(b.pinned.size());
      for (int i = 0; i < b.n_atoms; ++i) {
        const double w = x[b.w_offset + i];
        const double xi = i < n_pinned ? b.pinned[i] : x[b.pos_offset + (i - n_pinned)];
        if (w > 0.0 || atoms.empty()) {
          atoms.push_back(xi);
          weights.push_back(w);
        }
      }
      double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
      if (wsum <= 0.0) {
        atoms = {p.support.lo};
        weights = {1.0};
        wsum = 1.0;
      }
      for (double& w : weights) w /= wsum;
      res.witness.emplace_back(atoms, weights, p.support);
      const double dp = ev.stats.empty() ? 1.0 : ev.stats[j].data_prob;
      res.witness_denominators.push_back(dp);
      res.witness_weights.push_back(v_sum > 0.0 ? ev.v[j] / v_sum : 0.0);
      if (res.witness_weights.back() > kNearSingular && dp < kNearSingular) {
        res.near_singular = true;
      }
    }
  } else {
    const Block& b = layout.blocks[0];
    std::vector<double> atoms;
    std::vector<double> weights;
    for (int i = 0; i < b.n_free; ++i) {
      if (ev.v[i] > kPruneWeight || atoms.empty()) {
        atoms.push_back(x[b.pos_offset + i]);
        weights.push_back(std::max(ev.v[i], 0.0));
      }
    }
    const bool positive = p.kind == ProgramKind::PositiveMeasure;
    if (!positive) {
      double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
      if (wsum > 0.0) {
        for (double& w : weights) w /= wsum;
      }
    }
    res.witness.emplace_back(atoms, weights, p.support, positive);
    res.witness_weights.push_back(1.0);
    res.witness_denominators.push_back(1.0);
  }
  return res;
}

bool better_run(const ReducedProgram& p, const LocalRun& a, const LocalRun& b,
                double constraint_tol) {
  // True when a is strictly better than b.
  const bool fa = a.eval.violation <= constraint_tol;
  const bool fb = b.eval.violation <= constraint_tol;
  if (fa != fb) return fa;
  const double sgn = sense_sign(p.sense);
  if (fa && fb) return sgn * a.eval.objective > sgn * b.eval.objective + 1e-14;
  return a.eval.violation < b.eval.violation;
}

}  // namespace

SolveResult solve(const ReducedProgram& program, const SolverConfig& config) {
  if (program.measures.empty()) {
    throw std::invalid_argument("solve: program has no measure variables");
  }
  if (!program.phi_atom) {
    throw std::invalid_argument("solve: program has no objective evaluator");
  }
  program.targets.validate();

  const Layout layout = make_layout(program);
  ProgramEvaluator evaluator(program, layout);

  std::optional<LocalRun> best;
  double max_denominator_seen = 0.0;
  const int restarts = std::max(1, config.restarts);

  for (int r = 0; r < restarts; ++r) {
    std::vector<double> x0;
    const std::size_t wi = static_cast<std::size_t>(r);
    if (wi < config.warm_starts.size() &&
        !config.warm_starts[wi].measures.empty()) {
      auto embedded = embed_warm_start(program, layout, config.warm_starts[wi]);
      x0 = embedded ? *embedded : initial_point(program, layout, config, r);
    } else {
      x0 = initial_point(program, layout, config, r);
    }
    LocalRun run = local_search(program, layout, evaluator, config, std::move(x0));
    for (const MeasureStats& st : run.eval.stats) {
      max_denominator_seen = std::max(max_denominator_seen, st.data_prob);
    }
    if (!best || better_run(program, run, *best, config.constraint_tol)) {
      best = std::move(run);
    }
  }

  SolveResult res =
      extract_result(program, layout, evaluator, config, *best, restarts);
  if (is_fractional_kind(program.kind) &&
      res.status == SolveStatus::Infeasible &&
      max_denominator_seen < kDenominatorFloor && program.observation &&
      program.observation->count() > 0) {
    throw std::runtime_error("conditioning on null event");
  }
  return res;
}

SolveResult solve_fractional(const ReducedProgram& program,
                             const SolverConfig& config) {
  if (program.kind != ProgramKind::PosteriorFractional) {
    throw std::invalid_argument(
        "solve_fractional: program is not a posterior-fractional reduction");
  }
  return solve(program, config);
}

double lambda_threshold(const std::function<double(double)>& family_value,
                        double lo, double hi, double tol) {
  if (!(hi > lo)) throw std::invalid_argument("lambda_threshold: bad bracket");
  if (family_value(hi) > 0.0) {
    throw std::runtime_error("lambda_threshold: bracket too small");
  }
  if (family_value(lo) <= 0.0) return lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (family_value(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double replay_value(const ReducedProgram& program, const SolveResult& result) {
  if (result.witness.empty()) {
    throw std::invalid_argument("replay_value: result has no witness");
  }
  auto phi_of = [&](const DiscreteMeasure& mu) {
    return mu.expectation(program.phi_atom);
  };
  switch (program.kind) {
    case ProgramKind::PriorPrimary:
    case ProgramKind::PositiveMeasure:
      return phi_of(result.witness[0]);
    case ProgramKind::PosteriorFractional: {
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < result.witness.size(); ++j) {
        double dp = result.witness_denominators[j];
        if (program.observation && !program.limit_mode) {
          dp = data_probability(result.witness[j], *program.observation);
        }
        num += result.witness_weights[j] * phi_of(result.witness[j]) * dp;
        den += result.witness_weights[j] * dp;
      }
      if (den < kDenominatorFloor) {
        throw std::runtime_error("conditioning on null event");
      }
      return num / den;
    }
    case ProgramKind::LambdaThreshold: {
      double acc = 0.0;
      for (std::size_t j = 0; j < result.witness.size(); ++j) {
        double dp = result.witness_denominators[j];
        if (program.observation && !program.limit_mode) {
          dp = data_probability(result.witness[j], *program.observation);
        }
        acc += result.witness_weights[j] *
               (phi_of(result.witness[j]) - program.lambda) * dp;
      }
      return acc;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace brittle
