#include "brittle/serialization.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace brittle {

namespace {

[[noreturn]] void fail(const std::string& context, const std::string& what) {
  throw std::invalid_argument("config: " + context + ": " + what);
}

double plain_number(const Json& value, const std::string& context) {
  if (!value.is_number()) fail(context, "expected a number");
  return value.get<double>();
}

std::vector<double> number_array(const Json& value,
                                 const std::string& context) {
  if (!value.is_array()) fail(context, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& entry : value) out.push_back(plain_number(entry, context));
  return out;
}

std::string status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max-iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

}  // namespace

void require_fields(const Json& obj, const std::string& context,
                    std::initializer_list<const char*> required,
                    std::initializer_list<const char*> optional) {
  if (!obj.is_object()) fail(context, "expected an object");
  for (const char* key : required) {
    if (!obj.contains(key)) {
      fail(context, std::string("missing field \"") + key + "\"");
    }
  }
  std::set<std::string> allowed;
  for (const char* key : required) allowed.insert(key);
  for (const char* key : optional) allowed.insert(key);
  for (const auto& item : obj.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      fail(context, "unknown field \"" + item.key() + "\"");
    }
  }
}

Json number_to_json(double value) {
  if (std::isnan(value)) return Json("nan");
  if (std::isinf(value)) return Json(value > 0 ? "+inf" : "-inf");
  return Json(value);
}

double number_from_json(const Json& value, const std::string& context) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "+inf" || text == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    fail(context, "unrecognised numeric string \"" + text + "\"");
  }
  fail(context, "expected a number or \"+inf\"/\"-inf\"/\"nan\"");
}

Json to_json(const Interval& interval) {
  return Json{{"lo", number_to_json(interval.lo)},
              {"hi", number_to_json(interval.hi)}};
}

Interval interval_from_json(const Json& value, const std::string& context) {
  require_fields(value, context, {"lo", "hi"});
  return Interval{number_from_json(value.at("lo"), context + ".lo"),
                  number_from_json(value.at("hi"), context + ".hi")};
}

Json to_json(const DiscreteMeasure& measure) {
  Json out;
  out["atoms"] = measure.atoms();
  out["weights"] = measure.weights();
  out["support"] = to_json(measure.support());
  if (measure.is_positive()) out["positive"] = true;
  return out;
}

DiscreteMeasure measure_from_json(const Json& value) {
  const std::string context = "measure";
  require_fields(value, context, {"atoms", "weights"},
                 {"support", "positive"});
  Interval support{0.0, 1.0};
  if (value.contains("support")) {
    support = interval_from_json(value.at("support"), context + ".support");
  }
  const bool positive =
      value.contains("positive") && value.at("positive").is_boolean()
          ? value.at("positive").get<bool>()
          : false;
  return DiscreteMeasure(number_array(value.at("atoms"), context + ".atoms"),
                         number_array(value.at("weights"),
                                      context + ".weights"),
                         support, positive);
}

Json to_json(const MomentMap& map) {
  Json components = Json::array();
  for (std::size_t i = 0; i < map.dimension(); ++i) {
    const auto& comp = map.component(i);
    switch (comp.kind) {
      case MomentMap::ComponentKind::Power:
        components.push_back(Json{{"kind", "power"}, {"order", comp.p0}});
        break;
      case MomentMap::ComponentKind::Threshold:
        components.push_back(Json{{"kind", "threshold"}, {"at", comp.p0}});
        break;
      case MomentMap::ComponentKind::Ball:
        components.push_back(Json{{"kind", "ball"},
                                  {"center", comp.p0},
                                  {"radius", comp.p1}});
        break;
      case MomentMap::ComponentKind::Custom:
        throw std::invalid_argument(
            "serialization: custom moment component \"" + comp.name +
            "\" has no serialised form");
    }
  }
  return components;
}

MomentMap moment_map_from_json(const Json& value) {
  const std::string context = "moments";
  if (!value.is_array()) fail(context, "expected an array of components");
  MomentMap map;
  for (const auto& comp : value) {
    require_fields(comp, context + "[]", {"kind"},
                   {"order", "at", "center", "radius"});
    const std::string kind = comp.at("kind").is_string()
                                 ? comp.at("kind").get<std::string>()
                                 : "";
    if (kind == "power") {
      require_fields(comp, context + ".power", {"kind", "order"});
      const double order = plain_number(comp.at("order"), context + ".order");
      if (order < 1.0 || order != std::floor(order)) {
        fail(context, "power order must be a positive integer");
      }
      map.add_power(static_cast<int>(order));
    } else if (kind == "threshold") {
      require_fields(comp, context + ".threshold", {"kind", "at"});
      map.add_threshold(plain_number(comp.at("at"), context + ".at"));
    } else if (kind == "ball") {
      require_fields(comp, context + ".ball", {"kind", "center", "radius"});
      map.add_ball(plain_number(comp.at("center"), context + ".center"),
                   plain_number(comp.at("radius"), context + ".radius"));
    } else {
      fail(context, "unknown component kind \"" + kind + "\"");
    }
  }
  return map;
}

Json to_json(const QuantityOfInterest& phi) {
  switch (phi.kind()) {
    case QuantityOfInterest::Kind::TailProbability:
      return Json{{"kind", "tail"}, {"threshold", phi.tail_threshold()}};
    case QuantityOfInterest::Kind::Mean:
      return Json{{"kind", "mean"}};
    case QuantityOfInterest::Kind::SetProbability: {
      Json set = Json::array();
      for (const auto& piece : phi.set()) set.push_back(to_json(piece));
      return Json{{"kind", "set-probability"}, {"set", set}};
    }
    case QuantityOfInterest::Kind::Custom:
      break;
  }
  throw std::invalid_argument("serialization: custom quantity of interest \"" +
                              phi.name() + "\" has no serialised form");
}

QuantityOfInterest qoi_from_json(const Json& value) {
  const std::string context = "quantity";
  require_fields(value, context, {"kind"}, {"threshold", "set"});
  const std::string kind = value.at("kind").is_string()
                               ? value.at("kind").get<std::string>()
                               : "";
  if (kind == "tail") {
    require_fields(value, context + ".tail", {"kind", "threshold"});
    return QuantityOfInterest::tail(
        plain_number(value.at("threshold"), context + ".threshold"));
  }
  if (kind == "mean") {
    require_fields(value, context + ".mean", {"kind"});
    return QuantityOfInterest::mean();
  }
  if (kind == "set-probability") {
    require_fields(value, context + ".set-probability", {"kind", "set"});
    if (!value.at("set").is_array()) fail(context, "set must be an array");
    IntervalUnion set;
    for (const auto& piece : value.at("set")) {
      set.push_back(interval_from_json(piece, context + ".set[]"));
    }
    return QuantityOfInterest::set_probability(std::move(set));
  }
  fail(context, "unknown quantity kind \"" + kind + "\"");
}

Json to_json(const Observation& obs) {
  return Json{{"centers", obs.centers}, {"radius", obs.radius}};
}

Observation observation_from_json(const Json& value) {
  const std::string context = "observation";
  require_fields(value, context, {"centers", "radius"});
  return Observation(number_array(value.at("centers"), context + ".centers"),
                     plain_number(value.at("radius"), context + ".radius"));
}

Json to_json(const DataProbabilityBand& band) {
  return Json{{"mode", band.mode == DataProbabilityBand::Mode::Joint
                           ? "joint"
                           : "per-ball"},
              {"param", band.param}};
}

DataProbabilityBand band_from_json(const Json& value) {
  const std::string context = "band";
  require_fields(value, context, {"mode", "param"});
  const std::string mode = value.at("mode").is_string()
                               ? value.at("mode").get<std::string>()
                               : "";
  DataProbabilityBand band;
  if (mode == "joint") {
    band.mode = DataProbabilityBand::Mode::Joint;
  } else if (mode == "per-ball") {
    band.mode = DataProbabilityBand::Mode::PerBall;
  } else {
    fail(context, "unknown band mode \"" + mode + "\"");
  }
  band.param = plain_number(value.at("param"), context + ".param");
  if (!(band.param >= 1.0)) fail(context, "param must be >= 1");
  return band;
}

Json to_json(const PriorClassSpec& spec) {
  Json out;
  out["moments"] = to_json(spec.moment_map);
  Json targets = Json::array();
  for (const auto& target : spec.constraints.targets) {
    targets.push_back(to_json(target));
  }
  out["targets"] = targets;
  out["support"] = to_json(spec.support);
  if (spec.band) out["band"] = to_json(*spec.band);
  return out;
}

PriorClassSpec prior_class_from_json(const Json& value) {
  const std::string context = "prior-class";
  require_fields(value, context, {"moments", "targets"},
                 {"support", "band"});
  PriorClassSpec spec;
  spec.moment_map = moment_map_from_json(value.at("moments"));
  if (!value.at("targets").is_array()) {
    fail(context, "targets must be an array");
  }
  for (const auto& target : value.at("targets")) {
    spec.constraints.targets.push_back(
        interval_from_json(target, context + ".targets[]"));
  }
  if (spec.constraints.targets.size() != spec.moment_map.dimension()) {
    fail(context, "targets and moments must have matching lengths");
  }
  if (value.contains("support")) {
    spec.support =
        interval_from_json(value.at("support"), context + ".support");
  }
  if (value.contains("band")) spec.band = band_from_json(value.at("band"));
  return spec;
}

Json to_json(const SolveResult& result) {
  Json out;
  out["value"] = number_to_json(result.value);
  out["status"] = status_name(result.status);
  Json witness = Json::array();
  for (const auto& measure : result.witness) {
    witness.push_back(to_json(measure));
  }
  out["witness"] = witness;
  out["witness_weights"] = result.witness_weights;
  out["witness_denominators"] = result.witness_denominators;
  out["restarts_used"] = result.restarts_used;
  out["constraint_residual"] = number_to_json(result.constraint_residual);
  out["near_singular"] = result.near_singular;
  return out;
}

Json to_json(const BoundSandwich& sandwich) {
  Json out;
  out["L_A"] = number_to_json(sandwich.L_A);
  out["L_Pi"] = number_to_json(sandwich.L_Pi);
  out["L_API"] = number_to_json(sandwich.L_API);
  out["U_API"] = number_to_json(sandwich.U_API);
  out["U_Pi"] = number_to_json(sandwich.U_Pi);
  out["U_A"] = number_to_json(sandwich.U_A);
  return out;
}

Json to_json(const ScenarioReport& report) {
  Json out;
  out["name"] = report.name;
  out["parameters"] = report.parameters;
  out["labels"] = report.labels;
  Json computed = Json::array();
  for (double v : report.computed) computed.push_back(number_to_json(v));
  out["computed"] = computed;
  Json expected = Json::array();
  for (double v : report.expected) expected.push_back(number_to_json(v));
  out["expected"] = expected;
  out["provenance"] = report.provenance;
  out["tolerance"] = report.tolerance;
  out["abs_error"] = number_to_json(report.abs_error);
  out["pass"] = report.pass;
  out["flagged"] = report.flagged;
  return out;
}

}  // namespace brittle
