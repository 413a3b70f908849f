#include "brittle/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "brittle/posterior.hpp"
#include "brittle/reduction.hpp"
#include "brittle/scenarios.hpp"
#include "brittle/serialization.hpp"
#include "brittle/solver.hpp"

namespace brittle {

namespace {

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string status_text(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max-iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

Json load_config(const std::string& path) {
  if (path.empty()) {
    throw std::invalid_argument("config: --spec PATH is required");
  }
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open \"" + path + "\"");
  }
  Json root;
  try {
    root = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " +
                                std::string(e.what()));
  }
  if (!root.is_object() || !root.contains("version")) {
    throw std::invalid_argument(
        "config: top-level object with a \"version\" field required");
  }
  if (!root.at("version").is_number_integer() ||
      root.at("version").get<int>() != 1) {
    throw std::invalid_argument("config: unsupported version (expected 1)");
  }
  return root;
}

SolverConfig make_solver_config(const RunConfig& config) {
  SolverConfig solver;
  solver.seed = resolve_seed(config.seed);
  if (config.restarts) {
    if (*config.restarts < 1) {
      throw std::invalid_argument("config: --restarts must be >= 1");
    }
    solver.restarts = *config.restarts;
  }
  return solver;
}

// Emits `text` to stdout and, when --out is given, byte-identically to
// <out>/<command>.<ext>.
void emit(const RunConfig& config, std::ostream& out,
          const std::string& text) {
  out << text;
  if (config.out_dir.empty()) return;
  std::filesystem::create_directories(config.out_dir);
  const std::string ext = config.format == "table" ? "txt" : config.format;
  const std::filesystem::path path =
      std::filesystem::path(config.out_dir) / (config.command + "." + ext);
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::invalid_argument("config: cannot write \"" + path.string() +
                                "\"");
  }
  file << text;
}

const std::vector<double>* find_sweep(const RunConfig& config,
                                      const std::string& name) {
  for (const auto& [key, values] : config.sweeps) {
    if (key == name) return &values;
  }
  return nullptr;
}

void check_known_sweeps(const RunConfig& config,
                        std::initializer_list<const char*> known) {
  for (const auto& [key, values] : config.sweeps) {
    if (std::find_if(known.begin(), known.end(), [&](const char* name) {
          return key == name;
        }) == known.end()) {
      throw std::invalid_argument("config: unknown sweep parameter \"" + key +
                                  "\"");
    }
    if (values.empty()) {
      throw std::invalid_argument("config: empty sweep \"" + key + "\"");
    }
  }
}

double config_number(const Json& root, const char* key, double fallback) {
  if (!root.contains(key)) return fallback;
  return number_from_json(root.at(key), std::string("config.") + key);
}

int config_int(const Json& root, const char* key, int fallback) {
  if (!root.contains(key)) return fallback;
  const double v = number_from_json(root.at(key), std::string("config.") + key);
  if (v != std::floor(v)) {
    throw std::invalid_argument(std::string("config: ") + key +
                                " must be an integer");
  }
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// prior
// ---------------------------------------------------------------------------

int cmd_prior(const RunConfig& config, std::ostream& out) {
  const Json root = load_config(config.spec_path);
  require_fields(root, "config", {"version", "prior_class", "quantity"});
  const PriorClassSpec spec = prior_class_from_json(root.at("prior_class"));
  const QuantityOfInterest phi = qoi_from_json(root.at("quantity"));
  check_known_sweeps(config, {});
  const SolverConfig solver = make_solver_config(config);

  const SolveResult upper =
      solve(reduce_prior(phi, spec, ObjectiveSense::Sup), solver);
  const SolveResult lower =
      solve(reduce_prior(phi, spec, ObjectiveSense::Inf), solver);

  const std::pair<const char*, const SolveResult*> items[] = {
      {"upper", &upper}, {"lower", &lower}};
  std::ostringstream text;
  if (config.format == "csv") {
    text << "bound,value,status,residual,restarts\n";
    for (const auto& [name, result] : items) {
      text << name << "," << format_value(result->value) << ","
           << status_text(result->status) << ","
           << format_value(result->constraint_residual) << ","
           << result->restarts_used << "\n";
    }
  } else if (config.format == "json") {
    Json doc;
    doc["upper"] = to_json(upper);
    doc["lower"] = to_json(lower);
    text << doc.dump(2) << "\n";
  } else {
    text << "U(Pi) = " << format_value(upper.value) << "  ["
         << status_text(upper.status) << "]\n"
         << "L(Pi) = " << format_value(lower.value) << "  ["
         << status_text(lower.status) << "]\n";
    for (const auto& [name, result] : items) {
      text << name << " witness:";
      for (const auto& mu : result->witness) {
        text << " {";
        for (std::size_t i = 0; i < mu.size(); ++i) {
          if (i) text << ", ";
          text << format_value(mu.atoms()[i]) << ":"
               << format_value(mu.weights()[i]);
        }
        text << "}";
      }
      text << "\n";
    }
  }
  emit(config, out, text.str());
  return upper.status == SolveStatus::Infeasible ||
                 lower.status == SolveStatus::Infeasible
             ? 2
             : 0;
}

// ---------------------------------------------------------------------------
// posterior
// ---------------------------------------------------------------------------

struct PosteriorRow {
  std::string param;
  const char* bound;
  SolveResult result;
};

int cmd_posterior(const RunConfig& config, std::ostream& out) {
  const Json root = load_config(config.spec_path);
  require_fields(root, "config",
                 {"version", "prior_class", "quantity", "observation"});
  PriorClassSpec spec = prior_class_from_json(root.at("prior_class"));
  const QuantityOfInterest phi = qoi_from_json(root.at("quantity"));
  Observation obs = observation_from_json(root.at("observation"));
  check_known_sweeps(config, {"delta", "alpha", "gamma"});
  const SolverConfig solver = make_solver_config(config);

  PosteriorReductionOptions options;
  options.limit_mode = config.limit_mode;

  if (config.delta) {
    obs = Observation(obs.centers, *config.delta);
  }

  // Sweeps: over the ball radius, or over a band parameter.
  const std::vector<double>* deltas = find_sweep(config, "delta");
  const std::vector<double>* alphas = find_sweep(config, "alpha");
  const std::vector<double>* gammas = find_sweep(config, "gamma");
  if ((deltas != nullptr) + (alphas != nullptr) + (gammas != nullptr) > 1) {
    throw std::invalid_argument("config: at most one sweep parameter");
  }

  std::vector<PosteriorRow> rows;
  bool any_infeasible = false;
  const auto run_both = [&](const std::string& param) {
    const SolveResult upper = posterior_upper_bound(phi, spec, obs, solver,
                                                    options);
    const SolveResult lower = posterior_lower_bound(phi, spec, obs, solver,
                                                    options);
    rows.push_back({param, "upper", upper});
    rows.push_back({param, "lower", lower});
    any_infeasible = any_infeasible ||
                     upper.status == SolveStatus::Infeasible ||
                     lower.status == SolveStatus::Infeasible;
  };

  if (deltas != nullptr) {
    for (double d : *deltas) {
      obs = Observation(obs.centers, d);
      run_both(format_value(d));
    }
  } else if (alphas != nullptr || gammas != nullptr) {
    const bool joint = alphas != nullptr;
    for (double p : joint ? *alphas : *gammas) {
      spec.band = DataProbabilityBand{joint
                                          ? DataProbabilityBand::Mode::Joint
                                          : DataProbabilityBand::Mode::PerBall,
                                      p};
      run_both(format_value(p));
    }
  } else {
    run_both(config.limit_mode ? "limit" : format_value(obs.radius));
  }

  std::ostringstream text;
  if (config.format == "csv") {
    text << "param,bound,value,status,residual,restarts\n";
    for (const auto& row : rows) {
      text << row.param << "," << row.bound << ","
           << format_value(row.result.value) << ","
           << status_text(row.result.status) << ","
           << format_value(row.result.constraint_residual) << ","
           << row.result.restarts_used << "\n";
    }
  } else if (config.format == "json") {
    Json doc = Json::array();
    for (const auto& row : rows) {
      Json entry;
      entry["param"] = row.param;
      entry["bound"] = row.bound;
      entry["result"] = to_json(row.result);
      doc.push_back(entry);
    }
    text << doc.dump(2) << "\n";
  } else {
    for (const auto& row : rows) {
      text << (row.bound[0] == 'u' ? "U" : "L") << "(Pi|B)[" << row.param
           << "] = " << format_value(row.result.value) << "  ["
           << status_text(row.result.status)
           << (row.result.near_singular ? ", near-singular" : "") << "]\n";
    }
  }
  emit(config, out, text.str());
  return any_infeasible ? 2 : 0;
}

// ---------------------------------------------------------------------------
// sandwich
// ---------------------------------------------------------------------------

int cmd_sandwich(const RunConfig& config, std::ostream& out) {
  const Json root = load_config(config.spec_path);
  require_fields(root, "config", {"version", "prior_class", "quantity"},
                 {"observation"});
  const PriorClassSpec spec = prior_class_from_json(root.at("prior_class"));
  const QuantityOfInterest phi = qoi_from_json(root.at("quantity"));
  std::optional<Observation> obs;
  if (root.contains("observation")) {
    obs = observation_from_json(root.at("observation"));
  }
  check_known_sweeps(config, {});
  const SolverConfig solver = make_solver_config(config);

  const BoundSandwich chain =
      info_bound_sandwich(phi, spec, obs, GridSpec{}, solver);

  std::ostringstream text;
  const std::pair<const char*, double> entries[] = {
      {"L_A", chain.L_A},     {"L_Pi", chain.L_Pi}, {"L_API", chain.L_API},
      {"U_API", chain.U_API}, {"U_Pi", chain.U_Pi}, {"U_A", chain.U_A}};
  if (config.format == "csv") {
    text << "bound,value\n";
    for (const auto& [name, value] : entries) {
      text << name << "," << format_value(value) << "\n";
    }
  } else if (config.format == "json") {
    text << to_json(chain).dump(2) << "\n";
  } else {
    for (const auto& [name, value] : entries) {
      text << name << " = " << format_value(value) << "\n";
    }
    text << (chain.ordered() ? "chain ordered\n" : "chain NOT ordered\n");
  }
  emit(config, out, text.str());
  return 0;
}

// ---------------------------------------------------------------------------
// scenario-report commands (brittleness, curve, perturb, scenarios)
// ---------------------------------------------------------------------------

std::string report_csv_header() {
  return "name,parameters,abs_error,tolerance,pass,flagged\n";
}

std::string report_csv_row(const ScenarioReport& report) {
  std::ostringstream row;
  row << report.name << ",\"" << report.parameters << "\","
      << format_value(report.abs_error) << ","
      << format_value(report.tolerance) << ","
      << (report.pass ? "true" : "false") << ","
      << (report.flagged ? "true" : "false") << "\n";
  return row.str();
}

std::string report_table(const ScenarioReport& report) {
  std::ostringstream text;
  text << report.name << " (" << report.parameters << ")  ["
       << report.provenance << "]\n";
  for (std::size_t i = 0; i < report.computed.size(); ++i) {
    text << "  " << (i < report.labels.size() ? report.labels[i] : "value")
         << " = " << format_value(report.computed[i]);
    if (i < report.expected.size() && std::isfinite(report.expected[i])) {
      text << "  (expected " << format_value(report.expected[i]) << ")";
    }
    text << "\n";
  }
  text << "  abs_error = " << format_value(report.abs_error)
       << "  tolerance = " << format_value(report.tolerance) << "  "
       << (report.pass ? "PASS" : "FAIL")
       << (report.flagged ? " [flagged]" : "") << "\n";
  return text.str();
}

void emit_reports(const RunConfig& config, std::ostream& out,
                  const std::vector<ScenarioReport>& reports) {
  std::ostringstream text;
  if (config.format == "csv") {
    text << report_csv_header();
    for (const auto& report : reports) text << report_csv_row(report);
  } else if (config.format == "json") {
    Json doc = Json::array();
    for (const auto& report : reports) doc.push_back(to_json(report));
    text << doc.dump(2) << "\n";
  } else {
    for (const auto& report : reports) text << report_table(report);
  }
  emit(config, out, text.str());
}

int cmd_brittleness(const RunConfig& config, std::ostream& out) {
  const Json root = load_config(config.spec_path);
  require_fields(root, "config", {"version", "k", "n"}, {"delta"});
  const int k = config_int(root, "k", 0);
  const int n = config_int(root, "n", 0);
  double delta = config_number(root, "delta", 0.01);
  if (config.delta) delta = *config.delta;
  check_known_sweeps(config, {});

  const ScenarioReport report =
      scenario_moment_class(k, n, delta, resolve_seed(config.seed));
  emit_reports(config, out, {report});
  return 0;
}

int cmd_curve(const RunConfig& config, std::ostream& out) {
  const Json root = load_config(config.spec_path);
  require_fields(root, "config", {"version", "curve", "a", "m"},
                 {"n", "gamma"});
  const std::string curve = root.at("curve").is_string()
                                ? root.at("curve").get<std::string>()
                                : "";
  const double a = config_number(root, "a", 0.75);
  const double m = config_number(root, "m", 0.375);
  const std::uint64_t seed = resolve_seed(config.seed);

  std::vector<ScenarioReport> reports;
  if (curve == "learning") {
    check_known_sweeps(config, {"alpha"});
    const std::vector<double>* alphas = find_sweep(config, "alpha");
    const std::vector<double> defaults = {1.0, 2.0, 10.0};
    for (double alpha : alphas != nullptr ? *alphas : defaults) {
      reports.push_back(scenario_learning_curve(alpha, a, m, seed));
    }
  } else if (curve == "gamma") {
    check_known_sweeps(config, {"gamma", "n"});
    const std::vector<double>* gammas = find_sweep(config, "gamma");
    const std::vector<double>* ns = find_sweep(config, "n");
    if (gammas != nullptr && ns != nullptr) {
      throw std::invalid_argument("config: at most one sweep parameter");
    }
    if (ns != nullptr) {
      const double gamma = config_number(root, "gamma", 1.2);
      for (double n_value : *ns) {
        reports.push_back(scenario_gamma_curve(
            gamma, static_cast<int>(n_value), a, m, seed));
      }
    } else {
      const int n = config_int(root, "n", 5);
      const std::vector<double> defaults = {1.0, 1.2, 1.5, 2.0};
      for (double gamma : gammas != nullptr ? *gammas : defaults) {
        reports.push_back(scenario_gamma_curve(gamma, n, a, m, seed));
      }
    }
  } else {
    throw std::invalid_argument(
        "config: curve must be \"learning\" or \"gamma\"");
  }

  emit_reports(config, out, reports);
  for (const auto& report : reports) {
    if (!report.pass) return 2;
  }
  return 0;
}

int cmd_perturb(const RunConfig& config, std::ostream& out) {
  // All perturbation parameters have defaults, so the spec file is optional.
  const Json root = config.spec_path.empty()
                        ? Json{{"version", 1}}
                        : load_config(config.spec_path);
  require_fields(root, "config", {"version"},
                 {"delta", "delta_c", "gap", "theta_grid", "x_grid"});
  double delta = config_number(root, "delta", 0.005);
  if (config.delta) delta = *config.delta;
  const double delta_c = config_number(root, "delta_c", 0.01);
  const double gap = config_number(root, "gap", 1e-9);
  const int theta_grid = config_int(root, "theta_grid", 4001);
  const int x_grid = config_int(root, "x_grid", 1201);
  check_known_sweeps(config, {});

  const ScenarioReport report =
      scenario_model_ab(delta, delta_c, gap, theta_grid, x_grid);
  emit_reports(config, out, {report});
  return report.pass ? 0 : 2;
}

int cmd_scenarios(const RunConfig& config, std::ostream& out,
                  std::ostream& err) {
  const auto& registry = scenario_registry();
  std::vector<const ScenarioEntry*> selected;
  if (config.args.empty() || config.all) {
    for (const auto& entry : registry) selected.push_back(&entry);
  } else {
    for (const auto& name : config.args) {
      const auto it = std::find_if(
          registry.begin(), registry.end(),
          [&](const ScenarioEntry& entry) { return entry.name == name; });
      if (it == registry.end()) {
        err << "unknown scenario: " << name << "\n";
        return 1;
      }
      selected.push_back(&*it);
    }
  }
  check_known_sweeps(config, {});

  const std::uint64_t seed = resolve_seed(config.seed);
  std::vector<ScenarioReport> reports;
  reports.reserve(selected.size());
  for (const ScenarioEntry* entry : selected) {
    reports.push_back(entry->run(seed));
  }
  emit_reports(config, out, reports);
  for (const auto& report : reports) {
    if (!report.pass) return 3;
  }
  return 0;
}

}  // namespace

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("BRITTLE_BAYES_SEED")) {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw std::invalid_argument(
          "config: BRITTLE_BAYES_SEED must be an unsigned integer");
    }
    return static_cast<std::uint64_t>(value);
  }
  return 1;
}

std::vector<double> parse_sweep_values(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string token =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    if (token.empty()) {
      throw std::invalid_argument("config: empty sweep value");
    }
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || !std::isfinite(value)) {
      throw std::invalid_argument("config: bad sweep value \"" + token +
                                  "\"");
    }
    values.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.format != "table" && config.format != "csv" &&
        config.format != "json") {
      throw std::invalid_argument(
          "config: --format must be table, csv, or json");
    }
    if (config.command == "prior") return cmd_prior(config, out);
    if (config.command == "posterior") return cmd_posterior(config, out);
    if (config.command == "sandwich") return cmd_sandwich(config, out);
    if (config.command == "brittleness") return cmd_brittleness(config, out);
    if (config.command == "curve") return cmd_curve(config, out);
    if (config.command == "perturb") return cmd_perturb(config, out);
    if (config.command == "scenarios") return cmd_scenarios(config, out, err);
    err << "unknown command: " << config.command << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace brittle
