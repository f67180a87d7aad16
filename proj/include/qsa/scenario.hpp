#pragma once

// Experiment configuration, scenario dispatch and on-disk artifacts for the
// command-line front end.
//
// Config file (JSON object, every key optional except "instance"):
//   scenario, instance, epsilon, c_q, c_beta, c_delta, grid_size, p_bits,
//   q_steps, rounds_rule, fixed_rounds, mode, representation, trajectories,
//   seed, repetitions, max_repeats, beta, barriers, false_well, ceiling,
//   measure, out_dir, derived (ignored; written by manifests).
// Instance spec: {"file": path} (relative to the config file),
// {"inline": <instance document>}, or {"generator": name, ...} with name one
// of ising_chain, random_field_ising, two_basin.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsa/error.hpp"
#include "qsa/io.hpp"
#include "qsa/markov.hpp"
#include "qsa/problem.hpp"
#include "qsa/verify.hpp"
#include "qsa/walk.hpp"
#include "qsa/zeno.hpp"

namespace qsa {

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"spectra", "anneal-classical", "anneal-quantum",
                                              "sweep",   "verify",           "compare"};
  return names;
}

struct ExperimentConfig {
  std::string scenario;
  nlohmann::json instance;                 // resolved to an inline document by parse_config
  double epsilon = 0.25;
  double c_q = 1.0;
  double c_beta = 1.0;
  double c_delta = 1.0;
  std::size_t grid_size = 64;
  std::optional<int> p_bits;
  std::optional<std::size_t> q_steps;
  RoundsRule rounds_rule = RoundsRule::k_plus_one;
  int fixed_rounds = 1;
  ZenoMode mode = ZenoMode::randomization;
  Representation representation = Representation::density;
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  std::size_t repetitions = 10000;         // anneal-classical Monte-Carlo runs
  std::size_t max_repeats = 0;             // anneal-quantum: > 0 adds repeat-until-success
  double beta = 1.0;                       // spectra
  std::vector<double> barriers{1.0, 1.5, 2.0, 2.5, 3.0};
  double false_well = 0.5;
  double ceiling = 6.0;
  bool measure = false;                    // compare/sweep: search measured thresholds
  std::string out_dir = "qsa-out";
};

namespace detail {

template <class T>
void take(const nlohmann::json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("config field '") + key + "': " + e.what());
  }
}

template <class T>
void take(const nlohmann::json& doc, const char* key, std::optional<T>& out) {
  if (!doc.contains(key) || doc.at(key).is_null()) return;
  T value{};
  take(doc, key, value);
  out = value;
}

inline ProblemInstance generate_instance(const nlohmann::json& spec) {
  std::string name;
  take(spec, "generator", name);
  const auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : spec.items()) {
      bool known = key == "generator";
      for (const char* k : keys) known = known || key == k;
      require(known, ErrorKind::config, "unknown field '" + key + "' for generator " + name);
    }
  };
  if (name == "ising_chain") {
    allow({"n_spins", "coupling", "fields", "periodic"});
    int n = 3;
    double coupling = 1.0;
    bool periodic = false;
    take(spec, "n_spins", n);
    take(spec, "coupling", coupling);
    take(spec, "periodic", periodic);
    std::vector<double> fields(static_cast<std::size_t>(std::max(n, 0)), 0.0);
    take(spec, "fields", fields);
    return ising_chain(n, coupling, fields, periodic);
  }
  if (name == "random_field_ising") {
    allow({"n_spins", "coupling", "field_scale", "seed", "periodic"});
    int n = 4;
    double coupling = 1.0, scale = 1.0;
    std::uint64_t seed = 1;
    bool periodic = false;
    take(spec, "n_spins", n);
    take(spec, "coupling", coupling);
    take(spec, "field_scale", scale);
    take(spec, "seed", seed);
    take(spec, "periodic", periodic);
    return random_field_ising_chain(n, coupling, scale, seed, periodic);
  }
  if (name == "two_basin") {
    allow({"barrier", "false_well", "ceiling"});
    double barrier = 2.0, false_well = 0.5, ceiling = 6.0;
    take(spec, "barrier", barrier);
    take(spec, "false_well", false_well);
    take(spec, "ceiling", ceiling);
    return two_basin(barrier, false_well, ceiling);
  }
  fail(ErrorKind::config, "unknown instance generator '" + name + "'");
}

}  // namespace detail

/// Turns an instance spec into an instance document. Generated instances
/// are kept as a spec; files are read and inlined.
inline nlohmann::json resolve_instance_spec(const nlohmann::json& spec,
                                            const std::filesystem::path& base_dir) {
  require(spec.is_object(), ErrorKind::config, "'instance' must be a JSON object");
  if (spec.contains("file")) {
    require(spec.size() == 1, ErrorKind::config, "'file' instance spec takes no other fields");
    std::filesystem::path path = spec.at("file").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    require(std::filesystem::exists(path), ErrorKind::config,
            "instance file " + path.string() + " does not exist");
    std::ifstream in(path, std::ios::binary);
    try {
      return {{"inline", nlohmann::json::parse(in)}};
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::invalid_instance, path.string() + ": " + e.what());
    }
  }
  if (spec.contains("inline")) {
    require(spec.size() == 1, ErrorKind::config, "'inline' instance spec takes no other fields");
    return spec;
  }
  require(spec.contains("generator"), ErrorKind::config,
          "instance spec needs one of 'file', 'inline' or 'generator'");
  return spec;
}

inline ProblemInstance make_instance(const nlohmann::json& spec) {
  if (spec.contains("inline")) return load_instance(spec.at("inline"));
  return detail::generate_instance(spec);
}

inline ExperimentConfig parse_config(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = ".") {
  require(doc.is_object(), ErrorKind::config, "config must be a JSON object");
  static const std::vector<std::string> known{
      "scenario",   "instance",       "epsilon",      "c_q",          "c_beta",
      "c_delta",    "grid_size",      "p_bits",       "q_steps",      "rounds_rule",
      "fixed_rounds", "mode",         "representation", "trajectories", "seed",
      "repetitions", "max_repeats",   "beta",         "barriers",     "false_well",
      "ceiling",    "measure",        "out_dir",      "derived"};
  for (const auto& [key, value] : doc.items()) {
    require(std::find(known.begin(), known.end(), key) != known.end(), ErrorKind::config,
            "unknown config field '" + key + "'");
  }

  ExperimentConfig c;
  detail::take(doc, "scenario", c.scenario);
  detail::take(doc, "epsilon", c.epsilon);
  detail::take(doc, "c_q", c.c_q);
  detail::take(doc, "c_beta", c.c_beta);
  detail::take(doc, "c_delta", c.c_delta);
  detail::take(doc, "grid_size", c.grid_size);
  detail::take(doc, "p_bits", c.p_bits);
  detail::take(doc, "q_steps", c.q_steps);
  detail::take(doc, "fixed_rounds", c.fixed_rounds);
  detail::take(doc, "trajectories", c.trajectories);
  detail::take(doc, "seed", c.seed);
  detail::take(doc, "repetitions", c.repetitions);
  detail::take(doc, "max_repeats", c.max_repeats);
  detail::take(doc, "beta", c.beta);
  detail::take(doc, "barriers", c.barriers);
  detail::take(doc, "false_well", c.false_well);
  detail::take(doc, "ceiling", c.ceiling);
  detail::take(doc, "measure", c.measure);
  detail::take(doc, "out_dir", c.out_dir);

  const auto take_enum = [&](const char* key, auto& out, auto parse) {
    if (!doc.contains(key)) return;
    require(doc.at(key).is_string(), ErrorKind::config,
            std::string("config field '") + key + "' must be a string");
    out = parse(doc.at(key).template get<std::string>());
  };
  take_enum("rounds_rule", c.rounds_rule, [](const std::string& s) {
    if (s == "k_plus_one") return RoundsRule::k_plus_one;
    if (s == "k") return RoundsRule::k;
    if (s == "fixed") return RoundsRule::fixed;
    fail(ErrorKind::config, "rounds_rule must be k_plus_one, k or fixed");
  });
  take_enum("mode", c.mode, [](const std::string& s) {
    if (s == "randomization") return ZenoMode::randomization;
    if (s == "pea") return ZenoMode::pea;
    fail(ErrorKind::config, "mode must be randomization or pea");
  });
  take_enum("representation", c.representation, [](const std::string& s) {
    if (s == "density") return Representation::density;
    if (s == "trajectory") return Representation::trajectory;
    fail(ErrorKind::config, "representation must be density or trajectory");
  });

  require(doc.contains("instance"), ErrorKind::config, "config needs an 'instance' field");
  c.instance = resolve_instance_spec(doc.at("instance"), base_dir);
  return c;
}

/// Type and range checks that do not need the instance.
inline void validate(const ExperimentConfig& c) {
  require(std::find(scenario_names().begin(), scenario_names().end(), c.scenario) !=
              scenario_names().end(),
          ErrorKind::config, "unknown scenario '" + c.scenario + "'");
  require(c.epsilon > 0.0 && c.epsilon < 1.0, ErrorKind::config, "epsilon must lie in (0, 1)");
  require(c.c_q > 0.0 && c.c_beta > 0.0 && c.c_delta > 0.0, ErrorKind::config,
          "c_q, c_beta and c_delta must be positive");
  require(c.grid_size >= 1, ErrorKind::config, "grid_size must be >= 1");
  require(!c.p_bits || (*c.p_bits >= 1 && *c.p_bits <= 40), ErrorKind::config,
          "p_bits must lie in [1, 40]");
  require(!c.q_steps || *c.q_steps >= 1, ErrorKind::config, "q_steps must be >= 1");
  require(c.fixed_rounds >= 1, ErrorKind::config, "fixed_rounds must be >= 1");
  require(c.trajectories >= 1, ErrorKind::config, "trajectories must be >= 1");
  require(c.beta >= 0.0, ErrorKind::config, "beta must be >= 0");
  require(!c.barriers.empty(), ErrorKind::config, "barriers must not be empty");
  require(!c.out_dir.empty(), ErrorKind::config, "out_dir must not be empty");
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json doc{{"scenario", c.scenario},
                     {"instance", c.instance},
                     {"epsilon", c.epsilon},
                     {"c_q", c.c_q},
                     {"c_beta", c.c_beta},
                     {"c_delta", c.c_delta},
                     {"grid_size", c.grid_size},
                     {"p_bits", c.p_bits ? nlohmann::json(*c.p_bits) : nlohmann::json()},
                     {"q_steps", c.q_steps ? nlohmann::json(*c.q_steps) : nlohmann::json()},
                     {"rounds_rule", c.rounds_rule},
                     {"fixed_rounds", c.fixed_rounds},
                     {"mode", c.mode},
                     {"representation", c.representation},
                     {"trajectories", c.trajectories},
                     {"seed", c.seed},
                     {"repetitions", c.repetitions},
                     {"max_repeats", c.max_repeats},
                     {"beta", c.beta},
                     {"barriers", c.barriers},
                     {"false_well", c.false_well},
                     {"ceiling", c.ceiling},
                     {"measure", c.measure},
                     {"out_dir", c.out_dir}};
  return doc;
}

/// Exit status for a failure of the given kind.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::precondition: return 2;
    case ErrorKind::invalid_instance:
    case ErrorKind::degenerate_instance:
    case ErrorKind::detailed_balance_violation: return 3;
    case ErrorKind::instance_too_large: return 4;
    case ErrorKind::dimension_mismatch:
    case ErrorKind::io: return 1;
  }
  return 1;
}

inline constexpr int kVerifyFailedExit = 5;

struct ScenarioOutcome {
  int exit_code = 0;
  std::vector<std::string> files;
};

namespace detail {

inline ChooseParamsOptions choose_options(const ExperimentConfig& c) {
  ChooseParamsOptions o;
  o.grid_size = c.grid_size;
  o.rounds_rule = c.rounds_rule;
  o.fixed_rounds = c.fixed_rounds;
  o.mode = c.mode;
  o.representation = c.representation;
  o.trajectories = c.trajectories;
  o.seed = c.seed;
  o.p_bits = c.p_bits;
  o.q_steps = c.q_steps;
  return o;
}

inline CompareOptions compare_options(const ExperimentConfig& c) {
  CompareOptions o;
  o.c_q = c.c_q;
  o.c_beta = c.c_beta;
  o.c_delta = c.c_delta;
  o.grid_size = c.grid_size;
  o.measure = c.measure;
  return o;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    require(!ec, ErrorKind::io, "cannot create " + dir_.string() + ": " + ec.message());
  }
  void json(const std::string& name, const nlohmann::json& doc) {
    write_json(dir_ / name, doc);
    files_.push_back(name);
  }
  void csv(const std::string& name, const CsvTable& table) {
    write_text(dir_ / name, table.str());
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline CsvTable distribution_table(const ProblemInstance& instance,
                                   const std::vector<std::pair<std::string, Eigen::VectorXd>>& cols) {
  std::vector<std::string> header{"configuration", "label", "energy"};
  for (const auto& [name, values] : cols) header.push_back(name);
  CsvTable table(header);
  for (std::size_t s = 0; s < instance.size(); ++s) {
    table.row()
        .cell(static_cast<std::uint64_t>(s))
        .cell(instance.labels().empty() ? std::to_string(s) : instance.labels()[s])
        .cell(instance.energy(s));
    for (const auto& [name, values] : cols) table.cell(values[static_cast<Eigen::Index>(s)]);
  }
  return table;
}

inline void spectra(const ExperimentConfig& c, const ProblemInstance& instance,
                    ArtifactWriter& out, nlohmann::json& derived) {
  const TransitionMatrix chain = metropolis_chain(instance, c.beta);
  const WalkOperator walk = build_walk(chain);
  const CsvTable table = spectra_table(walk);
  out.csv("spectra.csv", table);
  derived["delta"] = chain.delta();
  out.json("report.json",
           {{"beta", c.beta},
            {"d", instance.size()},
            {"delta", chain.delta()},
            {"phase_gap", walk.phase_gap},
            {"half_phase_gap_squared", 0.5 * walk.phase_gap * walk.phase_gap},
            {"lambda", std::vector<double>(walk.lambda.data(), walk.lambda.data() + walk.lambda.size())},
            {"null_sector_dimension", walk.null_sector_dimension},
            {"eigen_residual", walk.spectrum.eigen_residual},
            {"unitarity_residual", walk.spectrum.unitarity_residual},
            {"stationary_residual", (walk.w * walk.psi0 - walk.psi0).norm()}});
}

inline void anneal_classical(const ExperimentConfig& c, const ProblemInstance& instance,
                             ArtifactWriter& out, nlohmann::json& derived) {
  const SaSchedule sa = sa_schedule(instance, c.epsilon, {c.c_beta, c.c_delta, c.grid_size});
  derived["schedule"] = sa.schedule;
  derived["delta_min"] = sa.gaps.delta_min;
  const ClassicalRunReport run = classical_sa(instance, sa.schedule, c.seed, c.repetitions);
  const Eigen::VectorXd exact = propagate_distribution(instance, sa.schedule);
  const double exact_success = mass_on(exact, ground_mask(instance));

  Eigen::VectorXd empirical(static_cast<Eigen::Index>(instance.size()));
  for (std::size_t s = 0; s < instance.size(); ++s) {
    empirical[static_cast<Eigen::Index>(s)] =
        run.repetitions ? static_cast<double>(run.final_counts[s]) / run.repetitions : 0.0;
  }
  out.csv("distribution.csv",
          distribution_table(instance, {{"empirical", empirical}, {"exact", exact}}));
  out.json("report.json", {{"schedule", sa.schedule},
                           {"delta_min", sa.gaps.delta_min},
                           {"beta_at_delta_min", sa.gaps.beta_at_min},
                           {"monte_carlo", run},
                           {"exact_success", exact_success},
                           {"deviation_in_standard_errors",
                            run.standard_error > 0.0
                                ? std::abs(run.success_fraction - exact_success) / run.standard_error
                                : 0.0}});
}

inline void anneal_quantum(const ExperimentConfig& c, const ProblemInstance& instance,
                           ArtifactWriter& out, nlohmann::json& derived) {
  const QsaParams params = choose_params(instance, c.epsilon, c.c_q, choose_options(c));
  derived["params"] = params;
  const RunReport report = qsa_run(instance, params);
  out.json("report.json", report);
  out.csv("diagnostics.csv", diagnostics_table(report.diagnostics));
  const Eigen::VectorXd dist = Eigen::Map<const Eigen::VectorXd>(
      report.final_distribution.data(), static_cast<Eigen::Index>(report.final_distribution.size()));
  out.csv("distribution.csv",
          distribution_table(instance, {{"measured", dist},
                                        {"gibbs", gibbs_distribution(instance, report.final_beta)}}));
  if (c.max_repeats > 0) {
    require(std::abs(c.epsilon - 0.5) < 1e-12, ErrorKind::config,
            "max_repeats needs epsilon = 0.5");
    out.json("repeat.json", repeat_until_success(instance, params, c.max_repeats));
  }
}

inline void sweep(const ExperimentConfig& c, ArtifactWriter& out, nlohmann::json& derived) {
  CsvTable table({"delta", "phi1", "n_sa", "n_qsa", "success"});
  nlohmann::json records = nlohmann::json::array();
  for (double barrier : c.barriers) {
    const ProblemInstance instance = two_basin(barrier, c.false_well, c.ceiling);
    const ComparisonRecord rec = compare_complexity(instance, c.epsilon, compare_options(c));
    const QsaParams params = choose_params(instance, c.epsilon, c.c_q, choose_options(c));
    const RunReport run = qsa_run(instance, params);
    table.row()
        .cell(rec.delta_qsa)
        .cell(rec.phi1)
        .cell(static_cast<std::uint64_t>(rec.schedule_steps))
        .cell(static_cast<std::uint64_t>(run.n_qsa))
        .cell(run.success_probability);
    records.push_back({{"barrier", barrier},
                       {"comparison", rec},
                       {"q_steps", params.q_steps},
                       {"p_bits", params.p_bits},
                       {"success_probability", run.success_probability}});
  }
  derived["instances"] = records.size();
  out.csv("sweep.csv", table);
  out.json("report.json", {{"rows", records}});
}

inline void compare(const ExperimentConfig& c, const ProblemInstance& instance,
                    ArtifactWriter& out) {
  const ComparisonRecord rec = compare_complexity(instance, c.epsilon, compare_options(c));
  CsvTable table({"d", "delta_sa", "delta_qsa", "phi1", "predicted_n_sa", "predicted_n_qsa",
                  "schedule_steps", "p_bits", "q_formula", "measured_n_sa", "measured_n_qsa"});
  table.row()
      .cell(static_cast<std::uint64_t>(rec.d))
      .cell(rec.delta_sa)
      .cell(rec.delta_qsa)
      .cell(rec.phi1)
      .cell(rec.predicted_n_sa)
      .cell(rec.predicted_n_qsa)
      .cell(static_cast<std::uint64_t>(rec.schedule_steps))
      .cell(rec.p_bits)
      .cell(static_cast<std::uint64_t>(rec.q_formula))
      .cell(static_cast<std::uint64_t>(rec.measured_n_sa))
      .cell(static_cast<std::uint64_t>(rec.measured_n_qsa));
  out.csv("compare.csv", table);
  out.json("report.json", rec);
}

inline bool verify(const ExperimentConfig& c, const ProblemInstance& instance, ArtifactWriter& out,
                   nlohmann::json& derived) {
  const VerifySummary summary = verify_instance(instance, c.epsilon, c.seed, c.grid_size);
  derived["betas"] = summary.betas;
  derived["p_bits"] = summary.p_bits;
  CsvTable table({"check", "beta", "residual", "tolerance", "passed"});
  std::size_t failed = 0;
  for (const CheckResult& r : summary.checks.results()) {
    table.row().cell(r.name).cell(r.beta).cell(r.residual).cell(r.tolerance).cell(r.passed);
    if (!r.passed) ++failed;
  }
  out.csv("checks.csv", table);
  out.json("report.json", {{"checks", summary.checks.results().size()},
                           {"failed", failed},
                           {"passed", failed == 0}});
  return failed == 0;
}

}  // namespace detail

/// Runs one scenario and writes its artifacts plus manifest.json into
/// c.out_dir. Errors propagate as qsa::Error; the caller maps them to exit
/// codes and writes the error document.
inline ScenarioOutcome run_scenario(const ExperimentConfig& c) {
  validate(c);
  detail::ArtifactWriter out(c.out_dir);
  nlohmann::json derived = nlohmann::json::object();
  ScenarioOutcome outcome;

  std::optional<ProblemInstance> instance;
  if (c.scenario != "sweep") {
    instance.emplace(make_instance(c.instance));
    derived["d"] = instance->size();
  }

  if (c.scenario == "spectra") {
    detail::spectra(c, *instance, out, derived);
  } else if (c.scenario == "anneal-classical") {
    detail::anneal_classical(c, *instance, out, derived);
  } else if (c.scenario == "anneal-quantum") {
    detail::anneal_quantum(c, *instance, out, derived);
  } else if (c.scenario == "sweep") {
    detail::sweep(c, out, derived);
  } else if (c.scenario == "compare") {
    detail::compare(c, *instance, out);
  } else if (c.scenario == "verify") {
    if (!detail::verify(c, *instance, out, derived)) outcome.exit_code = kVerifyFailedExit;
  }

  nlohmann::json manifest = to_json(c);
  manifest["derived"] = derived;
  out.json("manifest.json", manifest);
  outcome.files = out.files();
  return outcome;
}

/// error.json: {"kind", "message", "exit_code"}.
inline nlohmann::json error_document(ErrorKind kind, const std::string& message) {
  return {{"kind", to_string(kind)}, {"message", message}, {"exit_code", exit_code_for(kind)}};
}

}  // namespace qsa
