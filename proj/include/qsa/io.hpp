#pragma once

// JSON and CSV forms of run reports. CSV: ',' separator, '.' decimal point,
// LF line endings, reals printed with 17 significant digits.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "qsa/error.hpp"
#include "qsa/markov.hpp"
#include "qsa/walk.hpp"
#include "qsa/zeno.hpp"

namespace qsa {

NLOHMANN_JSON_SERIALIZE_ENUM(ZenoMode, {{ZenoMode::randomization, "randomization"},
                                        {ZenoMode::pea, "pea"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Representation, {{Representation::density, "density"},
                                              {Representation::trajectory, "trajectory"}})
NLOHMANN_JSON_SERIALIZE_ENUM(RoundsRule, {{RoundsRule::k_plus_one, "k_plus_one"},
                                          {RoundsRule::k, "k"},
                                          {RoundsRule::fixed, "fixed"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(QsaParams, q_steps, delta_beta, beta_final, p_bits,
                                   rounds_rule, fixed_rounds, epsilon, mode, representation,
                                   trajectories, seed, c_q, delta_min, beta_at_delta_min, mu_max,
                                   mu_check_passed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StepRecord, k, beta, fidelity, coherence_nu, leakage_chi, mu,
                                   walk_steps_cumulative, rounds, null_sector_mass)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RunReport, success_probability, final_fidelity, n_qsa,
                                   n_qsa_per_run, n_sa_reference, final_beta, gibbs_ground_mass,
                                   tv_to_gibbs, mu_max, fidelity_bound_holds,
                                   coherence_bound_holds, final_distribution, diagnostics, params)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Schedule, delta_beta, steps, beta_final, epsilon)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ClassicalRunReport, repetitions, successes, success_fraction,
                                   standard_error, steps_per_run, total_steps, final_counts)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RepeatReport, succeeded, repeats_used, max_repeats, outcomes,
                                   outcome_success, n_qsa, failure_model)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ComparisonRecord, d, epsilon, e_max, gamma, delta_sa,
                                   delta_qsa, phi1, predicted_n_sa, predicted_n_qsa,
                                   schedule_steps, p_bits, q_formula, exhaustive_fallback,
                                   fallback_cost, measured, sa_reached, measured_n_sa,
                                   measured_sa_success, qsa_reached, measured_q, measured_n_qsa,
                                   measured_qsa_success)

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Minimal CSV builder: one header row, rows of preformatted cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    add_row(header);
  }

  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& cell(double x) { return push(format_real(x)); }
  CsvTable& cell(std::uint64_t x) { return push(std::to_string(x)); }
  CsvTable& cell(int x) { return push(std::to_string(x)); }
  CsvTable& cell(bool x) { return push(x ? "1" : "0"); }
  CsvTable& cell(const std::string& x) { return push(x); }

  std::size_t data_rows() const { return rows_.size() - 1; }

  std::string str() const {
    std::string out;
    for (const auto& r : rows_) {
      require(r.size() == columns_, ErrorKind::io, "CSV row has the wrong number of cells");
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += r[i];
      }
      out += '\n';
    }
    return out;
  }

 private:
  void add_row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
  CsvTable& push(std::string s) {
    rows_.back().push_back(std::move(s));
    return *this;
  }

  std::size_t columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline CsvTable diagnostics_table(const std::vector<StepRecord>& rows) {
  CsvTable table({"k", "beta", "fidelity", "coherence_nu", "leakage_chi", "mu",
                  "walk_steps_cumulative"});
  for (const StepRecord& r : rows) {
    table.row()
        .cell(static_cast<std::uint64_t>(r.k))
        .cell(r.beta)
        .cell(r.fidelity)
        .cell(r.coherence_nu)
        .cell(r.leakage_chi)
        .cell(r.mu)
        .cell(static_cast<std::uint64_t>(r.walk_steps_cumulative));
  }
  return table;
}

/// One row per chain eigenvalue: lambda_j, phi_j and the walk eigenphases
/// matched to +2 phi_j and -2 phi_j, with the worse of the two mismatches.
/// Row 0 (phi = 0) is matched to the single stationary eigenphase.
inline CsvTable spectra_table(const WalkOperator& walk) {
  CsvTable table({"index", "lambda", "phi", "walk_eigenphase_pos", "walk_eigenphase_neg",
                  "residual"});
  std::vector<double> required{0.0};
  for (Eigen::Index j = 1; j < walk.phi.size(); ++j) {
    required.push_back(std::remainder(2.0 * walk.phi[j], 2.0 * std::numbers::pi));
    required.push_back(std::remainder(-2.0 * walk.phi[j], 2.0 * std::numbers::pi));
  }
  const PhaseMatch match = match_phases(required, walk.eigenphases());
  const auto phase_at = [&](std::size_t i) {
    return walk.eigenphases()[static_cast<Eigen::Index>(match.assignment[i])];
  };
  for (Eigen::Index j = 0; j < walk.phi.size(); ++j) {
    double pos, neg, residual;
    if (j == 0) {
      pos = neg = phase_at(0);
      residual = circular_distance(pos, 0.0);
    } else {
      const std::size_t i = 1 + 2 * static_cast<std::size_t>(j - 1);
      pos = phase_at(i);
      neg = phase_at(i + 1);
      residual = std::max(circular_distance(pos, required[i]),
                          circular_distance(neg, required[i + 1]));
    }
    table.row()
        .cell(static_cast<std::uint64_t>(j))
        .cell(walk.lambda[j])
        .cell(walk.phi[j])
        .cell(pos)
        .cell(neg)
        .cell(residual);
  }
  return table;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::config, path.string() + ": " + e.what());
  }
}

/// Writes report.json and diagnostics.csv into `directory` (created if needed).
inline void emit_report(const RunReport& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  require(!ec, ErrorKind::io, "cannot create " + directory.string() + ": " + ec.message());
  write_json(directory / "report.json", nlohmann::json(report));
  write_text(directory / "diagnostics.csv", diagnostics_table(report.diagnostics).str());
}

}  // namespace qsa
