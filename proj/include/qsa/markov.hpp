#pragma once

// Lazy Metropolis chains on a problem instance, their spectral data, and
// classical simulated annealing along a regular inverse-temperature schedule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsa/error.hpp"
#include "qsa/parallel.hpp"
#include "qsa/problem.hpp"
#include "qsa/random.hpp"

namespace qsa {

inline constexpr double kStochasticTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-10;

/// Normalized Boltzmann weights e^{-beta E} / Z. Energies are nonnegative
/// with minimum zero, so the largest weight is 1 and Z >= 1.
inline Eigen::VectorXd gibbs_distribution(const ProblemInstance& instance, double beta) {
  require(beta >= 0.0, ErrorKind::precondition, "beta must be nonnegative");
  Eigen::VectorXd w(instance.size());
  for (std::size_t i = 0; i < instance.size(); ++i) w[i] = std::exp(-beta * instance.energy(i));
  return w / w.sum();
}

/// Row-stochastic reversible chain with its stationary law and the
/// spectrum of the symmetrized matrix, eigenvalues sorted descending.
class TransitionMatrix {
 public:
  /// Takes m (rows sum to one) and its stationary distribution, and
  /// diagonalizes sym = D^{1/2} m D^{-1/2}. `sym` must be supplied by the
  /// caller because forming it from pi loses precision when pi spans many
  /// orders of magnitude.
  TransitionMatrix(double beta, Eigen::MatrixXd m, Eigen::VectorXd pi, Eigen::MatrixXd sym)
      : beta_(beta), m_(std::move(m)), pi_(std::move(pi)), sym_(std::move(sym)) {
    require(m_.rows() == m_.cols() && m_.rows() == pi_.size() && sym_.rows() == m_.rows() &&
                sym_.cols() == m_.cols(),
            ErrorKind::dimension_mismatch, "transition matrix shapes disagree");
    const double asym = (sym_ - sym_.transpose()).cwiseAbs().maxCoeff();
    require(asym <= kSymmetryTolerance, ErrorKind::detailed_balance_violation,
            "symmetrized chain is asymmetric by " + std::to_string(asym));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        0.5 * (sym_ + sym_.transpose()), Eigen::EigenvaluesOnly);
    lambda_ = solver.eigenvalues().reverse();
    delta_ = lambda_.size() > 1 ? 1.0 - lambda_[1] : 1.0;
  }

  /// Builds from an explicit reversible pair (m, pi); sym is formed directly.
  static TransitionMatrix from_reversible(double beta, Eigen::MatrixXd m, Eigen::VectorXd pi) {
    const Eigen::VectorXd root = pi.cwiseSqrt();
    Eigen::MatrixXd sym = root.asDiagonal() * m * root.cwiseInverse().asDiagonal();
    return TransitionMatrix(beta, std::move(m), std::move(pi), std::move(sym));
  }

  double beta() const { return beta_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& m() const { return m_; }
  const Eigen::VectorXd& pi() const { return pi_; }
  const Eigen::MatrixXd& symmetrized() const { return sym_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  double delta() const { return delta_; }

 private:
  double beta_;
  Eigen::MatrixXd m_;
  Eigen::VectorXd pi_;
  Eigen::MatrixXd sym_;
  Eigen::VectorXd lambda_;
  double delta_ = 1.0;
};

/// Single Metropolis transition probability sigma -> tau (tau a neighbor):
/// (1/2) (1/max_degree) min(1, e^{-beta (E_tau - E_sigma)}).
inline double metropolis_move_probability(const ProblemInstance& instance, double beta,
                                          std::size_t sigma, std::size_t tau) {
  const double rise = instance.energy(tau) - instance.energy(sigma);
  const double accept = rise <= 0.0 ? 1.0 : std::exp(-beta * rise);
  return 0.5 * accept / static_cast<double>(instance.max_degree());
}

inline TransitionMatrix metropolis_chain(const ProblemInstance& instance, double beta) {
  require(beta >= 0.0, ErrorKind::precondition, "beta must be nonnegative");
  const auto d = static_cast<Eigen::Index>(instance.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index s = 0; s < d; ++s) {
    double leave = 0.0;
    for (std::size_t t : instance.neighbors(static_cast<std::size_t>(s))) {
      const double p = metropolis_move_probability(instance, beta, s, t);
      m(s, static_cast<Eigen::Index>(t)) = p;
      leave += p;
    }
    m(s, s) = 1.0 - leave;
  }
  // sym(s, t) = sqrt(pi_s / pi_t) m(s, t) = m(s, t) e^{beta (E_t - E_s) / 2}; for a
  // Metropolis move this is (1/2)(1/max_degree) e^{-beta |E_t - E_s| / 2}.
  for (Eigen::Index s = 0; s < d; ++s) {
    sym(s, s) = m(s, s);
    for (std::size_t t : instance.neighbors(static_cast<std::size_t>(s))) {
      const double gap = std::abs(instance.energy(t) - instance.energy(s));
      sym(s, static_cast<Eigen::Index>(t)) =
          0.5 * std::exp(-0.5 * beta * gap) / static_cast<double>(instance.max_degree());
    }
  }
  return TransitionMatrix(beta, std::move(m), gibbs_distribution(instance, beta), std::move(sym));
}

/// 1 - lambda_1 recomputed from D^{1/2} m D^{-1/2} formed from the stored
/// (m, pi) pair; throws if that matrix is not symmetric.
inline double spectral_gap(const TransitionMatrix& chain) {
  const auto d = static_cast<Eigen::Index>(chain.size());
  if (d < 2) return 1.0;
  Eigen::MatrixXd sym(d, d);
  for (Eigen::Index s = 0; s < d; ++s) {
    for (Eigen::Index t = 0; t < d; ++t) {
      const double p = chain.m()(s, t);
      sym(s, t) = p == 0.0 ? 0.0 : p * std::sqrt(chain.pi()[s] / chain.pi()[t]);
    }
  }
  const double asym = (sym - sym.transpose()).cwiseAbs().maxCoeff();
  require(asym <= kSymmetryTolerance, ErrorKind::detailed_balance_violation,
          "detailed balance violated: symmetrized chain asymmetric by " +
              std::to_string(asym));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (sym + sym.transpose()),
                                                        Eigen::EigenvaluesOnly);
  return 1.0 - solver.eigenvalues()[d - 2];
}

/// Regular schedule beta_k = (k - 1) delta_beta, k = 1..steps.
struct Schedule {
  double delta_beta = 0.0;
  std::size_t steps = 0;
  double beta_final = 0.0;
  double epsilon = 0.5;

  double beta(std::size_t k) const { return static_cast<double>(k - 1) * delta_beta; }
};

inline void validate(const Schedule& schedule) {
  require(schedule.epsilon > 0.0 && schedule.epsilon < 1.0, ErrorKind::precondition,
          "epsilon must lie in (0, 1)");
  require(schedule.delta_beta >= 0.0, ErrorKind::precondition, "delta_beta must be >= 0");
  require(std::abs(static_cast<double>(schedule.steps) * schedule.delta_beta -
                   schedule.beta_final) <= 1e-9,
          ErrorKind::precondition, "steps * delta_beta must equal beta_final");
}

/// Spectral gap minimized over a uniform grid of grid_size + 1 points on
/// [0, beta_max] (beta = 0 included).
struct GapScan {
  std::vector<double> betas;
  std::vector<double> gaps;
  double delta_min = 1.0;
  double beta_at_min = 0.0;
  std::size_t index_at_min = 0;
};

inline GapScan minimum_gap(const ProblemInstance& instance, double beta_max,
                           std::size_t grid_size = 64) {
  require(grid_size >= 1, ErrorKind::precondition, "gap grid needs at least one interval");
  require(beta_max >= 0.0, ErrorKind::precondition, "beta_max must be nonnegative");
  GapScan scan;
  scan.betas.resize(grid_size + 1);
  scan.gaps.resize(grid_size + 1);
  parallel_for(grid_size + 1, [&](std::size_t i) {
    const double beta = beta_max * static_cast<double>(i) / static_cast<double>(grid_size);
    scan.betas[i] = beta;
    scan.gaps[i] = metropolis_chain(instance, beta).delta();
  });
  const auto it = std::min_element(scan.gaps.begin(), scan.gaps.end());
  scan.index_at_min = static_cast<std::size_t>(it - scan.gaps.begin());
  scan.delta_min = *it;
  scan.beta_at_min = scan.betas[scan.index_at_min];
  return scan;
}

struct SaScheduleOptions {
  double c_beta = 1.0;
  double c_delta = 1.0;
  std::size_t grid_size = 64;
};

struct SaSchedule {
  Schedule schedule;
  GapScan gaps;
};

/// beta_final = c_beta ln(d / eps^2) / gamma and delta_beta = c_delta delta_min / E_M,
/// then P = ceil(beta_final / delta_beta) and delta_beta = beta_final / P.
inline SaSchedule sa_schedule(const ProblemInstance& instance, double epsilon,
                              const SaScheduleOptions& options = {}) {
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::precondition,
          "epsilon must lie in (0, 1)");
  require(options.c_beta > 0.0 && options.c_delta > 0.0, ErrorKind::precondition,
          "schedule constants must be positive");
  const SpectrumSummary summary = spectrum_summary(instance);
  const double gamma = summary.require_gamma();
  const double d = static_cast<double>(instance.size());

  SaSchedule out;
  Schedule& s = out.schedule;
  s.epsilon = epsilon;
  s.beta_final = options.c_beta * std::log(d / (epsilon * epsilon)) / gamma;
  out.gaps = minimum_gap(instance, s.beta_final, options.grid_size);
  const double step = options.c_delta * out.gaps.delta_min / summary.e_max;
  s.steps = static_cast<std::size_t>(std::ceil(s.beta_final / step));
  s.delta_beta = s.beta_final / static_cast<double>(s.steps);
  return out;
}

/// Exact law after the anneal: uniform start, then one transition per rung.
inline Eigen::VectorXd propagate_distribution(const ProblemInstance& instance,
                                              const Schedule& schedule) {
  const std::size_t d = instance.size();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), 1.0 / d);
  Eigen::VectorXd next(v.size());
  for (std::size_t k = 1; k <= schedule.steps; ++k) {
    const double beta = schedule.beta(k);
    next = v;
    for (std::size_t s = 0; s < d; ++s) {
      for (std::size_t t : instance.neighbors(s)) {
        const double flow = v[s] * metropolis_move_probability(instance, beta, s, t);
        next[s] -= flow;
        next[t] += flow;
      }
    }
    v.swap(next);
  }
  return v;
}

struct ClassicalRunReport {
  std::size_t repetitions = 0;
  std::size_t successes = 0;
  double success_fraction = 0.0;
  double standard_error = 0.0;
  std::size_t steps_per_run = 0;  // N_SA = P
  std::size_t total_steps = 0;
  std::vector<std::size_t> final_counts;
};

/// One sampled Metropolis transition at inverse temperature beta.
inline std::size_t metropolis_step(const ProblemInstance& instance, double beta,
                                   std::size_t sigma, Engine& engine) {
  if (uniform01(engine) < 0.5) return sigma;
  const std::size_t slot = uniform_below(engine, instance.max_degree());
  const auto neighbors = instance.neighbors(sigma);
  if (slot >= neighbors.size()) return sigma;
  const std::size_t tau = neighbors[slot];
  const double rise = instance.energy(tau) - instance.energy(sigma);
  if (rise <= 0.0 || uniform01(engine) < std::exp(-beta * rise)) return tau;
  return sigma;
}

inline ClassicalRunReport classical_sa(const ProblemInstance& instance, const Schedule& schedule,
                                       std::uint64_t seed, std::size_t repetitions) {
  const std::size_t d = instance.size();
  std::vector<std::size_t> finals(repetitions);
  parallel_for(repetitions, [&](std::size_t rep) {
    Engine engine = make_engine(seed, "anneal-classical", rep);
    std::size_t sigma = uniform_below(engine, d);
    for (std::size_t k = 1; k <= schedule.steps; ++k) {
      sigma = metropolis_step(instance, schedule.beta(k), sigma, engine);
    }
    finals[rep] = sigma;
  });

  const SpectrumSummary summary = spectrum_summary(instance);
  std::vector<bool> ground(d, false);
  for (std::size_t g : summary.ground_set) ground[g] = true;

  ClassicalRunReport report;
  report.repetitions = repetitions;
  report.steps_per_run = schedule.steps;
  report.total_steps = schedule.steps * repetitions;
  report.final_counts.assign(d, 0);
  for (std::size_t sigma : finals) {
    ++report.final_counts[sigma];
    if (ground[sigma]) ++report.successes;
  }
  if (repetitions > 0) {
    const double n = static_cast<double>(repetitions);
    report.success_fraction = static_cast<double>(report.successes) / n;
    report.standard_error =
        std::sqrt(report.success_fraction * (1.0 - report.success_fraction) / n);
  }
  return report;
}

}  // namespace qsa
