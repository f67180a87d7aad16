#pragma once

// Quantum simulated annealing: walks W_k along a regular beta schedule, with
// the stationary state tracked by Zeno projections (randomized walk powers or
// phase estimation), each followed by dephasing of the second register.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsa/error.hpp"
#include "qsa/markov.hpp"
#include "qsa/parallel.hpp"
#include "qsa/problem.hpp"
#include "qsa/random.hpp"
#include "qsa/state.hpp"
#include "qsa/walk.hpp"

namespace qsa {

enum class ZenoMode { randomization, pea };
enum class RoundsRule { k_plus_one, k, fixed };

inline const char* to_string(ZenoMode m) { return m == ZenoMode::pea ? "pea" : "randomization"; }

inline const char* to_string(RoundsRule r) {
  switch (r) {
    case RoundsRule::k_plus_one: return "k_plus_one";
    case RoundsRule::k: return "k";
    case RoundsRule::fixed: return "fixed";
  }
  return "k_plus_one";
}

/// Largest configuration count for density-mode runs (walk space 4096).
inline constexpr std::size_t kMaxDensityConfigurations = kMaxDenseWalkConfigurations;
/// Largest configuration count for trajectory-mode runs.
inline constexpr std::size_t kMaxTrajectoryConfigurations = kMaxStructuredWalkConfigurations;

// ---------------------------------------------------------------------------
// Parameter rules

/// ln(d / (2 eps)) / gamma.
inline double final_beta_for(std::size_t d, double epsilon, double gamma) {
  return std::log(static_cast<double>(d) / (2.0 * epsilon)) / gamma;
}

/// Smallest p >= 1 with 2^p > 8 pi / sqrt(2 delta).
inline int pea_bits_for_gap(double delta) {
  require(delta > 0.0, ErrorKind::degenerate_instance, "spectral gap must be positive");
  const double threshold = 8.0 * std::numbers::pi / std::sqrt(2.0 * delta);
  int p = 1;
  while (std::ldexp(1.0, p) <= threshold) ++p;
  return p;
}

/// Zeno rounds for the step that prepares rung k + 1 from rung k (k >= 1).
inline int rounds_for_step(std::size_t k, RoundsRule rule, int fixed_rounds = 1) {
  switch (rule) {
    case RoundsRule::fixed: return fixed_rounds;
    case RoundsRule::k:
      return static_cast<int>(std::ceil(1.0 + std::log2(2.0 * static_cast<double>(k)) / 2.0));
    case RoundsRule::k_plus_one:
      return static_cast<int>(
          std::ceil(1.0 + std::log2(2.0 * static_cast<double>(k + 1)) / 2.0));
  }
  return 1;
}

/// mu^2 = 1 - <phi0(a)|phi0(b)>^2 for two probability vectors, evaluated as
/// h (2 - h) with h = (1/2)|sqrt(a) - sqrt(b)|^2 so small values keep their
/// relative precision.
inline double overlap_deficiency_squared(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double h = 0.5 * (a.cwiseSqrt() - b.cwiseSqrt()).squaredNorm();
  return std::max(0.0, h * (2.0 - h));
}

struct QsaParams {
  std::size_t q_steps = 1;
  double delta_beta = 0.0;
  double beta_final = 0.0;
  int p_bits = 1;
  RoundsRule rounds_rule = RoundsRule::k_plus_one;
  int fixed_rounds = 1;
  double epsilon = 0.25;
  ZenoMode mode = ZenoMode::randomization;
  Representation representation = Representation::density;
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;

  // Provenance from choose_params.
  double c_q = 1.0;
  double delta_min = 0.0;
  double beta_at_delta_min = 0.0;
  double mu_max = 0.0;
  bool mu_check_passed = false;

  double beta(std::size_t k) const { return static_cast<double>(k - 1) * delta_beta; }
  int rounds(std::size_t k) const { return rounds_for_step(k, rounds_rule, fixed_rounds); }
  std::uint64_t register_size() const { return std::uint64_t{1} << p_bits; }
};

inline void validate(const QsaParams& params) {
  require(params.q_steps >= 1, ErrorKind::precondition, "q_steps must be >= 1");
  require(params.p_bits >= 1 && params.p_bits <= 40, ErrorKind::precondition,
          "p_bits must lie in [1, 40]");
  require(params.epsilon > 0.0 && params.epsilon < 1.0, ErrorKind::precondition,
          "epsilon must lie in (0, 1)");
  require(params.delta_beta >= 0.0, ErrorKind::precondition, "delta_beta must be >= 0");
  require(std::abs(static_cast<double>(params.q_steps) * params.delta_beta - params.beta_final) <=
              1e-9,
          ErrorKind::precondition, "q_steps * delta_beta must equal beta_final");
  require(params.rounds_rule != RoundsRule::fixed || params.fixed_rounds >= 1,
          ErrorKind::precondition, "fixed rounds must be >= 1");
  require(params.representation == Representation::density || params.trajectories >= 1,
          ErrorKind::precondition, "trajectory mode needs at least one trajectory");
}

/// Largest mu over consecutive rungs of the schedule.
inline double schedule_mu_max(const ProblemInstance& instance, const QsaParams& params) {
  double worst = 0.0;
  Eigen::VectorXd previous = gibbs_distribution(instance, params.beta(1));
  for (std::size_t k = 1; k < params.q_steps; ++k) {
    Eigen::VectorXd next = gibbs_distribution(instance, params.beta(k + 1));
    worst = std::max(worst, overlap_deficiency_squared(previous, next));
    previous.swap(next);
  }
  return std::sqrt(worst);
}

struct ChooseParamsOptions {
  std::size_t grid_size = 64;
  RoundsRule rounds_rule = RoundsRule::k_plus_one;
  int fixed_rounds = 1;
  ZenoMode mode = ZenoMode::randomization;
  Representation representation = Representation::density;
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  std::optional<int> p_bits;          // override the gap rule
  std::optional<std::size_t> q_steps; // override c_q
};

/// beta_f = ln(d/(2 eps))/gamma, p from the minimum gap on [0, beta_f],
/// Q = ceil(c_q beta_f^2 E_M^2 / eps), delta_beta = beta_f / Q; then checks
/// mu_max^2 < eps / (4 Q) on the resulting schedule.
inline QsaParams choose_params(const ProblemInstance& instance, double epsilon, double c_q = 1.0,
                               const ChooseParamsOptions& options = {}) {
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::precondition, "epsilon must lie in (0, 1)");
  require(c_q > 0.0, ErrorKind::precondition, "c_q must be positive");
  const SpectrumSummary summary = spectrum_summary(instance);
  const double gamma = summary.require_gamma();

  QsaParams params;
  params.epsilon = epsilon;
  params.c_q = c_q;
  params.rounds_rule = options.rounds_rule;
  params.fixed_rounds = options.fixed_rounds;
  params.mode = options.mode;
  params.representation = options.representation;
  params.trajectories = options.trajectories;
  params.seed = options.seed;
  params.beta_final = final_beta_for(instance.size(), epsilon, gamma);

  const GapScan scan = minimum_gap(instance, params.beta_final, options.grid_size);
  params.delta_min = scan.delta_min;
  params.beta_at_delta_min = scan.beta_at_min;
  params.p_bits = options.p_bits.value_or(pea_bits_for_gap(scan.delta_min));

  const double bf = params.beta_final;
  params.q_steps = options.q_steps.value_or(static_cast<std::size_t>(
      std::ceil(c_q * bf * bf * summary.e_max * summary.e_max / epsilon)));
  params.q_steps = std::max<std::size_t>(1, params.q_steps);
  params.delta_beta = bf / static_cast<double>(params.q_steps);

  params.mu_max = schedule_mu_max(instance, params);
  params.mu_check_passed =
      params.mu_max * params.mu_max < epsilon / (4.0 * static_cast<double>(params.q_steps));
  return params;
}

// ---------------------------------------------------------------------------
// Channels

/// |sin(2^{p-1} x)| / (2^p |sin(x/2)|), the modulus of the averaged phasor
/// (1/2^p) sum_{r < 2^p} e^{i r x}; equals 1 at x = 0 (mod 2 pi).
inline double damping_kernel(double phase_difference, int p_bits) {
  const double n = std::ldexp(1.0, p_bits);
  const double half = std::sin(0.5 * phase_difference);
  if (std::abs(half) < 1e-300) return 1.0;
  return std::min(1.0, std::abs(std::sin(0.5 * n * phase_difference)) / (n * std::abs(half)));
}

/// (1/2^p) sum_{r < 2^p} e^{i r x} in closed form.
inline cplx averaged_phasor(double x, int p_bits) {
  const double n = std::ldexp(1.0, p_bits);
  const double half = std::sin(0.5 * x);
  if (std::abs(half) < 1e-300) {
    // x is a multiple of 2 pi; every term is e^{i r x} = 1.
    return {1.0, 0.0};
  }
  const double mag = std::sin(0.5 * n * x) / (n * half);
  return std::polar(1.0, 0.5 * (n - 1.0) * x) * mag;
}

namespace detail {

inline void require_matching(const QuantumState& state, const WalkOperator& walk) {
  require(static_cast<std::size_t>(state.dim()) == walk.dim, ErrorKind::dimension_mismatch,
          "state dimension " + std::to_string(state.dim()) + " does not match walk dimension " +
              std::to_string(walk.dim));
}

// Applies G o (V^H rho V) and maps back, for a phase-difference weight G.
template <class Weight>
Eigen::MatrixXcd apply_in_eigenbasis(const Eigen::MatrixXcd& rho, const WalkOperator& walk,
                                     Weight&& weight) {
  const Eigen::MatrixXcd& v = walk.spectrum.vectors;
  Eigen::MatrixXcd local = v.adjoint() * rho * v;
  const Eigen::VectorXd& th = walk.spectrum.phases;
  for (Eigen::Index b = 0; b < local.cols(); ++b) {
    for (Eigen::Index a = 0; a < local.rows(); ++a) local(a, b) *= weight(a, b, th[a], th[b]);
  }
  Eigen::MatrixXcd out = v * local * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

}  // namespace detail

/// rho -> (1/2^p) sum_r W^r rho W^{-r} (density), or psi -> W^r psi with r
/// uniform in [0, 2^p) (trajectory). Density mode charges 2^p walk steps,
/// trajectory mode charges the sampled r.
inline QuantumState randomization_channel(const QuantumState& state, const WalkOperator& walk,
                                          int p_bits, WalkStepCounter* counter = nullptr,
                                          Engine* engine = nullptr) {
  detail::require_matching(state, walk);
  const std::uint64_t n = std::uint64_t{1} << p_bits;
  if (state.is_density()) {
    if (counter) counter->charge(n);
    return QuantumState::density(detail::apply_in_eigenbasis(
        state.rho(), walk,
        [p_bits](Eigen::Index, Eigen::Index, double ta, double tb) {
          return averaged_phasor(ta - tb, p_bits);
        }));
  }
  require(engine != nullptr, ErrorKind::precondition, "trajectory channel needs a random engine");
  const std::uint64_t r = uniform_below(*engine, n);
  if (counter) counter->charge(r);
  const Eigen::MatrixXcd& v = walk.spectrum.vectors;
  Eigen::VectorXcd c = v.adjoint() * state.vector();
  for (Eigen::Index a = 0; a < c.size(); ++a) {
    c[a] *= std::polar(1.0, static_cast<double>(r) * walk.spectrum.phases[a]);
  }
  return QuantumState::pure(Eigen::VectorXcd(v * c));
}

/// W^r applied through the structured walk: r literal steps.
inline QuantumState randomization_channel(const QuantumState& state, const StructuredWalk& walk,
                                          int p_bits, WalkStepCounter* counter, Engine& engine) {
  require(!state.is_density(), ErrorKind::precondition,
          "structured walks only drive trajectory states");
  require(static_cast<std::size_t>(state.dim()) == walk.dim(), ErrorKind::dimension_mismatch,
          "state dimension does not match walk dimension");
  const std::uint64_t r = uniform_below(engine, std::uint64_t{1} << p_bits);
  Eigen::VectorXd re = state.vector().real();
  Eigen::VectorXd im = state.vector().imag();
  const bool has_imag = !im.isZero(0.0);
  WalkStepCounter local;
  re = walk.apply_power(std::move(re), r, &local);
  if (has_imag) im = walk.apply_power(std::move(im), r);
  if (counter) counter->charge(local.steps);
  Eigen::VectorXcd out(re.size());
  out.real() = re;
  out.imag() = has_imag ? im : Eigen::VectorXd::Zero(re.size());
  return QuantumState::pure(std::move(out));
}

/// Amplitude (1/2^p) sum_r e^{i r (theta - 2 pi m / 2^p)} of ancilla outcome m
/// on an eigenvector of phase theta.
inline cplx pea_amplitude(double theta, std::uint64_t m, int p_bits) {
  const double n = std::ldexp(1.0, p_bits);
  return averaged_phasor(theta - 2.0 * std::numbers::pi * static_cast<double>(m) / n, p_bits);
}

enum class PeaReadout { discard, sample, postselect };

struct PeaResult {
  QuantumState state;
  Eigen::VectorXd outcome_probabilities;  // size 2^p
  std::optional<std::uint64_t> outcome;
};

/// Phase estimation with a p-bit register, simulated in W's eigenbasis.
/// `discard` returns the outcome-averaged channel; `sample` draws m;
/// `postselect` conditions on the given outcome. Charges 2^p walk steps.
inline PeaResult pea_channel(const QuantumState& state, const WalkOperator& walk, int p_bits,
                             PeaReadout readout = PeaReadout::discard,
                             WalkStepCounter* counter = nullptr, Engine* engine = nullptr,
                             std::uint64_t postselected = 0) {
  detail::require_matching(state, walk);
  const std::uint64_t n = std::uint64_t{1} << p_bits;
  const Eigen::MatrixXcd& v = walk.spectrum.vectors;
  const Eigen::VectorXd& th = walk.spectrum.phases;
  const Eigen::Index dim = th.size();
  if (counter) counter->charge(n);

  // Amplitude table A(theta_a, m), stored column per outcome.
  Eigen::MatrixXcd amp(dim, static_cast<Eigen::Index>(n));
  for (std::uint64_t m = 0; m < n; ++m) {
    for (Eigen::Index a = 0; a < dim; ++a) {
      amp(a, static_cast<Eigen::Index>(m)) = pea_amplitude(th[a], m, p_bits);
    }
  }

  Eigen::VectorXd populations(dim);
  Eigen::MatrixXcd local;
  Eigen::VectorXcd coeffs;
  if (state.is_density()) {
    local = v.adjoint() * state.rho() * v;
    populations = local.diagonal().real();
  } else {
    coeffs = v.adjoint() * state.vector();
    populations = coeffs.cwiseAbs2();
  }
  Eigen::VectorXd probabilities = amp.cwiseAbs2().transpose() * populations;

  const auto condition = [&](std::uint64_t m) -> QuantumState {
    const double prob = probabilities[static_cast<Eigen::Index>(m)];
    require(prob > 0.0, ErrorKind::precondition,
            "phase-estimation outcome " + std::to_string(m) + " has zero probability");
    const Eigen::VectorXcd a = amp.col(static_cast<Eigen::Index>(m));
    if (state.is_density()) {
      Eigen::MatrixXcd next = (a * a.adjoint()).cwiseProduct(local) / prob;
      Eigen::MatrixXcd out = v * next * v.adjoint();
      return QuantumState::density(Eigen::MatrixXcd(0.5 * (out + out.adjoint())));
    }
    Eigen::VectorXcd next = a.cwiseProduct(coeffs) / std::sqrt(prob);
    return QuantumState::pure(Eigen::VectorXcd(v * next));
  };

  switch (readout) {
    case PeaReadout::postselect:
      require(postselected < n, ErrorKind::precondition, "postselected outcome out of range");
      return {condition(postselected), probabilities, postselected};
    case PeaReadout::sample: {
      require(engine != nullptr, ErrorKind::precondition, "sampling an outcome needs an engine");
      double u = uniform01(*engine) * probabilities.sum();
      std::uint64_t m = 0;
      for (; m + 1 < n; ++m) {
        u -= probabilities[static_cast<Eigen::Index>(m)];
        if (u < 0.0) break;
      }
      while (probabilities[static_cast<Eigen::Index>(m)] <= 0.0 && m > 0) --m;
      return {condition(m), probabilities, m};
    }
    case PeaReadout::discard:
      break;
  }

  require(state.is_density(), ErrorKind::precondition,
          "a pure trajectory cannot discard the phase-estimation outcome; sample it");
  // sum_m (A_m A_m^H) o local.
  Eigen::MatrixXcd weights = amp * amp.adjoint();
  return {QuantumState::density(Eigen::MatrixXcd(detail::apply_in_eigenbasis(
              state.rho(), walk,
              [&weights](Eigen::Index a, Eigen::Index b, double, double) { return weights(a, b); }))),
          probabilities, std::nullopt};
}

/// Measures the second register in the computational basis and discards the
/// result: zeroes coherences between different second-register values
/// (density), or samples b and projects (trajectory).
inline QuantumState decohere_second_register(const QuantumState& state, std::size_t d,
                                             Engine* engine = nullptr) {
  require(static_cast<std::size_t>(state.dim()) == d * d, ErrorKind::dimension_mismatch,
          "state dimension is not d^2");
  const auto n = static_cast<Eigen::Index>(d * d);
  const auto dd = static_cast<Eigen::Index>(d);
  if (state.is_density()) {
    Eigen::MatrixXcd rho = state.rho();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i % dd != j % dd) rho(i, j) = 0.0;
      }
    }
    return QuantumState::density(std::move(rho));
  }
  require(engine != nullptr, ErrorKind::precondition, "trajectory dephasing needs an engine");
  const Eigen::VectorXcd& psi = state.vector();
  Eigen::VectorXd marginal = Eigen::VectorXd::Zero(dd);
  for (Eigen::Index i = 0; i < n; ++i) marginal[i % dd] += std::norm(psi[i]);
  double u = uniform01(*engine) * marginal.sum();
  Eigen::Index b = 0;
  for (; b + 1 < dd; ++b) {
    u -= marginal[b];
    if (u < 0.0) break;
  }
  while (marginal[b] <= 0.0 && b > 0) --b;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index a = 0; a < dd; ++a) out[a * dd + b] = psi[a * dd + b];
  out /= std::sqrt(marginal[b]);
  return QuantumState::pure(std::move(out));
}

// ---------------------------------------------------------------------------
// Runs

struct StepRecord {
  std::size_t k = 0;  // rung index of the state after this step (2..Q)
  double beta = 0.0;
  double fidelity = 1.0;
  double coherence_nu = 0.0;
  double leakage_chi = 0.0;
  double mu = 0.0;
  std::uint64_t walk_steps_cumulative = 0;
  int rounds = 0;
  double null_sector_mass = 0.0;
};

struct RunReport {
  double success_probability = 0.0;
  double final_fidelity = 1.0;
  std::uint64_t n_qsa = 0;          // all trajectories combined in trajectory mode
  double n_qsa_per_run = 0.0;
  std::uint64_t n_sa_reference = 0;
  double final_beta = 0.0;          // beta of the last rung, (Q - 1) delta_beta
  double gibbs_ground_mass = 0.0;   // ground mass of the Gibbs law at beta_final
  double tv_to_gibbs = 0.0;         // final distribution vs Gibbs at the last rung
  double mu_max = 0.0;              // measured over the executed schedule
  bool fidelity_bound_holds = true; // F_k >= 1 - 2 k mu_max^2 at every step
  bool coherence_bound_holds = true;// nu_k < mu_max / 2 at every step
  std::vector<double> final_distribution;
  std::vector<StepRecord> diagnostics;
  QsaParams params;
};

namespace detail {

inline std::vector<bool> ground_mask(const ProblemInstance& instance) {
  std::vector<bool> ground(instance.size(), false);
  for (std::size_t g : spectrum_summary(instance).ground_set) ground[g] = true;
  return ground;
}

inline double mass_on(const Eigen::VectorXd& p, const std::vector<bool>& mask) {
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) total += p[static_cast<Eigen::Index>(i)];
  }
  return total;
}

inline std::uint64_t sa_reference_steps(const ProblemInstance& instance, double epsilon) {
  if (spectrum_summary(instance).constant_energy()) return 0;
  return sa_schedule(instance, epsilon).schedule.steps;
}

inline void check_caps(const ProblemInstance& instance, const QsaParams& params) {
  const std::size_t d = instance.size();
  if (params.representation == Representation::density || params.mode == ZenoMode::pea) {
    require(d <= kMaxDensityConfigurations, ErrorKind::instance_too_large,
            "density-mode and phase-estimation runs need d <= " +
                std::to_string(kMaxDensityConfigurations) + ", got " + std::to_string(d));
  } else {
    require(d <= kMaxTrajectoryConfigurations, ErrorKind::instance_too_large,
            "trajectory-mode runs need d <= " + std::to_string(kMaxTrajectoryConfigurations) +
                ", got " + std::to_string(d));
  }
}

inline void finish_bounds(RunReport& report) {
  const double mu2 = report.mu_max * report.mu_max;
  for (const StepRecord& row : report.diagnostics) {
    if (row.fidelity < 1.0 - 2.0 * static_cast<double>(row.k) * mu2) {
      report.fidelity_bound_holds = false;
    }
    if (!(row.coherence_nu < report.mu_max / 2.0)) report.coherence_bound_holds = false;
  }
}

inline RunReport run_density(const ProblemInstance& instance, const QsaParams& params) {
  const std::size_t d = instance.size();
  const std::vector<bool> ground = ground_mask(instance);
  RunReport report;
  report.params = params;

  Eigen::VectorXd pi_prev = gibbs_distribution(instance, params.beta(1));
  QuantumState state = QuantumState::density(stationary_state(metropolis_chain(instance, 0.0)));
  WalkStepCounter counter;
  double mu_max = 0.0;

  for (std::size_t k = 1; k < params.q_steps; ++k) {
    const double beta = params.beta(k + 1);
    const TransitionMatrix chain = metropolis_chain(instance, beta);
    const WalkOperator walk = build_walk(chain);
    const int rounds = params.rounds(k);
    for (int round = 0; round < rounds; ++round) {
      if (params.mode == ZenoMode::randomization) {
        state = randomization_channel(state, walk, params.p_bits, &counter);
      } else {
        state = pea_channel(state, walk, params.p_bits, PeaReadout::discard, &counter).state;
      }
      state = decohere_second_register(state, d);
    }

    StepRecord row;
    row.k = k + 1;
    row.beta = beta;
    row.rounds = rounds;
    const Eigen::VectorXcd target = walk.psi0.cast<cplx>();
    const Eigen::VectorXcd rho_target = state.rho() * target;
    row.fidelity = target.dot(rho_target).real();
    row.coherence_nu = (rho_target - row.fidelity * target).norm();
    row.leakage_chi = 1.0 - row.fidelity;
    const Eigen::VectorXd pi_next = chain.pi();
    row.mu = std::sqrt(overlap_deficiency_squared(pi_prev, pi_next));
    mu_max = std::max(mu_max, row.mu);
    row.walk_steps_cumulative = counter.steps;

    const Eigen::MatrixXcd& v = walk.spectrum.vectors;
    double zero_phase_mass = 0.0;
    for (Eigen::Index a = 0; a < v.cols(); ++a) {
      if (std::abs(walk.spectrum.phases[a]) <= kPhaseTolerance) {
        zero_phase_mass += v.col(a).dot(state.rho() * v.col(a)).real();
      }
    }
    row.null_sector_mass = std::max(0.0, zero_phase_mass - row.fidelity);
    report.diagnostics.push_back(row);
    pi_prev = pi_next;
  }

  const Eigen::VectorXd dist = state.first_register_distribution(d);
  report.final_distribution.assign(dist.data(), dist.data() + dist.size());
  report.success_probability = mass_on(dist, ground);
  report.final_fidelity = report.diagnostics.empty() ? 1.0 : report.diagnostics.back().fidelity;
  report.n_qsa = counter.steps;
  report.n_qsa_per_run = static_cast<double>(counter.steps);
  report.mu_max = mu_max;
  report.final_beta = params.beta(params.q_steps);
  report.tv_to_gibbs = total_variation(dist, gibbs_distribution(instance, report.final_beta));
  return report;
}

struct TrajectoryBatch {
  std::vector<std::size_t> final_configurations;
  std::vector<std::uint64_t> steps;
  std::vector<StepRecord> diagnostics;
  Eigen::VectorXd mean_marginal;
  double mu_max = 0.0;
};

// Runs `count` independent trajectories, stream t = derive(seed,
// "qsa-trajectory", t). Rungs are processed in lockstep so each walk is
// built once; results do not depend on the worker count.
inline TrajectoryBatch run_trajectories(const ProblemInstance& instance, const QsaParams& params,
                                        std::size_t count) {
  const std::size_t d = instance.size();
  const bool structured =
      params.mode == ZenoMode::randomization && d > kMaxDenseWalkConfigurations;
  TrajectoryBatch batch;
  std::vector<Engine> engines;
  engines.reserve(count);
  for (std::size_t t = 0; t < count; ++t) engines.push_back(make_engine(params.seed, "qsa-trajectory", t));

  const Eigen::VectorXd start = stationary_state(metropolis_chain(instance, 0.0));
  std::vector<QuantumState> states(count, QuantumState::pure(start));
  std::vector<WalkStepCounter> counters(count);
  Eigen::VectorXd pi_prev = gibbs_distribution(instance, params.beta(1));

  for (std::size_t k = 1; k < params.q_steps; ++k) {
    const double beta = params.beta(k + 1);
    const TransitionMatrix chain = metropolis_chain(instance, beta);
    std::optional<WalkOperator> dense;
    std::optional<StructuredWalk> matrix_free;
    if (structured) {
      matrix_free.emplace(chain);
    } else {
      dense.emplace(build_walk(chain));
    }
    const int rounds = params.rounds(k);
    parallel_for(count, [&](std::size_t t) {
      for (int round = 0; round < rounds; ++round) {
        if (params.mode == ZenoMode::pea) {
          states[t] = pea_channel(states[t], *dense, params.p_bits, PeaReadout::sample,
                                  &counters[t], &engines[t])
                          .state;
        } else if (structured) {
          states[t] = randomization_channel(states[t], *matrix_free, params.p_bits, &counters[t],
                                            engines[t]);
        } else {
          states[t] = randomization_channel(states[t], *dense, params.p_bits, &counters[t],
                                            &engines[t]);
        }
        states[t] = decohere_second_register(states[t], d, &engines[t]);
      }
    });

    // Diagnostics of the trajectory-averaged state rho = mean |psi_t><psi_t|.
    const Eigen::VectorXd target = stationary_state(chain);
    const Eigen::VectorXcd tc = target.cast<cplx>();
    Eigen::VectorXcd rho_target = Eigen::VectorXcd::Zero(tc.size());
    double fidelity = 0.0;
    std::uint64_t steps = 0;
    for (std::size_t t = 0; t < count; ++t) {
      const Eigen::VectorXcd& psi = states[t].vector();
      const cplx overlap = psi.dot(tc);  // <psi|target>
      rho_target += psi * overlap;
      fidelity += std::norm(overlap);
      steps += counters[t].steps;
    }
    rho_target /= static_cast<double>(count);
    fidelity /= static_cast<double>(count);

    StepRecord row;
    row.k = k + 1;
    row.beta = beta;
    row.rounds = rounds;
    row.fidelity = fidelity;
    row.coherence_nu = (rho_target - fidelity * tc).norm();
    row.leakage_chi = 1.0 - fidelity;
    const Eigen::VectorXd pi_next = chain.pi();
    row.mu = std::sqrt(overlap_deficiency_squared(pi_prev, pi_next));
    batch.mu_max = std::max(batch.mu_max, row.mu);
    row.walk_steps_cumulative = steps;
    batch.diagnostics.push_back(row);
    pi_prev = pi_next;
  }

  batch.final_configurations.resize(count);
  batch.steps.resize(count);
  batch.mean_marginal = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < count; ++t) {
    const Eigen::VectorXd marginal = states[t].first_register_distribution(d);
    batch.mean_marginal += marginal / static_cast<double>(count);
    double u = uniform01(engines[t]) * marginal.sum();
    std::size_t a = 0;
    for (; a + 1 < d; ++a) {
      u -= marginal[static_cast<Eigen::Index>(a)];
      if (u < 0.0) break;
    }
    while (marginal[static_cast<Eigen::Index>(a)] <= 0.0 && a > 0) --a;
    batch.final_configurations[t] = a;
    batch.steps[t] = counters[t].steps;
  }
  return batch;
}

inline RunReport run_trajectory_mode(const ProblemInstance& instance, const QsaParams& params) {
  const std::size_t d = instance.size();
  const std::vector<bool> ground = ground_mask(instance);
  const TrajectoryBatch batch = run_trajectories(instance, params, params.trajectories);

  RunReport report;
  report.params = params;
  report.diagnostics = batch.diagnostics;
  report.mu_max = batch.mu_max;
  Eigen::VectorXd histogram = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t a : batch.final_configurations) histogram[static_cast<Eigen::Index>(a)] += 1.0;
  histogram /= static_cast<double>(params.trajectories);
  report.final_distribution.assign(histogram.data(), histogram.data() + histogram.size());
  report.success_probability = mass_on(histogram, ground);
  report.final_fidelity = report.diagnostics.empty() ? 1.0 : report.diagnostics.back().fidelity;
  for (std::uint64_t s : batch.steps) report.n_qsa += s;
  report.n_qsa_per_run =
      static_cast<double>(report.n_qsa) / static_cast<double>(params.trajectories);
  report.final_beta = params.beta(params.q_steps);
  report.tv_to_gibbs =
      total_variation(histogram, gibbs_distribution(instance, report.final_beta));
  return report;
}

}  // namespace detail

/// Starts from the uniform superposition |psi_0^1> (beta_1 = 0) and, for
/// k = 1..Q-1, applies s_k rounds of {Zeno channel with W_{k+1}, second
/// register dephasing}. Finally measures the first register.
inline RunReport qsa_run(const ProblemInstance& instance, const QsaParams& params) {
  validate(params);
  detail::check_caps(instance, params);
  RunReport report = params.representation == Representation::density
                         ? detail::run_density(instance, params)
                         : detail::run_trajectory_mode(instance, params);
  const std::vector<bool> ground = detail::ground_mask(instance);
  report.gibbs_ground_mass =
      detail::mass_on(gibbs_distribution(instance, params.beta_final), ground);
  report.n_sa_reference = detail::sa_reference_steps(instance, params.epsilon);
  detail::finish_bounds(report);
  return report;
}

struct RepeatReport {
  bool succeeded = false;
  std::size_t repeats_used = 0;
  std::size_t max_repeats = 0;
  std::vector<std::size_t> outcomes;  // final configuration of each executed repeat
  std::vector<bool> outcome_success;
  std::uint64_t n_qsa = 0;            // walk steps over executed repeats
  double failure_model = 1.0;         // 2^{-repeats_used}, valid when single-run success >= 1/2
};

/// Runs single-trajectory QSA up to max_repeats times and stops at the first
/// measured ground configuration. Repeat i uses trajectory stream i of
/// params.seed, so max_repeats = 1 reproduces qsa_run with one trajectory.
inline RepeatReport repeat_until_success(const ProblemInstance& instance, QsaParams params,
                                         std::size_t max_repeats) {
  require(std::abs(params.epsilon - 0.5) < 1e-12, ErrorKind::precondition,
          "repeat_until_success expects parameters chosen for epsilon = 1/2");
  require(max_repeats >= 1, ErrorKind::precondition, "max_repeats must be >= 1");
  params.representation = Representation::trajectory;
  validate(params);
  detail::check_caps(instance, params);
  const std::vector<bool> ground = detail::ground_mask(instance);
  // Repeats are independent streams, so running them as one batch and
  // scanning in order matches a sequential stop-at-first-success loop.
  const detail::TrajectoryBatch batch = detail::run_trajectories(instance, params, max_repeats);

  RepeatReport report;
  report.max_repeats = max_repeats;
  for (std::size_t i = 0; i < max_repeats; ++i) {
    const std::size_t sigma = batch.final_configurations[i];
    report.outcomes.push_back(sigma);
    report.outcome_success.push_back(ground[sigma]);
    report.n_qsa += batch.steps[i];
    ++report.repeats_used;
    if (ground[sigma]) {
      report.succeeded = true;
      break;
    }
  }
  report.failure_model = std::ldexp(1.0, -static_cast<int>(report.repeats_used));
  return report;
}

// ---------------------------------------------------------------------------
// Complexity comparison

/// (E_M/gamma) ln(d/eps^2) / delta with unit constants.
inline double predicted_n_sa(std::size_t d, double epsilon, double em_over_gamma, double delta) {
  return em_over_gamma * std::log(static_cast<double>(d) / (epsilon * epsilon)) / delta;
}

/// (E_M/gamma)^2 ln^2(d/eps) ln(d) / (eps sqrt(delta)) with unit constants.
inline double predicted_n_qsa(std::size_t d, double epsilon, double em_over_gamma,
                              double delta) {
  const double l = std::log(static_cast<double>(d) / epsilon);
  return em_over_gamma * em_over_gamma * l * l * std::log(static_cast<double>(d)) /
         (epsilon * std::sqrt(delta));
}

struct CompareOptions {
  double c_q = 1.0;
  double c_beta = 1.0;
  double c_delta = 1.0;
  std::size_t grid_size = 64;
  std::size_t max_sa_steps = std::size_t{1} << 22;
  std::size_t max_q_steps = 4096;
  bool measure = true;
};

struct ComparisonRecord {
  std::size_t d = 0;
  double epsilon = 0.0;
  double e_max = 0.0;
  double gamma = 0.0;
  double delta_sa = 0.0;    // minimum gap on [0, beta_P]
  double delta_qsa = 0.0;   // minimum gap on [0, beta_f]
  double phi1 = 0.0;        // arccos(1 - delta_qsa)
  double predicted_n_sa = 0.0;
  double predicted_n_qsa = 0.0;
  std::size_t schedule_steps = 0;  // P from sa_schedule
  int p_bits = 0;
  std::size_t q_formula = 0;       // Q from choose_params
  bool exhaustive_fallback = false;
  std::size_t fallback_cost = 0;
  // Smallest classical P / quantum Q reaching success >= 1 - eps.
  bool measured = false;
  bool sa_reached = false;
  std::size_t measured_n_sa = 0;
  double measured_sa_success = 0.0;
  bool qsa_reached = false;
  std::size_t measured_q = 0;
  std::uint64_t measured_n_qsa = 0;
  double measured_qsa_success = 0.0;
};

namespace detail {

// Smallest n in [1, limit] with good(n), by doubling then bisection, assuming
// good is monotone; returns nullopt when good(limit) fails.
template <class Good>
std::optional<std::size_t> smallest_passing(std::size_t limit, Good&& good) {
  std::size_t hi = 1;
  while (hi < limit && !good(hi)) hi = std::min(limit, hi * 2);
  if (!good(hi)) return std::nullopt;
  std::size_t lo = hi / 2;  // fails (or zero)
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (good(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace detail

inline ComparisonRecord compare_complexity(const ProblemInstance& instance, double epsilon,
                                           const CompareOptions& options = {}) {
  const SpectrumSummary summary = spectrum_summary(instance);
  ComparisonRecord rec;
  rec.d = instance.size();
  rec.epsilon = epsilon;
  rec.e_max = summary.e_max;
  rec.gamma = summary.require_gamma();

  const SaSchedule sa =
      sa_schedule(instance, epsilon, {options.c_beta, options.c_delta, options.grid_size});
  ChooseParamsOptions cp;
  cp.grid_size = options.grid_size;
  const QsaParams params = choose_params(instance, epsilon, options.c_q, cp);

  rec.delta_sa = sa.gaps.delta_min;
  rec.delta_qsa = params.delta_min;
  rec.phi1 = clamped_acos(1.0 - rec.delta_qsa);
  const double ratio = rec.e_max / rec.gamma;
  rec.predicted_n_sa = predicted_n_sa(rec.d, epsilon, ratio, rec.delta_sa);
  rec.predicted_n_qsa = predicted_n_qsa(rec.d, epsilon, ratio, rec.delta_qsa);
  rec.schedule_steps = sa.schedule.steps;
  rec.p_bits = params.p_bits;
  rec.q_formula = params.q_steps;
  rec.exhaustive_fallback = params.q_steps > rec.d;
  rec.fallback_cost = rec.exhaustive_fallback ? rec.d : 0;

  if (!options.measure) return rec;
  rec.measured = true;
  const std::vector<bool> ground = detail::ground_mask(instance);

  const double beta_p = sa.schedule.beta_final;
  const auto sa_success = [&](std::size_t steps) {
    Schedule s{beta_p / static_cast<double>(steps), steps, beta_p, epsilon};
    return detail::mass_on(propagate_distribution(instance, s), ground);
  };
  if (const auto p = detail::smallest_passing(
          options.max_sa_steps, [&](std::size_t n) { return sa_success(n) >= 1.0 - epsilon; })) {
    rec.sa_reached = true;
    rec.measured_n_sa = *p;
    rec.measured_sa_success = sa_success(*p);
  }

  if (instance.size() <= kMaxDensityConfigurations) {
    const auto run_with = [&](std::size_t q) {
      QsaParams trial = params;
      trial.q_steps = q;
      trial.delta_beta = trial.beta_final / static_cast<double>(q);
      return qsa_run(instance, trial);
    };
    if (const auto q = detail::smallest_passing(options.max_q_steps, [&](std::size_t n) {
          return run_with(n).success_probability >= 1.0 - epsilon;
        })) {
      const RunReport report = run_with(*q);
      rec.qsa_reached = true;
      rec.measured_q = *q;
      rec.measured_n_qsa = report.n_qsa;
      rec.measured_qsa_success = report.success_probability;
    }
  }
  return rec;
}

}  // namespace qsa
