#pragma once

// Invariant checks for one instance: chain properties, the walk's spectral
// correspondences and the Zeno channel identities, each reported with its
// residual and tolerance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsa/markov.hpp"
#include "qsa/problem.hpp"
#include "qsa/random.hpp"
#include "qsa/state.hpp"
#include "qsa/walk.hpp"
#include "qsa/zeno.hpp"

namespace qsa {

struct CheckResult {
  std::string name;
  double beta = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Random density operator of dimension n: G G^H / tr with Gaussian G.
inline Eigen::MatrixXcd random_density(Eigen::Index n, Engine& engine) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = cplx(normal(engine), normal(engine));
  }
  Eigen::MatrixXcd rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// Sorted real parts of the eigenvalues of a general square matrix.
inline Eigen::VectorXd sorted_real_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  Eigen::VectorXd values = solver.eigenvalues().real();
  std::sort(values.data(), values.data() + values.size());
  return values;
}

class CheckList {
 public:
  void add(std::string name, double beta, double residual, double tolerance) {
    results_.push_back({std::move(name), beta, residual, tolerance, residual <= tolerance});
  }
  void add_strict(std::string name, double beta, double residual, double bound) {
    results_.push_back({std::move(name), beta, residual, bound, residual < bound});
  }
  const std::vector<CheckResult>& results() const { return results_; }
  bool all_passed() const {
    return std::all_of(results_.begin(), results_.end(), [](const auto& r) { return r.passed; });
  }

 private:
  std::vector<CheckResult> results_;
};

/// Chain and walk checks at one inverse temperature.
inline void check_chain_and_walk(const ProblemInstance& instance, double beta, CheckList& checks) {
  const TransitionMatrix chain = metropolis_chain(instance, beta);
  const Eigen::MatrixXd& m = chain.m();
  const Eigen::VectorXd& pi = chain.pi();
  const auto d = static_cast<Eigen::Index>(chain.size());

  checks.add("row_stochastic", beta, (m.rowwise().sum().array() - 1.0).abs().maxCoeff(),
             kStochasticTolerance);
  double balance = 0.0;
  for (Eigen::Index s = 0; s < d; ++s) {
    for (Eigen::Index t = 0; t < d; ++t) {
      balance = std::max(balance, std::abs(pi[s] * m(s, t) - pi[t] * m(t, s)));
    }
  }
  checks.add("detailed_balance", beta, balance, 1e-12);
  checks.add("nonnegative_spectrum", beta, std::max(0.0, -chain.lambda().minCoeff()), 1e-12);
  checks.add("gibbs_fixed_point", beta, (pi.transpose() * m - pi.transpose()).cwiseAbs().sum(),
             1e-12);
  checks.add("gibbs_matches", beta,
             (pi - gibbs_distribution(instance, beta)).cwiseAbs().maxCoeff(), 1e-10);

  if (chain.size() > kMaxDenseWalkConfigurations) return;
  const Isometries iso = build_isometries(chain);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  checks.add("isometry_x", beta, (iso.x.transpose() * iso.x - eye).cwiseAbs().maxCoeff(),
             kIsometryTolerance);
  checks.add("isometry_y", beta, (iso.y.transpose() * iso.y - eye).cwiseAbs().maxCoeff(),
             kIsometryTolerance);
  const Eigen::MatrixXd overlap = iso.x.transpose() * iso.y;
  checks.add("xty_equals_symmetrized_chain", beta,
             (overlap - chain.symmetrized()).cwiseAbs().maxCoeff(), kSymmetryTolerance);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> xty(0.5 * (overlap + overlap.transpose()),
                                                     Eigen::EigenvaluesOnly);
  checks.add("xty_spectrum_matches_chain", beta,
             (xty.eigenvalues() - sorted_real_eigenvalues(m)).cwiseAbs().maxCoeff(), 1e-10);

  const WalkOperator walk = build_walk(chain);
  const auto n = static_cast<Eigen::Index>(walk.dim);
  checks.add("walk_orthogonal", beta,
             (walk.w * walk.w.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(),
             1e-10);
  checks.add("stationary_state_fixed", beta, (walk.w * walk.psi0 - walk.psi0).norm(), 1e-10);
  checks.add("eigenphases_contain_2phi", beta,
             match_phases(walk.predicted_phases(), walk.eigenphases()).max_residual,
             kPhaseTolerance);
  checks.add("gap_below_half_phase_gap_squared", beta,
             std::max(0.0, chain.delta() - 0.5 * walk.phase_gap * walk.phase_gap), 1e-12);
  checks.add("walk_eigensystem", beta,
             std::max(walk.spectrum.eigen_residual, walk.spectrum.unitarity_residual), 1e-10);

  WalkStepCounter counter;
  const QuantumState fixed = QuantumState::density(walk.psi0);
  const QuantumState after =
      decohere_second_register(randomization_channel(fixed, walk, 3, &counter), chain.size());
  checks.add("composite_step_fixed_point", beta, trace_distance(after.rho(), fixed.rho()), 1e-10);
}

/// Phase-estimation (outcome discarded) vs randomization on random states.
inline void check_channel_equivalence(const ProblemInstance& instance, double beta, int p_bits,
                                      std::uint64_t seed, CheckList& checks, int samples = 3) {
  if (instance.size() > 8) return;
  const WalkOperator walk = build_walk(metropolis_chain(instance, beta));
  Engine engine = make_engine(seed, "verify-channel", 0);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const QuantumState state =
        QuantumState::density(random_density(static_cast<Eigen::Index>(walk.dim), engine));
    const QuantumState a = randomization_channel(state, walk, p_bits);
    const QuantumState b = pea_channel(state, walk, p_bits).state;
    worst = std::max(worst, trace_distance(a.rho(), b.rho()));
  }
  checks.add("pea_discard_equals_randomization", beta, worst, 1e-10);
}

/// Largest damping_kernel over eigenphases 2 phi with |phi| >= sqrt(2 delta),
/// compared against 1/2; the bound kernel^s < 2^{-s} follows for every s.
inline double worst_kernel_over_gap(const WalkOperator& walk, double delta, int p_bits) {
  double worst = 0.0;
  const double floor_phase = std::sqrt(2.0 * delta);
  for (Eigen::Index a = 0; a < walk.eigenphases().size(); ++a) {
    const double theta = walk.eigenphases()[a];
    if (std::abs(theta) / 2.0 + 1e-12 < floor_phase) continue;
    worst = std::max(worst, damping_kernel(theta, p_bits));
  }
  return worst;
}

struct VerifySummary {
  std::vector<double> betas;
  int p_bits = 0;
  CheckList checks;
};

inline VerifySummary verify_instance(const ProblemInstance& instance, double epsilon,
                                     std::uint64_t seed, std::size_t grid_size = 64) {
  VerifySummary out;
  const SpectrumSummary summary = spectrum_summary(instance);
  double beta_top = 1.0;
  std::optional<QsaParams> params;
  if (!summary.constant_energy()) {
    ChooseParamsOptions options;
    options.grid_size = grid_size;
    params = choose_params(instance, epsilon, 1.0, options);
    beta_top = params->beta_final;
    out.p_bits = params->p_bits;
  } else {
    out.p_bits = pea_bits_for_gap(metropolis_chain(instance, 0.0).delta());
  }
  out.betas = {0.0, 0.5 * beta_top, beta_top};
  for (double beta : out.betas) {
    check_chain_and_walk(instance, beta, out.checks);
    check_channel_equivalence(instance, beta, 2, seed, out.checks);
    if (instance.size() <= kMaxDenseWalkConfigurations) {
      const TransitionMatrix chain = metropolis_chain(instance, beta);
      const WalkOperator walk = build_walk(chain);
      const double delta = params ? params->delta_min : chain.delta();
      out.checks.add_strict("kernel_suppression", beta,
                            worst_kernel_over_gap(walk, delta, out.p_bits), 0.5);
    }
  }
  if (params) {
    out.checks.add_strict("mu_squared_below_eps_over_4q", params->beta_final,
                          params->mu_max * params->mu_max,
                          epsilon / (4.0 * static_cast<double>(params->q_steps)));
  }
  return out;
}

}  // namespace qsa
