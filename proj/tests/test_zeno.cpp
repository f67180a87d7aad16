#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qsa/zeno.hpp"

namespace {

using qsa::Edge;
using qsa::ProblemInstance;
using cplx = std::complex<double>;

const double kPi = std::numbers::pi;

ProblemInstance pair_instance() {
  return ProblemInstance(std::vector<double>{0.0, 1.0}, std::vector<Edge>{{0, 1}});
}

ProblemInstance ferromagnet(int n) {
  return qsa::ising_chain(n, 1.0, std::vector<double>(static_cast<std::size_t>(n), 0.0), false);
}

ProblemInstance flat_instance(std::size_t d) {
  std::vector<Edge> moves;
  for (std::size_t i = 0; i + 1 < d; ++i) moves.emplace_back(i, i + 1);
  return ProblemInstance(std::vector<double>(d, 0.0), moves);
}

Eigen::MatrixXcd ginibre_density(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(g(rng), g(rng));
  const Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace().real();
}

qsa::QsaParams hand_params(std::size_t q, double beta_final, double epsilon, int p) {
  qsa::QsaParams params;
  params.q_steps = q;
  params.beta_final = beta_final;
  params.delta_beta = beta_final / static_cast<double>(q);
  params.epsilon = epsilon;
  params.p_bits = p;
  return params;
}

TEST(ParameterRules, Examples) {
  EXPECT_EQ(qsa::pea_bits_for_gap(0.5), 5);  // 8 pi = 25.1 < 32
  EXPECT_EQ(qsa::pea_bits_for_gap(2.0), 4);  // 8 pi / 2 = 12.6 < 16
  EXPECT_EQ(qsa::rounds_for_step(1, qsa::RoundsRule::k_plus_one), 2);
  EXPECT_EQ(qsa::rounds_for_step(1, qsa::RoundsRule::k), 2);
  EXPECT_EQ(qsa::rounds_for_step(7, qsa::RoundsRule::k_plus_one), 3);  // 1 + 4/2
  EXPECT_EQ(qsa::rounds_for_step(8, qsa::RoundsRule::k_plus_one), 4);
  EXPECT_EQ(qsa::rounds_for_step(8, qsa::RoundsRule::fixed, 6), 6);
  EXPECT_NEAR(qsa::final_beta_for(16, 0.2, 1.0), std::log(40.0), 1e-15);
  EXPECT_NEAR(qsa::final_beta_for(16, 0.2, 2.0), std::log(40.0) / 2.0, 1e-15);
}

TEST(ParameterRules, PropertyPeaBitsIsSmallestSufficient) {
  for (double delta = 1e-6; delta < 2.0; delta *= 1.7) {
    const int p = qsa::pea_bits_for_gap(delta);
    const double bound = 8.0 * kPi / std::sqrt(2.0 * delta);
    EXPECT_GT(std::pow(2.0, p), bound);
    if (p > 1) {
      EXPECT_LE(std::pow(2.0, p - 1), bound);
    }
  }
  try {
    qsa::pea_bits_for_gap(0.0);
    FAIL();
  } catch (const qsa::Error& e) {
    EXPECT_EQ(e.kind(), qsa::ErrorKind::degenerate_instance);
  }
}

TEST(ChooseParams, ThreeSpinFerromagnet) {
  const auto inst = ferromagnet(3);
  const auto params = qsa::choose_params(inst, 0.25, 1.0);
  // gamma = 2, E_M = 4, d = 8.
  const double beta_f = std::log(8.0 / 0.5) / 2.0;
  EXPECT_NEAR(params.beta_final, beta_f, 1e-14);
  EXPECT_EQ(params.q_steps, static_cast<std::size_t>(std::ceil(beta_f * beta_f * 16.0 / 0.25)));
  EXPECT_NEAR(params.delta_beta * static_cast<double>(params.q_steps), beta_f, 1e-12);
  EXPECT_EQ(params.p_bits, qsa::pea_bits_for_gap(params.delta_min));
  EXPECT_TRUE(params.mu_check_passed);
  EXPECT_LT(params.mu_max * params.mu_max, params.epsilon / (4.0 * static_cast<double>(params.q_steps)));
  EXPECT_EQ(params.rounds(1), 2);
  EXPECT_NEAR(params.beta(1), 0.0, 0.0);
  EXPECT_NEAR(params.beta(params.q_steps), beta_f - params.delta_beta, 1e-12);
}

TEST(ChooseParams, Overrides) {
  qsa::ChooseParamsOptions options;
  options.p_bits = 3;
  options.q_steps = 10;
  const auto params = qsa::choose_params(ferromagnet(2), 0.25, 1.0, options);
  EXPECT_EQ(params.p_bits, 3);
  EXPECT_EQ(params.q_steps, 10u);
  EXPECT_THROW(qsa::choose_params(ferromagnet(2), 1.0), qsa::Error);
  EXPECT_THROW(qsa::choose_params(flat_instance(3), 0.25), qsa::Error);
}

TEST(OverlapDeficiency, MatchesDirectFormula) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd a(5), b(5);
    for (int i = 0; i < 5; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    a /= a.sum();
    b /= b.sum();
    const double overlap = a.cwiseSqrt().dot(b.cwiseSqrt());
    EXPECT_NEAR(qsa::overlap_deficiency_squared(a, b), 1.0 - overlap * overlap, 1e-12);
  }
  const Eigen::VectorXd same = Eigen::VectorXd::Constant(4, 0.25);
  EXPECT_EQ(qsa::overlap_deficiency_squared(same, same), 0.0);
}

TEST(Kernels, AgreeWithDirectSums) {
  for (int p = 1; p <= 6; ++p) {
    for (double x = -3.0; x <= 3.0; x += 0.37) {
      EXPECT_NEAR(qsa::damping_kernel(x, p), oracle::phasor_modulus(x, p), 1e-12);
      cplx direct = 0.0;
      for (int r = 0; r < (1 << p); ++r) direct += std::polar(1.0, r * x);
      direct /= static_cast<double>(1 << p);
      EXPECT_LE(std::abs(qsa::averaged_phasor(x, p) - direct), 1e-12);
    }
    EXPECT_EQ(qsa::damping_kernel(0.0, p), 1.0);
    EXPECT_NEAR(qsa::damping_kernel(2.0 * kPi / (1 << p), p), 0.0, 1e-12);
  }
}

TEST(RandomizationChannel, FixesStationaryState) {
  const auto walk = qsa::build_walk(qsa::metropolis_chain(ferromagnet(2), 0.9));
  const auto state = qsa::QuantumState::density(walk.psi0);
  const auto out = qsa::randomization_channel(state, walk, 4);
  const Eigen::MatrixXcd target = (walk.psi0 * walk.psi0.transpose()).cast<cplx>();
  EXPECT_LE((out.rho() - target).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RandomizationChannel, SingleBitExample) {
  const auto walk = qsa::build_walk(qsa::metropolis_chain(pair_instance(), 0.4));
  std::mt19937_64 rng(2);
  const Eigen::MatrixXcd rho = ginibre_density(4, rng);
  const Eigen::MatrixXcd w = walk.w.cast<cplx>();
  const Eigen::MatrixXcd expected = 0.5 * (rho + w * rho * w.adjoint());
  const auto out = qsa::randomization_channel(qsa::QuantumState::density(rho), walk, 1);
  EXPECT_LE((out.rho() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RandomizationChannel, PropertyMatchesExplicitAverage) {
  std::mt19937_64 rng(3);
  for (double beta : {0.0, 0.6, 1.7}) {
    for (const auto& inst : {pair_instance(), ferromagnet(2)}) {
      const auto walk = qsa::build_walk(qsa::metropolis_chain(inst, beta));
      for (int p = 1; p <= 3; ++p) {
        const Eigen::MatrixXcd rho = ginibre_density(static_cast<Eigen::Index>(walk.dim), rng);
        qsa::WalkStepCounter counter;
        const auto out = qsa::randomization_channel(qsa::QuantumState::density(rho), walk, p, &counter);
        EXPECT_LE((out.rho() - oracle::conjugation_average(walk.w, rho, p)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(counter.steps, std::uint64_t{1} << p);
        EXPECT_TRUE(out.valid());
      }
    }
  }
}

TEST(RandomizationChannel, TrajectoryAveragesToDensity) {
  const auto walk = qsa::build_walk(qsa::metropolis_chain(pair_instance(), 0.8));
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(4);
  psi[1] = 0.6;
  psi[2] = 0.8;
  const int p = 2;
  // Every r in [0, 4) is eventually drawn; the empirical mean converges to
  // the conjugation average.
  auto engine = qsa::make_engine(5, "test", 0);
  Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(4, 4);
  const int samples = 20000;
  for (int i = 0; i < samples; ++i) {
    const auto out = qsa::randomization_channel(qsa::QuantumState::pure(psi), walk, p, nullptr, &engine);
    mean += out.vector() * out.vector().adjoint();
  }
  mean /= samples;
  const Eigen::MatrixXcd rho = (psi * psi.transpose()).cast<cplx>();
  EXPECT_LE((mean - oracle::conjugation_average(walk.w, rho, p)).cwiseAbs().maxCoeff(), 0.03);
}

TEST(RandomizationChannel, StructuredAndDenseDrawTheSamePower) {
  const auto chain = qsa::metropolis_chain(ferromagnet(2), 1.1);
  const auto dense = qsa::build_walk(chain);
  const qsa::StructuredWalk structured(chain);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::VectorXd psi(16);
  for (Eigen::Index i = 0; i < 16; ++i) psi[i] = g(rng);
  psi.normalize();
  auto e1 = qsa::make_engine(9, "test", 1);
  auto e2 = qsa::make_engine(9, "test", 1);
  for (int trial = 0; trial < 10; ++trial) {
    qsa::WalkStepCounter c1, c2;
    const auto a = qsa::randomization_channel(qsa::QuantumState::pure(psi), dense, 3, &c1, &e1);
    const auto b = qsa::randomization_channel(qsa::QuantumState::pure(psi), structured, 3, &c2, e2);
    EXPECT_EQ(c1.steps, c2.steps);
    EXPECT_LE((a.vector() - b.vector()).norm(), 1e-10);
  }
}

TEST(PeaChannel, AmplitudeExamples) {
  EXPECT_NEAR(std::abs(qsa::pea_amplitude(0.0, 0, 4)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(qsa::pea_amplitude(0.0, 3, 4)), 0.0, 1e-12);
  const double theta = 2.0 * kPi * 3.0 / 16.0;
  EXPECT_NEAR(std::abs(qsa::pea_amplitude(theta, 3, 4)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(qsa::pea_amplitude(theta, 4, 4)), 0.0, 1e-12);
}

TEST(PeaChannel, StationaryStateReadsZero) {
  const auto walk = qsa::build_walk(qsa::metropolis_chain(ferromagnet(2), 0.5));
  const auto res = qsa::pea_channel(qsa::QuantumState::density(walk.psi0), walk, 3);
  EXPECT_NEAR(res.outcome_probabilities[0], 1.0, 1e-12);
  EXPECT_NEAR(res.outcome_probabilities.sum(), 1.0, 1e-12);
}

TEST(PeaChannel, PropertyMatchesExplicitRegister) {
  std::mt19937_64 rng(6);
  for (double beta : {0.0, 0.9}) {
    for (const auto& inst : {pair_instance(), ProblemInstance(std::vector<double>{0.0, 0.5, 1.5},
                                                              std::vector<Edge>{{0, 1}, {1, 2}})}) {
      const auto walk = qsa::build_walk(qsa::metropolis_chain(inst, beta));
      for (int p = 1; p <= 3; ++p) {
        const Eigen::MatrixXcd rho = ginibre_density(static_cast<Eigen::Index>(walk.dim), rng);
        const auto ref = oracle::explicit_pea(walk.w, rho, p);
        const auto state = qsa::QuantumState::density(rho);
        const auto discard = qsa::pea_channel(state, walk, p);
        Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
        for (const auto& block : ref.conditioned) total += block;
        EXPECT_LE((discard.state.rho() - total).cwiseAbs().maxCoeff(), 1e-9);
        for (int m = 0; m < (1 << p); ++m) {
          EXPECT_NEAR(discard.outcome_probabilities[m], ref.probabilities[m], 1e-9);
          if (ref.probabilities[m] < 1e-9) continue;
          const auto post = qsa::pea_channel(state, walk, p, qsa::PeaReadout::postselect, nullptr,
                                             nullptr, static_cast<std::uint64_t>(m));
          EXPECT_LE((post.state.rho() - ref.conditioned[static_cast<std::size_t>(m)] /
                                            ref.probabilities[m])
                        .cwiseAbs()
                        .maxCoeff(),
                    1e-9);
        }
      }
    }
  }
}

TEST(PeaChannel, DiscardEqualsRandomization) {
  std::mt19937_64 rng(7);
  const auto walk = qsa::build_walk(qsa::metropolis_chain(ferromagnet(2), 1.3));
  for (int p = 1; p <= 5; ++p) {
    const auto state = qsa::QuantumState::density(ginibre_density(16, rng));
    qsa::WalkStepCounter counter;
    const auto a = qsa::pea_channel(state, walk, p, qsa::PeaReadout::discard, &counter).state;
    const auto b = qsa::randomization_channel(state, walk, p);
    EXPECT_LE((a.rho() - b.rho()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(counter.steps, std::uint64_t{1} << p);
  }
}

TEST(PeaChannel, SampledOutcomeIsConsistent) {
  const auto walk = qsa::build_walk(qsa::metropolis_chain(pair_instance(), 0.3));
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(4);
  psi[1] = 1.0;
  auto engine = qsa::make_engine(3, "test", 2);
  const auto res = qsa::pea_channel(qsa::QuantumState::pure(psi), walk, 3, qsa::PeaReadout::sample,
                                    nullptr, &engine);
  ASSERT_TRUE(res.outcome.has_value());
  EXPECT_GT(res.outcome_probabilities[static_cast<Eigen::Index>(*res.outcome)], 0.0);
  EXPECT_NEAR(res.state.weight(), 1.0, 1e-12);
  EXPECT_THROW(qsa::pea_channel(qsa::QuantumState::pure(psi), walk, 3), qsa::Error);
}

TEST(Decoherence, DensityExample) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Constant(4, 4, cplx(0.25, 0.0));
  const auto out = qsa::decohere_second_register(qsa::QuantumState::density(rho), 2);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      EXPECT_EQ(out.rho()(i, j), (i % 2 == j % 2) ? cplx(0.25, 0.0) : cplx(0.0, 0.0));
    }
  }
}

TEST(Decoherence, PropertyPreservesTraceAndFirstMarginal) {
  std::mt19937_64 rng(8);
  for (std::size_t d : {2u, 3u}) {
    const auto n = static_cast<Eigen::Index>(d * d);
    const auto state = qsa::QuantumState::density(ginibre_density(n, rng));
    const auto out = qsa::decohere_second_register(state, d);
    EXPECT_NEAR(out.weight(), 1.0, 1e-12);
    EXPECT_TRUE(out.valid());
    EXPECT_LE((out.first_register_distribution(d) - state.first_register_distribution(d)).norm(), 1e-12);
    EXPECT_LE((out.rho().diagonal() - state.rho().diagonal()).norm(), 1e-15);
  }
}

TEST(Decoherence, TrajectoryProjectsOntoOneColumn) {
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(4, 0.5);
  auto engine = qsa::make_engine(1, "test", 3);
  const auto out = qsa::decohere_second_register(qsa::QuantumState::pure(psi), 2, &engine);
  const Eigen::VectorXcd v = out.vector();
  EXPECT_NEAR(v.squaredNorm(), 1.0, 1e-15);
  const bool even = std::abs(v[0]) > 0.0;
  EXPECT_EQ(std::abs(v[1]) > 0.0, !even);
  EXPECT_EQ(std::abs(v[2]) > 0.0, even);
}

TEST(QsaRun, SingleRungMeasuresUniformSuperposition) {
  const auto inst = ferromagnet(3);
  const auto report = qsa::qsa_run(inst, hand_params(1, 2.0, 0.25, 3));
  EXPECT_NEAR(report.success_probability, 2.0 / 8.0, 1e-12);
  EXPECT_EQ(report.n_qsa, 0u);
  EXPECT_TRUE(report.diagnostics.empty());
  EXPECT_EQ(report.final_fidelity, 1.0);
}

TEST(QsaRun, FlatLandscapeStaysOnTarget) {
  const auto report = qsa::qsa_run(flat_instance(4), hand_params(5, 1.0, 0.25, 2));
  EXPECT_NEAR(report.success_probability, 1.0, 1e-12);
  for (const auto& row : report.diagnostics) {
    EXPECT_NEAR(row.fidelity, 1.0, 1e-12);
    EXPECT_EQ(row.mu, 0.0);
  }
}

TEST(QsaRun, TwoSpinFerromagnetBounds) {
  const auto inst = ferromagnet(2);
  const auto params = qsa::choose_params(inst, 0.25, 1.0);
  const auto report = qsa::qsa_run(inst, params);
  EXPECT_TRUE(report.fidelity_bound_holds);
  EXPECT_TRUE(report.coherence_bound_holds);
  EXPECT_GE(report.success_probability, 0.75);
  EXPECT_EQ(report.diagnostics.size(), params.q_steps - 1);
  const double mu2 = report.mu_max * report.mu_max;
  for (const auto& row : report.diagnostics) {
    EXPECT_GE(row.fidelity, 1.0 - 2.0 * static_cast<double>(row.k) * mu2);
    EXPECT_NEAR(row.leakage_chi, 1.0 - row.fidelity, 1e-15);
    EXPECT_GE(row.null_sector_mass, 0.0);
  }
  EXPECT_NEAR(report.final_beta, (static_cast<double>(params.q_steps) - 1.0) * params.delta_beta, 1e-12);
}

TEST(QsaRun, StepAccounting) {
  const auto inst = ferromagnet(2);
  auto params = hand_params(6, 1.2, 0.25, 3);
  std::uint64_t expected = 0;
  for (std::size_t k = 1; k < params.q_steps; ++k) {
    expected += (std::uint64_t{1} << params.p_bits) * static_cast<std::uint64_t>(params.rounds(k));
  }
  EXPECT_EQ(qsa::qsa_run(inst, params).n_qsa, expected);
  params.mode = qsa::ZenoMode::pea;
  EXPECT_EQ(qsa::qsa_run(inst, params).n_qsa, expected);

  params.mode = qsa::ZenoMode::randomization;
  params.representation = qsa::Representation::trajectory;
  params.trajectories = 50;
  const auto traj = qsa::qsa_run(inst, params);
  EXPECT_LE(traj.n_qsa_per_run, static_cast<double>(expected));
  EXPECT_GT(traj.n_qsa, 0u);
  const auto& rows = traj.diagnostics;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].walk_steps_cumulative, rows[i - 1].walk_steps_cumulative);
  }
}

TEST(QsaRun, TrajectoriesApproachDensity) {
  const auto inst = ferromagnet(2);
  auto params = qsa::choose_params(inst, 0.25, 1.0);
  const auto density = qsa::qsa_run(inst, params);
  params.representation = qsa::Representation::trajectory;
  params.trajectories = 2000;
  const auto traj = qsa::qsa_run(inst, params);
  const Eigen::Map<const Eigen::VectorXd> a(density.final_distribution.data(), 4);
  const Eigen::Map<const Eigen::VectorXd> b(traj.final_distribution.data(), 4);
  EXPECT_LE(qsa::total_variation(a, b), 4.0 / std::sqrt(2000.0));
}

TEST(QsaRun, TrajectoryDeterministicAcrossThreads) {
  const auto inst = ferromagnet(3);
  auto params = hand_params(8, 1.0, 0.25, 3);
  params.representation = qsa::Representation::trajectory;
  params.trajectories = 64;
  setenv("QSA_THREADS", "1", 1);
  const auto a = qsa::qsa_run(inst, params);
  setenv("QSA_THREADS", "6", 1);
  const auto b = qsa::qsa_run(inst, params);
  unsetenv("QSA_THREADS");
  EXPECT_EQ(a.final_distribution, b.final_distribution);
  EXPECT_EQ(a.n_qsa, b.n_qsa);
}

TEST(QsaRun, Caps) {
  const auto inst = ferromagnet(7);  // d = 128
  auto params = hand_params(1, 1.0, 0.25, 2);
  try {
    qsa::qsa_run(inst, params);
    FAIL();
  } catch (const qsa::Error& e) {
    EXPECT_EQ(e.kind(), qsa::ErrorKind::instance_too_large);
  }
  params.representation = qsa::Representation::trajectory;
  params.trajectories = 4;
  EXPECT_NO_THROW(qsa::qsa_run(inst, params));
  params.mode = qsa::ZenoMode::pea;
  EXPECT_THROW(qsa::qsa_run(inst, params), qsa::Error);
}

TEST(QsaRun, StructuredTrajectoriesOnLargeInstance) {
  const auto inst = ferromagnet(7);
  auto params = hand_params(4, 0.6, 0.25, 2);
  params.representation = qsa::Representation::trajectory;
  params.trajectories = 32;
  const auto report = qsa::qsa_run(inst, params);
  double total = 0.0;
  for (double p : report.final_distribution) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (const auto& row : report.diagnostics) {
    EXPECT_GE(row.fidelity, 0.0);
    EXPECT_LE(row.fidelity, 1.0 + 1e-12);
  }
}

TEST(RepeatUntilSuccess, SingleRepeatMatchesSingleTrajectory) {
  const auto inst = ferromagnet(2);
  auto params = qsa::choose_params(inst, 0.5, 1.0);
  params.seed = 17;
  const auto rep = qsa::repeat_until_success(inst, params, 1);
  params.representation = qsa::Representation::trajectory;
  params.trajectories = 1;
  const auto run = qsa::qsa_run(inst, params);
  ASSERT_EQ(rep.outcomes.size(), 1u);
  EXPECT_EQ(run.final_distribution[rep.outcomes[0]], 1.0);
  EXPECT_EQ(rep.n_qsa, run.n_qsa);
}

TEST(RepeatUntilSuccess, FlatLandscapeSucceedsImmediately) {
  const auto rep = qsa::repeat_until_success(flat_instance(4), hand_params(3, 1.0, 0.5, 2), 5);
  EXPECT_TRUE(rep.succeeded);
  EXPECT_EQ(rep.repeats_used, 1u);
  EXPECT_EQ(rep.failure_model, 0.5);
}

TEST(RepeatUntilSuccess, Preconditions) {
  const auto inst = ferromagnet(2);
  EXPECT_THROW(qsa::repeat_until_success(inst, qsa::choose_params(inst, 0.25), 3), qsa::Error);
  EXPECT_THROW(qsa::repeat_until_success(inst, qsa::choose_params(inst, 0.5), 0), qsa::Error);
}

TEST(Complexity, FormulaExamples) {
  EXPECT_NEAR(qsa::predicted_n_sa(4, 0.5, 2.0, 0.5), 4.0 * std::log(16.0), 1e-12);
  const double l = std::log(8.0);
  EXPECT_NEAR(qsa::predicted_n_qsa(4, 0.5, 2.0, 0.25), 16.0 * l * l * std::log(4.0), 1e-12);
}

TEST(Complexity, RecordIsConsistent) {
  const auto inst = ferromagnet(2);
  qsa::CompareOptions options;
  options.max_sa_steps = 1 << 12;
  options.max_q_steps = 64;
  const auto rec = qsa::compare_complexity(inst, 0.25, options);
  EXPECT_EQ(rec.d, 4u);
  EXPECT_NEAR(rec.phi1, std::acos(1.0 - rec.delta_qsa), 1e-15);
  EXPECT_EQ(rec.p_bits, qsa::pea_bits_for_gap(rec.delta_qsa));
  EXPECT_EQ(rec.exhaustive_fallback, rec.q_formula > rec.d);
  ASSERT_TRUE(rec.sa_reached);
  EXPECT_GE(rec.measured_sa_success, 0.75);
  ASSERT_TRUE(rec.qsa_reached);
  EXPECT_GE(rec.measured_qsa_success, 0.75);
  EXPECT_LE(rec.measured_q, rec.q_formula);
}

}  // namespace
