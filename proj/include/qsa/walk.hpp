#pragma once

// Bipartite quantum walk W = R2 R1 built from a reversible chain, in the
// similarity-transformed form whose P1 support span{|sigma>|o>} does not
// depend on beta. Walk-space index of |a>|b> is a * d + b, and |o> is the
// basis state 0 of the second register.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsa/error.hpp"
#include "qsa/markov.hpp"

namespace qsa {

/// Largest configuration count for which the dense d^2 x d^2 walk is built.
inline constexpr std::size_t kMaxDenseWalkConfigurations = 64;
/// Largest configuration count for the structured (matrix-free) walk.
inline constexpr std::size_t kMaxStructuredWalkConfigurations = 256;

inline constexpr double kIsometryTolerance = 1e-12;
inline constexpr double kPhaseTolerance = 1e-8;

using cplx = std::complex<double>;

inline std::size_t pair_index(std::size_t a, std::size_t b, std::size_t d) { return a * d + b; }

/// Counts walk steps: one per application of W, r per application of W^r.
struct WalkStepCounter {
  std::uint64_t steps = 0;
  void charge(std::uint64_t r) { steps += r; }
};

struct Isometries {
  Eigen::MatrixXd x;  // X|s> = |s> sum_t sqrt(m_st) |t>
  Eigen::MatrixXd y;  // Y|t> = sum_s sqrt(m_ts) |s>|t>
};

inline Isometries build_isometries(const TransitionMatrix& chain) {
  const std::size_t d = chain.size();
  const auto n = static_cast<Eigen::Index>(d * d);
  Isometries iso{Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d)),
                 Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d))};
  for (std::size_t s = 0; s < d; ++s) {
    for (std::size_t t = 0; t < d; ++t) {
      const auto row = static_cast<Eigen::Index>(pair_index(s, t, d));
      iso.x(row, static_cast<Eigen::Index>(s)) = std::sqrt(std::max(0.0, chain.m()(s, t)));
      iso.y(row, static_cast<Eigen::Index>(t)) = std::sqrt(std::max(0.0, chain.m()(t, s)));
    }
  }
  const Eigen::MatrixXd overlap = iso.x.transpose() * iso.y;
  const double asym = (overlap - overlap.transpose()).cwiseAbs().maxCoeff();
  require(asym <= kSymmetryTolerance, ErrorKind::detailed_balance_violation,
          "X^T Y is asymmetric by " + std::to_string(asym));
  return iso;
}

enum class CompletionOrder { forward, reverse };

namespace detail {

// Gram-Schmidt with one reorthogonalization pass; returns false when the
// candidate lies in the span of `basis`.
inline bool orthonormalize_against(const Eigen::MatrixXd& basis, Eigen::Index used,
                                   Eigen::VectorXd& v) {
  for (int pass = 0; pass < 2; ++pass) {
    if (used == 0) break;
    const auto q = basis.leftCols(used);
    v -= q * (q.transpose() * v);
  }
  const double norm = v.norm();
  if (norm < 1e-8) return false;
  v /= norm;
  return true;
}

// Completion of d orthonormal columns of length d (a single block).
inline Eigen::MatrixXd complete_block(const Eigen::VectorXd& first, CompletionOrder order) {
  const Eigen::Index d = first.size();
  Eigen::MatrixXd basis(d, d);
  basis.col(0) = first;
  Eigen::Index used = 1;
  for (Eigen::Index c = 0; c < d && used < d; ++c) {
    const Eigen::Index i = order == CompletionOrder::forward ? c : d - 1 - c;
    Eigen::VectorXd v = Eigen::VectorXd::Unit(d, i);
    if (orthonormalize_against(basis, used, v)) basis.col(used++) = v;
  }
  require(used == d, ErrorKind::precondition, "block completion failed");
  // Columns were produced in candidate order; free slots 1..d-1 are filled
  // in the same direction.
  if (order == CompletionOrder::reverse && d > 2) {
    basis.rightCols(d - 1).rowwise().reverseInPlace();
  }
  return basis;
}

}  // namespace detail

/// Orthogonal U_X with U_X|s>|o> = X|s>: column s*d is X's column s, and the
/// remaining columns orthonormalize the standard basis against range(X) in
/// index order (reverse order for CompletionOrder::reverse), filling free
/// column slots in the same direction.
inline Eigen::MatrixXd complete_unitary(const Eigen::MatrixXd& x,
                                        CompletionOrder order = CompletionOrder::forward) {
  const Eigen::Index d = x.cols();
  const Eigen::Index n = x.rows();
  require(n == d * d, ErrorKind::dimension_mismatch, "isometry must be d^2 x d");
  const double defect =
      (x.transpose() * x - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  require(defect <= 1e-10, ErrorKind::precondition,
          "complete_unitary input is not an isometry (defect " + std::to_string(defect) + ")");

  bool blocked = true;
  for (Eigen::Index s = 0; s < d && blocked; ++s) {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r / d != s && x(r, s) != 0.0) {
        blocked = false;
        break;
      }
    }
  }

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
  if (blocked) {
    // Standard basis vectors of block a overlap only with column a of X and
    // with completions already produced from block a, so the global
    // Gram-Schmidt factors into independent d x d completions.
    for (Eigen::Index a = 0; a < d; ++a) {
      u.block(a * d, a * d, d, d) = detail::complete_block(x.block(a * d, a, d, 1), order);
    }
    return u;
  }

  Eigen::MatrixXd basis(n, n);
  basis.leftCols(d) = x;
  Eigen::Index used = d;
  for (Eigen::Index c = 0; c < n && used < n; ++c) {
    const Eigen::Index i = order == CompletionOrder::forward ? c : n - 1 - c;
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, i);
    if (detail::orthonormalize_against(basis, used, v)) basis.col(used++) = v;
  }
  require(used == n, ErrorKind::precondition, "unitary completion failed");
  std::vector<Eigen::Index> free_slots;
  for (Eigen::Index slot = 0; slot < n; ++slot) {
    if (slot % d != 0) free_slots.push_back(slot);
  }
  if (order == CompletionOrder::reverse) std::reverse(free_slots.begin(), free_slots.end());
  for (Eigen::Index s = 0; s < d; ++s) u.col(s * d) = x.col(s);
  for (std::size_t k = 0; k < free_slots.size(); ++k) {
    u.col(free_slots[k]) = basis.col(d + static_cast<Eigen::Index>(k));
  }
  return u;
}

/// |phi_0>|o> with amplitudes sqrt(pi_sigma) on the first register.
inline Eigen::VectorXd stationary_state(const TransitionMatrix& chain) {
  const std::size_t d = chain.size();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t s = 0; s < d; ++s) {
    psi[static_cast<Eigen::Index>(pair_index(s, 0, d))] = std::sqrt(chain.pi()[s]);
  }
  return psi;
}

/// Eigen-decomposition of a real orthogonal matrix from its real Schur form.
/// Each 2x2 rotation block contributes a conjugate pair e^{+-i theta}; phases
/// lie in (-pi, pi].
struct OrthogonalSpectrum {
  Eigen::VectorXd phases;
  Eigen::MatrixXcd vectors;  // unitary, column j has eigenvalue e^{i phases[j]}
  double eigen_residual = 0.0;
  double unitarity_residual = 0.0;
};

inline OrthogonalSpectrum orthogonal_eigensystem(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  Eigen::RealSchur<Eigen::MatrixXd> schur(w);
  require(schur.info() == Eigen::Success, ErrorKind::precondition,
          "real Schur decomposition did not converge");
  const Eigen::MatrixXd& t = schur.matrixT();
  const Eigen::MatrixXd& z = schur.matrixU();

  OrthogonalSpectrum out;
  out.phases.resize(n);
  out.vectors.resize(n, n);
  Eigen::Index i = 0;
  while (i < n) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), e = t(i + 1, i + 1);
      const double half = 0.5 * (a - e);
      const double omega = std::sqrt(std::max(0.0, -(half * half + b * c)));
      const cplx mu(0.5 * (a + e), omega);
      // (b, mu - a) solves the first row of (T_block - mu) v = 0.
      Eigen::Vector2cd v(cplx(b, 0.0), mu - a);
      v.normalize();
      const Eigen::VectorXcd col = z.col(i).cast<cplx>() * v[0] + z.col(i + 1).cast<cplx>() * v[1];
      out.vectors.col(i) = col;
      out.vectors.col(i + 1) = col.conjugate();
      out.phases[i] = std::arg(mu);
      out.phases[i + 1] = -std::arg(mu);
      i += 2;
    } else {
      out.vectors.col(i) = z.col(i).cast<cplx>();
      out.phases[i] = t(i, i) < 0.0 ? std::numbers::pi : 0.0;
      i += 1;
    }
  }
  const Eigen::VectorXcd eig = out.phases.unaryExpr([](double th) { return std::polar(1.0, th); });
  out.eigen_residual =
      (w.cast<cplx>() * out.vectors - out.vectors * eig.asDiagonal()).cwiseAbs().maxCoeff();
  out.unitarity_residual =
      (out.vectors.adjoint() * out.vectors - Eigen::MatrixXcd::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();
  return out;
}

/// Distance between two angles on the circle.
inline double circular_distance(double a, double b) {
  const double diff = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::abs(diff);
}

struct PhaseMatch {
  bool contained = true;
  double max_residual = 0.0;
  std::vector<std::size_t> assignment;  // index into the available phases
};

/// Greedy multiset containment on the circle: each required phase claims
/// the nearest unclaimed available phase.
inline PhaseMatch match_phases(const std::vector<double>& required,
                               const Eigen::VectorXd& available,
                               double tolerance = kPhaseTolerance) {
  PhaseMatch match;
  std::vector<bool> used(static_cast<std::size_t>(available.size()), false);
  for (double target : required) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (Eigen::Index j = 0; j < available.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double dist = circular_distance(target, available[j]);
      if (dist < best) {
        best = dist;
        best_index = static_cast<std::size_t>(j);
      }
    }
    if (!std::isfinite(best)) {
      match.contained = false;
      match.max_residual = best;
      match.assignment.push_back(0);
      continue;
    }
    used[best_index] = true;
    match.assignment.push_back(best_index);
    match.max_residual = std::max(match.max_residual, best);
    if (best > tolerance) match.contained = false;
  }
  return match;
}

class WalkOperator {
 public:
  double beta = 0.0;
  std::size_t d = 0;
  std::size_t dim = 0;
  Eigen::MatrixXd w;
  Eigen::MatrixXd u_x;
  Eigen::MatrixXd p1;
  Eigen::MatrixXd p2;
  Eigen::MatrixXd reflected_y;  // U_X^T Y, orthonormal basis of range(P2)
  Eigen::VectorXd lambda;       // chain eigenvalues, descending
  Eigen::VectorXd phi;          // arccos(lambda)
  Eigen::VectorXd psi0;
  double phase_gap = 0.0;
  OrthogonalSpectrum spectrum;
  std::size_t null_sector_dimension = 0;

  const Eigen::VectorXd& eigenphases() const { return spectrum.phases; }

  /// Phases +2 phi_j and -2 phi_j for every j >= 1 with phi_j > 0.
  std::vector<double> predicted_phases() const {
    std::vector<double> out;
    for (Eigen::Index j = 1; j < phi.size(); ++j) {
      if (phi[j] <= 0.0) continue;
      out.push_back(std::remainder(2.0 * phi[j], 2.0 * std::numbers::pi));
      out.push_back(std::remainder(-2.0 * phi[j], 2.0 * std::numbers::pi));
    }
    return out;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v, WalkStepCounter* counter = nullptr) const {
    if (counter) counter->charge(1);
    return w * v;
  }
};

inline double clamped_acos(double x) { return std::acos(std::clamp(x, -1.0, 1.0)); }

inline WalkOperator build_walk(const TransitionMatrix& chain,
                               CompletionOrder order = CompletionOrder::forward) {
  const std::size_t d = chain.size();
  require(d <= kMaxDenseWalkConfigurations, ErrorKind::instance_too_large,
          "dense walk needs d <= " + std::to_string(kMaxDenseWalkConfigurations) + ", got " +
              std::to_string(d));
  const auto n = static_cast<Eigen::Index>(d * d);
  const Isometries iso = build_isometries(chain);

  WalkOperator walk;
  walk.beta = chain.beta();
  walk.d = d;
  walk.dim = d * d;
  walk.u_x = complete_unitary(iso.x, order);
  walk.reflected_y = walk.u_x.transpose() * iso.y;
  walk.p2 = walk.reflected_y * walk.reflected_y.transpose();
  walk.p1 = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r1_diag = Eigen::VectorXd::Constant(n, -1.0);
  for (std::size_t s = 0; s < d; ++s) {
    const auto i = static_cast<Eigen::Index>(pair_index(s, 0, d));
    walk.p1(i, i) = 1.0;
    r1_diag[i] = 1.0;
  }
  // (2 P2 - I)(2 P1 - I); the second factor is diagonal.
  walk.w = (2.0 * walk.p2 - Eigen::MatrixXd::Identity(n, n)) * r1_diag.asDiagonal();

  walk.lambda = chain.lambda();
  walk.phi = walk.lambda.unaryExpr([](double l) { return clamped_acos(l); });
  walk.phi[0] = 0.0;
  walk.phase_gap = d > 1 ? walk.phi[1] : std::numbers::pi / 2.0;
  walk.psi0 = stationary_state(chain);
  walk.spectrum = orthogonal_eigensystem(walk.w);

  std::size_t zero_phases = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(walk.spectrum.phases[j]) <= kPhaseTolerance) ++zero_phases;
  }
  std::size_t stationary = 0;
  for (Eigen::Index j = 0; j < walk.phi.size(); ++j) {
    if (walk.phi[j] <= kPhaseTolerance) ++stationary;
  }
  walk.null_sector_dimension = zero_phases >= stationary ? zero_phases - stationary : 0;
  return walk;
}

inline double phase_gap(const WalkOperator& walk) { return walk.phase_gap; }

/// Matrix-free W for one chain: applies R1, then 2 B B^T - I with
/// B = U_X^T Y, using the block structure of U_X. Cost O(d^3) per step.
class StructuredWalk {
 public:
  explicit StructuredWalk(const TransitionMatrix& chain,
                          CompletionOrder order = CompletionOrder::forward)
      : d_(chain.size()), beta_(chain.beta()) {
    require(d_ <= kMaxStructuredWalkConfigurations, ErrorKind::instance_too_large,
            "structured walk needs d <= " + std::to_string(kMaxStructuredWalkConfigurations));
    const auto d = static_cast<Eigen::Index>(d_);
    root_m_ = chain.m().cwiseMax(0.0).cwiseSqrt();
    blocks_.reserve(d_);
    for (Eigen::Index a = 0; a < d; ++a) {
      blocks_.push_back(detail::complete_block(root_m_.row(a).transpose(), order));
    }
    psi0_ = stationary_state(chain);
  }

  std::size_t configurations() const { return d_; }
  std::size_t dim() const { return d_ * d_; }
  double beta() const { return beta_; }
  const Eigen::VectorXd& psi0() const { return psi0_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v, WalkStepCounter* counter = nullptr) const {
    if (counter) counter->charge(1);
    const auto d = static_cast<Eigen::Index>(d_);
    // Row a of `grid` holds the second-register amplitudes of |a>.
    Eigen::MatrixXd grid = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                          Eigen::RowMajor>>(v.data(), d, d);
    grid *= -1.0;
    grid.col(0) *= -1.0;  // R1
    const Eigen::MatrixXd reflected = grid;

    // z = U_X (R1 v); c = Y^T z, c_t = sum_s sqrt(m_ts) z(s, t).
    Eigen::MatrixXd z(d, d);
    for (Eigen::Index a = 0; a < d; ++a) z.row(a) = (blocks_[a] * grid.row(a).transpose()).transpose();
    const Eigen::VectorXd c = (root_m_.transpose().cwiseProduct(z)).colwise().sum().transpose();

    // Y c as a grid: (s, t) -> sqrt(m_ts) c_t, then U_X^T blockwise.
    const Eigen::MatrixXd yc = root_m_.transpose() * c.asDiagonal();
    Eigen::MatrixXd out(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
      out.row(a) = (blocks_[a].transpose() * yc.row(a).transpose()).transpose();
    }
    out = 2.0 * out - reflected;
    Eigen::VectorXd result(v.size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        result.data(), d, d) = out;
    return result;
  }

  Eigen::VectorXd apply_power(Eigen::VectorXd v, std::uint64_t r,
                              WalkStepCounter* counter = nullptr) const {
    for (std::uint64_t i = 0; i < r; ++i) v = apply(v, counter);
    return v;
  }

 private:
  std::size_t d_;
  double beta_;
  Eigen::MatrixXd root_m_;
  std::vector<Eigen::MatrixXd> blocks_;
  Eigen::VectorXd psi0_;
};

}  // namespace qsa
