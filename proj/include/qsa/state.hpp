#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "qsa/error.hpp"
#include "qsa/walk.hpp"

namespace qsa {

enum class Representation { density, trajectory };

inline const char* to_string(Representation r) {
  return r == Representation::density ? "density" : "trajectory";
}

/// Walk-space state: a density operator (exact mode) or a normalized pure
/// vector (one sampled trajectory).
class QuantumState {
 public:
  static QuantumState pure(Eigen::VectorXcd psi) { return QuantumState(std::move(psi)); }
  static QuantumState pure(const Eigen::VectorXd& psi) { return pure(Eigen::VectorXcd(psi.cast<cplx>())); }

  static QuantumState density(Eigen::MatrixXcd rho) { return QuantumState(std::move(rho)); }
  static QuantumState density(const Eigen::VectorXd& psi) {
    const Eigen::VectorXcd v = psi.cast<cplx>();
    return QuantumState(Eigen::MatrixXcd(v * v.adjoint()));
  }

  Representation representation() const {
    return std::holds_alternative<Eigen::MatrixXcd>(data_) ? Representation::density
                                                           : Representation::trajectory;
  }
  bool is_density() const { return representation() == Representation::density; }

  Eigen::Index dim() const {
    return is_density() ? std::get<Eigen::MatrixXcd>(data_).rows()
                        : std::get<Eigen::VectorXcd>(data_).size();
  }

  const Eigen::MatrixXcd& rho() const {
    require(is_density(), ErrorKind::precondition, "state is not a density operator");
    return std::get<Eigen::MatrixXcd>(data_);
  }
  Eigen::MatrixXcd& rho() {
    require(is_density(), ErrorKind::precondition, "state is not a density operator");
    return std::get<Eigen::MatrixXcd>(data_);
  }
  const Eigen::VectorXcd& vector() const {
    require(!is_density(), ErrorKind::precondition, "state is not a pure vector");
    return std::get<Eigen::VectorXcd>(data_);
  }
  Eigen::VectorXcd& vector() {
    require(!is_density(), ErrorKind::precondition, "state is not a pure vector");
    return std::get<Eigen::VectorXcd>(data_);
  }

  /// Trace of rho, or squared norm of the vector.
  double weight() const {
    return is_density() ? rho().trace().real() : vector().squaredNorm();
  }

  /// <target| rho |target> or |<target|psi>|^2.
  double fidelity(const Eigen::VectorXd& target) const {
    const Eigen::VectorXcd t = target.cast<cplx>();
    if (is_density()) return (t.adjoint() * rho() * t)(0, 0).real();
    return std::norm(t.dot(vector()));
  }

  /// Probabilities of measuring the first register in the configuration basis.
  Eigen::VectorXd first_register_distribution(std::size_t d) const {
    require(static_cast<std::size_t>(dim()) == d * d, ErrorKind::dimension_mismatch,
            "state dimension is not d^2");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        const auto i = static_cast<Eigen::Index>(pair_index(a, b, d));
        p[static_cast<Eigen::Index>(a)] +=
            is_density() ? rho()(i, i).real() : std::norm(vector()[i]);
      }
    }
    return p;
  }

  /// Largest violation of the state invariants: unit trace or norm,
  /// Hermiticity, and positivity for density operators.
  struct Residuals {
    double weight = 0.0;
    double hermiticity = 0.0;
    double min_eigenvalue = 0.0;
  };

  Residuals residuals() const {
    Residuals r;
    r.weight = std::abs(weight() - 1.0);
    if (is_density()) {
      r.hermiticity = (rho() - rho().adjoint()).cwiseAbs().maxCoeff();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
          0.5 * (rho() + rho().adjoint()), Eigen::EigenvaluesOnly);
      r.min_eigenvalue = solver.eigenvalues().minCoeff();
    }
    return r;
  }

  bool valid(double tolerance = 1e-10) const {
    const Residuals r = residuals();
    return r.weight <= tolerance && r.hermiticity <= 1e-12 && r.min_eigenvalue >= -tolerance;
  }

 private:
  explicit QuantumState(Eigen::VectorXcd psi) : data_(std::move(psi)) {}
  explicit QuantumState(Eigen::MatrixXcd rho) : data_(std::move(rho)) {}

  std::variant<Eigen::MatrixXcd, Eigen::VectorXcd> data_;
};

/// (1/2) sum |eigenvalues of (a - b)| for Hermitian a, b.
inline double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const Eigen::MatrixXcd diff = a - b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (diff + diff.adjoint()),
                                                         Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace qsa
