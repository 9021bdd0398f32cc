#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace conforma {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Lower Cholesky factor L of a symmetric positive-definite matrix A = L Lᵀ.
/// Immutable once built, so a factor can be shared read-only across threads.
class CholFactor {
 public:
  Eigen::Index order() const { return llt_.rows(); }
  Matrix lower() const { return llt_.matrixL(); }
  /// Storage holding L in its lower triangle; the upper triangle is unspecified.
  const Matrix& packed() const { return llt_.matrixLLT(); }

  /// x with A x = rhs.
  Vector solve(const Vector& rhs) const;
  /// L⁻¹ rhs. ‖L⁻¹k‖² is the quadratic form kᵀA⁻¹k without forming A⁻¹.
  Vector solve_lower(const Vector& rhs) const;

 private:
  friend CholFactor cholesky_factorize(const Matrix& a);
  explicit CholFactor(Eigen::LLT<Matrix> llt) : llt_(std::move(llt)) {}

  Eigen::LLT<Matrix> llt_;
};

/// Throws kNotPositiveDefinite when a pivot is not strictly positive, and
/// kInvalidArgument for asymmetric or non-finite input.
CholFactor cholesky_factorize(const Matrix& a);

Vector solve_spd(const CholFactor& factor, const Vector& rhs);

/// log |A| = 2 Σ log Lᵢᵢ.
double log_det(const CholFactor& factor);

/// diag(A⁻¹), from the squared column norms of L⁻¹.
Vector spd_inverse_diagonal(const CholFactor& factor);

}  // namespace conforma
