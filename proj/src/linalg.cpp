#include "conforma/linalg.hpp"

#include <cmath>
#include <string>

#include "conforma/errors.hpp"

namespace conforma {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kInvalidAlpha: return "InvalidAlpha";
    case ErrorCode::kInvalidProbability: return "InvalidProbability";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kAllPointsFailed: return "AllPointsFailed";
    case ErrorCode::kUnknownFunction: return "UnknownFunction";
    case ErrorCode::kMissingLevel: return "MissingLevel";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kTooManySkipped: return "TooManySkipped";
  }
  return "Unknown";
}

CholFactor cholesky_factorize(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "cholesky: matrix must be square and non-empty");
  }
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      if (!std::isfinite(a(i, j))) {
        throw Error(ErrorCode::kInvalidArgument, "cholesky: non-finite entry");
      }
      if (a(i, j) != a(j, i)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cholesky: matrix not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
      }
    }
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "cholesky: matrix is not positive definite");
  }
  // Eigen accepts tiny positive pivots that underflow the square root to 0.
  const auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) {
      throw Error(ErrorCode::kNotPositiveDefinite,
                  "cholesky: non-positive pivot at " + std::to_string(i));
    }
  }
  return CholFactor(std::move(llt));
}

Vector CholFactor::solve(const Vector& rhs) const {
  if (rhs.size() != order()) {
    throw Error(ErrorCode::kDimensionMismatch, "solve: rhs length " + std::to_string(rhs.size()) +
                                                   " != order " + std::to_string(order()));
  }
  return llt_.solve(rhs);
}

Vector CholFactor::solve_lower(const Vector& rhs) const {
  if (rhs.size() != order()) {
    throw Error(ErrorCode::kDimensionMismatch, "solve_lower: rhs length mismatch");
  }
  return llt_.matrixL().solve(rhs);
}

Vector solve_spd(const CholFactor& factor, const Vector& rhs) { return factor.solve(rhs); }

double log_det(const CholFactor& factor) {
  return 2.0 * factor.packed().diagonal().array().log().sum();
}

Vector spd_inverse_diagonal(const CholFactor& factor) {
  const Eigen::Index n = factor.order();
  const Matrix lower_inv =
      factor.packed().triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  // A⁻¹ = L⁻ᵀ L⁻¹, so (A⁻¹)ᵢᵢ is the squared norm of column i of L⁻¹.
  return lower_inv.colwise().squaredNorm().transpose();
}

}  // namespace conforma
