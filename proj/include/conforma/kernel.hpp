#pragma once

#include <span>

#include "conforma/linalg.hpp"

namespace conforma {

/// Points stored one per row, so each point is a contiguous span.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Point = std::span<const double>;

inline Point row_of(const PointMatrix& points, Eigen::Index i) {
  return {points.row(i).data(), static_cast<std::size_t>(points.cols())};
}

enum class KernelKind { kGaussianIsotropic };

/// K(x, x') = exp(-theta ‖x - x'‖²); theta is a precision (1 / length²).
struct KernelParams {
  KernelKind kind = KernelKind::kGaussianIsotropic;
  double theta = 1.0;

  void validate() const;
};

/// Noisy sample (xᵢ, yᵢ). Inputs share one dimension d ≥ 1.
struct Dataset {
  PointMatrix inputs;
  Vector targets;

  Eigen::Index size() const { return targets.size(); }
  Eigen::Index dim() const { return inputs.cols(); }

  void validate() const;
};

double eval_kernel(const KernelParams& params, Point x, Point x2);

/// Gram matrix over the rows of `points`: symmetric with unit diagonal.
Matrix gram(const KernelParams& params, const PointMatrix& points);

/// |points| × |others| matrix of kernel values.
Matrix cross_gram(const KernelParams& params, const PointMatrix& points, const PointMatrix& others);

/// Column of kernel values between every row of `points` and one point.
Vector kernel_column(const KernelParams& params, const PointMatrix& points, Point x);

}  // namespace conforma
