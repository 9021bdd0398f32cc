#include "conforma/kernel.hpp"

#include <cmath>
#include <string>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

double squared_distance(Point x, Point x2) {
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double delta = x[k] - x2[k];
    sum += delta * delta;
  }
  return sum;
}

}  // namespace

void KernelParams::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "kernel precision theta must be positive and finite");
  }
}

void Dataset::validate() const {
  if (inputs.rows() != targets.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dataset has " + std::to_string(inputs.rows()) + " inputs but " +
                    std::to_string(targets.size()) + " targets");
  }
  if (inputs.rows() > 0 && inputs.cols() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset inputs must have dimension >= 1");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset contains non-finite values");
  }
}

double eval_kernel(const KernelParams& params, Point x, Point x2) {
  if (x.size() != x2.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "kernel: point dimensions differ");
  }
  return std::exp(-params.theta * squared_distance(x, x2));
}

Matrix gram(const KernelParams& params, const PointMatrix& points) {
  const Eigen::Index n = points.rows();
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "gram: empty point set");
  }
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-params.theta * squared_distance(row_of(points, i), row_of(points, j)));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix cross_gram(const KernelParams& params, const PointMatrix& points, const PointMatrix& others) {
  if (points.cols() != others.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "cross_gram: point dimensions differ");
  }
  Matrix k(points.rows(), others.rows());
  for (Eigen::Index j = 0; j < others.rows(); ++j) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      k(i, j) = std::exp(-params.theta * squared_distance(row_of(points, i), row_of(others, j)));
    }
  }
  return k;
}

Vector kernel_column(const KernelParams& params, const PointMatrix& points, Point x) {
  if (static_cast<Eigen::Index>(x.size()) != points.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "kernel_column: point dimension " +
                                                   std::to_string(x.size()) + " != " +
                                                   std::to_string(points.cols()));
  }
  Vector k(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    k(i) = std::exp(-params.theta * squared_distance(row_of(points, i), x));
  }
  return k;
}

}  // namespace conforma
