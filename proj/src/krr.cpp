#include "conforma/krr.hpp"

#include <cmath>

#include "conforma/errors.hpp"

namespace conforma {

FittedKRR krr_fit(Dataset data, double lambda, const KernelParams& params) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidArgument, "krr_fit: lambda must be positive and finite");
  }
  params.validate();
  data.validate();
  if (data.size() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "krr_fit: empty training sample");
  }
  Matrix regularized = gram(params, data.inputs);
  regularized.diagonal().array() += lambda;
  CholFactor factor = cholesky_factorize(regularized);
  Vector beta = factor.solve(data.targets);
  Vector q_diag = spd_inverse_diagonal(factor);
  return FittedKRR(std::move(data), lambda, params, std::move(factor), std::move(beta),
                   std::move(q_diag));
}

Vector krr_predict(const FittedKRR& model, const PointMatrix& points) {
  if (points.rows() == 0) return Vector();
  return cross_gram(model.params(), model.data().inputs, points).transpose() * model.beta();
}

double krr_predict(const FittedKRR& model, Point x) {
  return kernel_column(model.params(), model.data().inputs, x).dot(model.beta());
}

Vector residuals_in_sample(const FittedKRR& model) { return model.lambda() * model.beta(); }

Vector residuals_loo(const FittedKRR& model) {
  // r_in / (λ qᵢᵢ) = λβᵢ / (λ qᵢᵢ).
  return model.beta().cwiseQuotient(model.q_diag());
}

Vector leverage(const FittedKRR& model) { return model.q_diag().cwiseInverse(); }

}  // namespace conforma
