#pragma once

#include "conforma/kernel.hpp"
#include "conforma/linalg.hpp"

namespace conforma {

/// Kernel ridge regression fitted in the dual: R = λI + K, β = R⁻¹y.
/// Also caches diag(R⁻¹), which both residual families and the conformal
/// lines need.
class FittedKRR {
 public:
  const Dataset& data() const { return data_; }
  double lambda() const { return lambda_; }
  const KernelParams& params() const { return params_; }
  const CholFactor& factor() const { return factor_; }
  const Vector& beta() const { return beta_; }
  const Vector& q_diag() const { return q_diag_; }

 private:
  friend FittedKRR krr_fit(Dataset data, double lambda, const KernelParams& params);
  FittedKRR(Dataset data, double lambda, KernelParams params, CholFactor factor, Vector beta,
            Vector q_diag)
      : data_(std::move(data)),
        lambda_(lambda),
        params_(params),
        factor_(std::move(factor)),
        beta_(std::move(beta)),
        q_diag_(std::move(q_diag)) {}

  Dataset data_;
  double lambda_;
  KernelParams params_;
  CholFactor factor_;
  Vector beta_;
  Vector q_diag_;
};

FittedKRR krr_fit(Dataset data, double lambda, const KernelParams& params);

Vector krr_predict(const FittedKRR& model, const PointMatrix& points);
double krr_predict(const FittedKRR& model, Point x);

/// yᵢ - ŷ(xᵢ) for the fit on the full sample. Returned as λβ, which equals
/// y - Kβ exactly in exact arithmetic and avoids the cancellation.
Vector residuals_in_sample(const FittedKRR& model);

/// yᵢ - ŷ₋ᵢ(xᵢ) with observation i knocked out, via r_in,i = λ mᵢ⁻¹ r_loo,i.
/// With n = 1 the knocked-out sample is empty and predicts the prior mean 0.
Vector residuals_loo(const FittedKRR& model);

/// mᵢ = 1 / (R⁻¹)ᵢᵢ = λ + K(xᵢ,xᵢ) - k₋ᵢ'Q₋ᵢk₋ᵢ.
Vector leverage(const FittedKRR& model);

}  // namespace conforma
