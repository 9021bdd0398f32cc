#include "conforma/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha, "alpha must lie in (0, 1)");
  }
}

// Acklam's rational approximation for the lower half, g in (0, 0.5].
double acklam_lower(double g) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLowBreak = 0.02425;
  if (g < kLowBreak) {
    const double q = std::sqrt(-2.0 * std::log(g));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = g - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_quantile(double g) {
  if (!(g > 0.0 && g < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, "normal quantile: probability must lie in (0, 1)");
  }
  if (g == 0.5) return 0.0;
  const bool upper = g > 0.5;
  const double p = upper ? 1.0 - g : g;
  double x = acklam_lower(p);
  // One Halley step on Φ(x) - p; erfc keeps the lower tail accurate.
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double err = cdf - p;
  const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return upper ? -x : x;
}

GPRPrediction gpr_posterior(const FittedKRR& model, Point x, double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gpr: sigma2 must be positive");
  }
  const Vector k = kernel_column(model.params(), model.data().inputs, x);
  const double prior = eval_kernel(model.params(), x, x);
  const double explained = model.factor().solve_lower(k).squaredNorm();
  // Variance reduction lies in [0, K(x,x)]; clamp roundoff outside it.
  const double sigma_k2 =
      model.lambda() + std::clamp(prior - explained, 0.0, prior);
  GPRPrediction out;
  out.mean = k.dot(model.beta());
  out.variance = sigma2 * sigma_k2;
  out.lo = out.mean;
  out.hi = out.mean;
  return out;
}

GPRPrediction gpr_interval(const FittedKRR& model, Point x, double sigma2, double alpha) {
  check_alpha(alpha);
  GPRPrediction out = gpr_posterior(model, x, sigma2);
  const double half = std_normal_quantile(1.0 - alpha / 2.0) * std::sqrt(out.variance);
  out.lo = out.mean - half;
  out.hi = out.mean + half;
  return out;
}

double log_marginal_likelihood(const Dataset& data, double lambda, const KernelParams& params,
                               double sigma2) {
  if (!(lambda > 0.0) || !(sigma2 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "likelihood: lambda and sigma2 must be positive");
  }
  params.validate();
  data.validate();
  const double n = static_cast<double>(data.size());
  Matrix regularized = gram(params, data.inputs);
  regularized.diagonal().array() += lambda;
  const CholFactor factor = cholesky_factorize(regularized);
  const double quad = data.targets.dot(factor.solve(data.targets));
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(sigma2) -
         0.5 * log_det(factor) - quad / (2.0 * sigma2);
}

double profile_sigma2(const FittedKRR& model) {
  const double quad = model.data().targets.dot(model.beta());
  const double s2 = quad / static_cast<double>(model.data().size());
  return s2 > kSigma2Floor ? s2 : kSigma2Floor;
}

double profile_sigma2(const Dataset& data, double lambda, const KernelParams& params) {
  return profile_sigma2(krr_fit(data, lambda, params));
}

MLEResult mle_theta(const Dataset& data, double lambda, std::span<const double> grid) {
  if (grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mle_theta: empty grid");
  }
  const double n = static_cast<double>(data.size());
  bool found = false;
  MLEResult best;
  for (const double theta : grid) {
    if (!(theta > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "mle_theta: grid values must be positive");
    }
    MLEResult candidate;
    try {
      const FittedKRR fit = krr_fit(data, lambda, KernelParams{KernelKind::kGaussianIsotropic, theta});
      const double s2 = profile_sigma2(fit);
      candidate.theta_hat = theta;
      candidate.sigma2_hat = s2;
      candidate.log_likelihood = -0.5 * n * std::log(2.0 * std::numbers::pi) -
                                 0.5 * n * std::log(s2) - 0.5 * log_det(fit.factor()) -
                                 data.targets.dot(fit.beta()) / (2.0 * s2);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotPositiveDefinite) continue;
      throw;
    }
    const bool better = !found || candidate.log_likelihood > best.log_likelihood ||
                        (candidate.log_likelihood == best.log_likelihood &&
                         candidate.theta_hat < best.theta_hat);
    if (better) {
      best = candidate;
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCode::kAllPointsFailed, "mle_theta: no grid point could be fitted");
  }
  return best;
}

std::vector<double> default_theta_grid() {
  std::vector<double> grid(25);
  for (int i = 0; i < 25; ++i) {
    grid[i] = std::pow(10.0, 4.0 * i / 24.0);
  }
  return grid;
}

}  // namespace conforma
