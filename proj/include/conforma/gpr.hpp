#pragma once

#include <span>
#include <vector>

#include "conforma/krr.hpp"

namespace conforma {

/// Predictive law N(mean, variance) of an unseen target, where
/// variance = σ² σ_K²(x*) and σ_K² = λ + K(x*,x*) - K_X(x*)'Q_X K_X(x*).
struct GPRPrediction {
  double mean = 0.0;
  double variance = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct MLEResult {
  double theta_hat = 0.0;
  double sigma2_hat = 0.0;
  double log_likelihood = 0.0;
};

/// Floor returned by profile_sigma2 when y'R⁻¹y vanishes (all-zero targets).
inline constexpr double kSigma2Floor = 1e-12;

/// Interval fields are left equal to the mean.
GPRPrediction gpr_posterior(const FittedKRR& model, Point x, double sigma2);

/// mean ± z_{1-α/2} sqrt(variance).
GPRPrediction gpr_interval(const FittedKRR& model, Point x, double sigma2, double alpha);

double log_marginal_likelihood(const Dataset& data, double lambda, const KernelParams& params,
                               double sigma2);

/// argmax over σ² of the marginal likelihood: y'R⁻¹y / n.
double profile_sigma2(const Dataset& data, double lambda, const KernelParams& params);
/// Same, reusing an existing fit (y'R⁻¹y = y'β).
double profile_sigma2(const FittedKRR& model);

/// Profile likelihood L(θ, σ̂²(θ)) maximized over a grid of precisions.
/// Ties go to the smaller θ; grid points whose Gram system fails to
/// factorize are skipped.
MLEResult mle_theta(const Dataset& data, double lambda, std::span<const double> grid);

/// 25 log-spaced precisions in [1, 1e4].
std::vector<double> default_theta_grid();

/// Inverse standard normal CDF.
double std_normal_quantile(double g);

}  // namespace conforma
