#include "conforma/conforma.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "conforma/config.hpp"
#include "conforma/conformal.hpp"
#include "conforma/errors.hpp"
#include "conforma/experiment.hpp"
#include "conforma/gpr.hpp"
#include "conforma/report.hpp"
#include "conforma/results.hpp"

struct conforma_dataset {
  conforma::Dataset data;
};

struct conforma_model {
  conforma::FittedKRR fit;
  double sigma2;
};

struct conforma_region {
  conforma::ConfidenceRegion region;
};

struct conforma_experiment {
  conforma::CliConfig config;
  std::optional<conforma::ExperimentResult> result;
};

namespace {

thread_local std::string last_error;

conforma_status status_of(conforma::ErrorCode code) {
  using conforma::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return CONFORMA_E_INVALID_ARGUMENT;
    case ErrorCode::kDimensionMismatch: return CONFORMA_E_DIMENSION_MISMATCH;
    case ErrorCode::kNotPositiveDefinite: return CONFORMA_E_NOT_POSITIVE_DEFINITE;
    case ErrorCode::kInvalidAlpha: return CONFORMA_E_INVALID_ALPHA;
    case ErrorCode::kInvalidProbability: return CONFORMA_E_INVALID_PROBABILITY;
    case ErrorCode::kEmptyRegion: return CONFORMA_E_EMPTY_REGION;
    case ErrorCode::kAllPointsFailed: return CONFORMA_E_ALL_POINTS_FAILED;
    case ErrorCode::kUnknownFunction: return CONFORMA_E_UNKNOWN_FUNCTION;
    case ErrorCode::kMissingLevel: return CONFORMA_E_MISSING_LEVEL;
    case ErrorCode::kParse: return CONFORMA_E_PARSE;
    case ErrorCode::kIo: return CONFORMA_E_IO;
    case ErrorCode::kTooManySkipped: return CONFORMA_E_TOO_MANY_SKIPPED;
  }
  return CONFORMA_E_INTERNAL;
}

conforma_status fail(conforma_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename Fn>
conforma_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const conforma::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CONFORMA_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CONFORMA_E_INTERNAL, e.what());
  }
}

conforma_status null_argument(const char* what) {
  return fail(CONFORMA_E_INVALID_ARGUMENT, std::string("null argument: ") + what);
}

conforma::Point point_of(const conforma_model* model, const double* x) {
  return {x, static_cast<std::size_t>(model->fit.data().dim())};
}

conforma::Ncm ncm_of(conforma_ncm ncm) {
  switch (ncm) {
    case CONFORMA_NCM_RRCM: return conforma::Ncm::kRrcm;
    case CONFORMA_NCM_CRR: return conforma::Ncm::kCrr;
  }
  throw conforma::Error(conforma::ErrorCode::kInvalidArgument, "unknown ncm");
}

conforma::ResidualKind kind_of(conforma_residual kind) {
  switch (kind) {
    case CONFORMA_RESIDUAL_IN_SAMPLE: return conforma::ResidualKind::kInSample;
    case CONFORMA_RESIDUAL_LOO: return conforma::ResidualKind::kLoo;
  }
  throw conforma::Error(conforma::ErrorCode::kInvalidArgument, "unknown residual kind");
}

conforma::KernelParams gaussian(double theta) {
  return {conforma::KernelKind::kGaussianIsotropic, theta};
}

}  // namespace

extern "C" {

const char* conforma_version(void) { return "0.1.0"; }

const char* conforma_status_name(conforma_status status) {
  switch (status) {
    case CONFORMA_OK: return "ok";
    case CONFORMA_E_INVALID_ARGUMENT: return "invalid_argument";
    case CONFORMA_E_DIMENSION_MISMATCH: return "dimension_mismatch";
    case CONFORMA_E_NOT_POSITIVE_DEFINITE: return "not_positive_definite";
    case CONFORMA_E_INVALID_ALPHA: return "invalid_alpha";
    case CONFORMA_E_INVALID_PROBABILITY: return "invalid_probability";
    case CONFORMA_E_EMPTY_REGION: return "empty_region";
    case CONFORMA_E_ALL_POINTS_FAILED: return "all_points_failed";
    case CONFORMA_E_UNKNOWN_FUNCTION: return "unknown_function";
    case CONFORMA_E_MISSING_LEVEL: return "missing_level";
    case CONFORMA_E_PARSE: return "parse";
    case CONFORMA_E_IO: return "io";
    case CONFORMA_E_TOO_MANY_SKIPPED: return "too_many_skipped";
    case CONFORMA_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* conforma_last_error(void) { return last_error.c_str(); }

conforma_status conforma_dataset_create(const double* inputs, const double* targets, size_t n, size_t d,
                                        conforma_dataset** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (n > 0 && (!inputs || !targets)) return null_argument("inputs/targets");
  return guarded([&] {
    auto handle = std::make_unique<conforma_dataset>();
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(d);
    handle->data.inputs = conforma::PointMatrix::Map(inputs, rows, cols);
    handle->data.targets = conforma::Vector::Map(targets, rows);
    handle->data.validate();
    *out = handle.release();
    return CONFORMA_OK;
  });
}

conforma_status conforma_dataset_read_csv(const char* path, conforma_dataset** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!path) return null_argument("path");
  return guarded([&] {
    *out = new conforma_dataset{conforma::read_train_csv(path)};
    return CONFORMA_OK;
  });
}

size_t conforma_dataset_size(const conforma_dataset* data) {
  return data ? static_cast<size_t>(data->data.size()) : 0;
}

size_t conforma_dataset_dim(const conforma_dataset* data) {
  return data ? static_cast<size_t>(data->data.dim()) : 0;
}

void conforma_dataset_free(conforma_dataset* data) { delete data; }

conforma_status conforma_mle_theta(const conforma_dataset* data, double lambda, const double* grid,
                                   size_t grid_len, double* theta, double* sigma2, double* log_likelihood) {
  if (!data) return null_argument("data");
  if (grid_len > 0 && !grid) return null_argument("grid");
  return guarded([&] {
    const std::vector<double> values =
        grid_len > 0 ? std::vector<double>(grid, grid + grid_len) : conforma::default_theta_grid();
    const conforma::MLEResult r = conforma::mle_theta(data->data, lambda, values);
    if (theta) *theta = r.theta_hat;
    if (sigma2) *sigma2 = r.sigma2_hat;
    if (log_likelihood) *log_likelihood = r.log_likelihood;
    return CONFORMA_OK;
  });
}

conforma_status conforma_log_likelihood(const conforma_dataset* data, double lambda, double theta,
                                        double sigma2, double* out) {
  if (!data) return null_argument("data");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = conforma::log_marginal_likelihood(data->data, lambda, gaussian(theta), sigma2);
    return CONFORMA_OK;
  });
}

conforma_status conforma_model_fit(const conforma_dataset* data, double lambda, double theta,
                                   conforma_model** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!data) return null_argument("data");
  return guarded([&] {
    conforma::FittedKRR fit = conforma::krr_fit(data->data, lambda, gaussian(theta));
    const double s2 = conforma::profile_sigma2(fit);
    *out = new conforma_model{std::move(fit), s2};
    return CONFORMA_OK;
  });
}

void conforma_model_free(conforma_model* model) { delete model; }

conforma_status conforma_model_predict(const conforma_model* model, const double* x, double* out) {
  if (!model) return null_argument("model");
  if (!x || !out) return null_argument("x/out");
  return guarded([&] {
    *out = conforma::krr_predict(model->fit, point_of(model, x));
    return CONFORMA_OK;
  });
}

conforma_status conforma_model_residuals(const conforma_model* model, conforma_residual kind, double* out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  return guarded([&] {
    const conforma::Vector r = kind_of(kind) == conforma::ResidualKind::kInSample
                                   ? conforma::residuals_in_sample(model->fit)
                                   : conforma::residuals_loo(model->fit);
    conforma::Vector::Map(out, r.size()) = r;
    return CONFORMA_OK;
  });
}

conforma_status conforma_model_sigma2(const conforma_model* model, double* out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = model->sigma2;
  last_error.clear();
  return CONFORMA_OK;
}

conforma_status conforma_gpr_interval(const conforma_model* model, const double* x, double alpha, double* mean,
                                      double* variance, double* lo, double* hi) {
  if (!model) return null_argument("model");
  if (!x) return null_argument("x");
  return guarded([&] {
    const conforma::GPRPrediction p = conforma::gpr_interval(model->fit, point_of(model, x), model->sigma2, alpha);
    if (mean) *mean = p.mean;
    if (variance) *variance = p.variance;
    if (lo) *lo = p.lo;
    if (hi) *hi = p.hi;
    return CONFORMA_OK;
  });
}

conforma_status conforma_region_compute(const conforma_model* model, const double* x, conforma_ncm ncm,
                                        conforma_residual kind, double alpha, conforma_region** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!model) return null_argument("model");
  if (!x) return null_argument("x");
  return guarded([&] {
    const conforma::LinePair lines = conforma::residual_lines(model->fit, point_of(model, x));
    const conforma::ResidualKind k = kind_of(kind);
    const conforma::ResidualLine& line = k == conforma::ResidualKind::kInSample ? lines.in_sample : lines.loo;
    *out = new conforma_region{conforma::conformal_region(line, ncm_of(ncm), alpha)};
    return CONFORMA_OK;
  });
}

conforma_status conforma_region_oracle(const conforma_model* model, const double* x, conforma_ncm ncm,
                                       conforma_residual kind, double alpha, conforma_region** out,
                                       int* agree) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!model) return null_argument("model");
  if (!x) return null_argument("x");
  return guarded([&] {
    const conforma::Dataset& train = model->fit.data();
    const conforma::Point xs = point_of(model, x);
    const conforma::ResidualKind k = kind_of(kind);
    const conforma::Ncm n = ncm_of(ncm);
    const double lambda = model->fit.lambda();
    const conforma::KernelParams& params = model->fit.params();
    const std::vector<double> grid = conforma::default_oracle_grid(train, xs, lambda, params);
    conforma::ConfidenceRegion oracle = conforma::brute_force_region(train, xs, lambda, params, k, n, alpha, grid);
    if (agree) {
      const conforma::ResidualLine line = conforma::residual_line(train, xs, lambda, params, k);
      *agree = conforma::regions_agree_on_grid(conforma::conformal_region(line, n, alpha), oracle, grid) ? 1 : 0;
    }
    *out = new conforma_region{std::move(oracle)};
    return CONFORMA_OK;
  });
}

size_t conforma_region_count(const conforma_region* region) {
  return region ? region->region.components().size() : 0;
}

conforma_status conforma_region_component(const conforma_region* region, size_t i, double* lo, double* hi) {
  if (!region) return null_argument("region");
  if (i >= region->region.components().size()) {
    return fail(CONFORMA_E_INVALID_ARGUMENT, "component index out of range");
  }
  const conforma::Component& c = region->region.components()[i];
  if (lo) *lo = c.lo;
  if (hi) *hi = c.hi;
  last_error.clear();
  return CONFORMA_OK;
}

int conforma_region_contains(const conforma_region* region, double z) {
  return region && conforma::region_contains(region->region, z) ? 1 : 0;
}

conforma_status conforma_region_width(const conforma_region* region, double* out) {
  if (!region) return null_argument("region");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = conforma::region_hull_width(region->region);
    return CONFORMA_OK;
  });
}

size_t conforma_region_format(const conforma_region* region, size_t i, char* buf, size_t cap) {
  if (!region || i >= region->region.components().size()) return 0;
  const std::string text = conforma::format_component(region->region.components()[i]);
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  }
  return text.size();
}

void conforma_region_free(conforma_region* region) { delete region; }

conforma_status conforma_experiment_load(const char* config_path, int has_seed_override, uint64_t seed_override,
                                         conforma_experiment** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!config_path) return null_argument("config_path");
  return guarded([&] {
    std::optional<std::uint64_t> seed;
    if (has_seed_override) seed = seed_override;
    *out = new conforma_experiment{conforma::load_config(config_path, seed), std::nullopt};
    return CONFORMA_OK;
  });
}

size_t conforma_experiment_notice_count(const conforma_experiment* exp) {
  return exp ? exp->config.notices.size() : 0;
}

const char* conforma_experiment_notice(const conforma_experiment* exp, size_t i) {
  if (!exp || i >= exp->config.notices.size()) return nullptr;
  return exp->config.notices[i].c_str();
}

const char* conforma_experiment_output_dir(const conforma_experiment* exp) {
  return exp ? exp->config.output_dir.c_str() : nullptr;
}

conforma_status conforma_experiment_set_output_dir(conforma_experiment* exp, const char* dir) {
  if (!exp) return null_argument("exp");
  if (!dir || !*dir) return null_argument("dir");
  exp->config.output_dir = dir;
  last_error.clear();
  return CONFORMA_OK;
}

conforma_status conforma_experiment_run(conforma_experiment* exp, unsigned threads) {
  if (!exp) return null_argument("exp");
  return guarded([&] {
    exp->result = conforma::run_experiment(exp->config.experiment, threads);
    return CONFORMA_OK;
  });
}

int conforma_experiment_replications(const conforma_experiment* exp) {
  return exp ? exp->config.experiment.replications : 0;
}

int conforma_experiment_skipped(const conforma_experiment* exp) {
  return exp && exp->result ? exp->result->skipped : 0;
}

conforma_status conforma_experiment_write(const conforma_experiment* exp) {
  if (!exp) return null_argument("exp");
  if (!exp->result) return fail(CONFORMA_E_INVALID_ARGUMENT, "experiment has not been run");
  return guarded([&] {
    conforma::write_results(*exp->result, exp->config.output_dir, exp->config.format);
    if (!exp->result->valid) {
      return fail(CONFORMA_E_TOO_MANY_SKIPPED,
                  std::to_string(exp->result->skipped) + " of " +
                      std::to_string(exp->config.experiment.replications) + " replications skipped");
    }
    return CONFORMA_OK;
  });
}

size_t conforma_experiment_summary_count(const conforma_experiment* exp) {
  return exp && exp->result ? exp->result->summary.size() : 0;
}

conforma_status conforma_experiment_summary_row(const conforma_experiment* exp, size_t i, const char** method,
                                                double* alpha, double* error_rate, double* mad) {
  if (!exp) return null_argument("exp");
  if (!exp->result || i >= exp->result->summary.size()) {
    return fail(CONFORMA_E_INVALID_ARGUMENT, "summary row index out of range");
  }
  const conforma::SummaryRow& row = exp->result->summary[i];
  if (method) *method = row.method.c_str();
  if (alpha) *alpha = row.alpha;
  if (error_rate) *error_rate = row.error_rate;
  if (mad) *mad = row.mad;
  last_error.clear();
  return CONFORMA_OK;
}

void conforma_experiment_free(conforma_experiment* exp) { delete exp; }

conforma_status conforma_report_write(const char* result_dir, size_t* files_written) {
  if (!result_dir) return null_argument("result_dir");
  return guarded([&] {
    const auto files = conforma::write_report(result_dir);
    if (files_written) *files_written = files.size();
    return CONFORMA_OK;
  });
}

}  // extern "C"
