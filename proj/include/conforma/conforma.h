/* C interface to the conforma library. All functions return a status code;
 * on failure conforma_last_error() describes the most recent error raised on
 * the calling thread. Handles are opaque and owned by the caller, who
 * releases them with the matching *_free function (NULL is accepted). */
#ifndef CONFORMA_CONFORMA_H
#define CONFORMA_CONFORMA_H

#include <stddef.h>
#include <stdint.h>

#if defined(CONFORMA_BUILDING_LIBRARY)
#define CONFORMA_API __attribute__((visibility("default")))
#else
#define CONFORMA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum conforma_status {
  CONFORMA_OK = 0,
  CONFORMA_E_INVALID_ARGUMENT = 1,
  CONFORMA_E_DIMENSION_MISMATCH = 2,
  CONFORMA_E_NOT_POSITIVE_DEFINITE = 3,
  CONFORMA_E_INVALID_ALPHA = 4,
  CONFORMA_E_INVALID_PROBABILITY = 5,
  CONFORMA_E_EMPTY_REGION = 6,
  CONFORMA_E_ALL_POINTS_FAILED = 7,
  CONFORMA_E_UNKNOWN_FUNCTION = 8,
  CONFORMA_E_MISSING_LEVEL = 9,
  CONFORMA_E_PARSE = 10,
  CONFORMA_E_IO = 11,
  CONFORMA_E_TOO_MANY_SKIPPED = 12,
  CONFORMA_E_INTERNAL = 99
} conforma_status;

typedef enum conforma_ncm { CONFORMA_NCM_RRCM = 0, CONFORMA_NCM_CRR = 1 } conforma_ncm;

typedef enum conforma_residual {
  CONFORMA_RESIDUAL_IN_SAMPLE = 0,
  CONFORMA_RESIDUAL_LOO = 1
} conforma_residual;

typedef struct conforma_dataset conforma_dataset;
typedef struct conforma_model conforma_model;
typedef struct conforma_region conforma_region;
typedef struct conforma_experiment conforma_experiment;

CONFORMA_API const char* conforma_version(void);
CONFORMA_API const char* conforma_status_name(conforma_status status);
/* Message of the last failed call on this thread; empty after success. */
CONFORMA_API const char* conforma_last_error(void);

/* inputs is row-major n x d. */
CONFORMA_API conforma_status conforma_dataset_create(const double* inputs, const double* targets,
                                                     size_t n, size_t d, conforma_dataset** out);
/* Header row, then d input columns and the target. */
CONFORMA_API conforma_status conforma_dataset_read_csv(const char* path, conforma_dataset** out);
CONFORMA_API size_t conforma_dataset_size(const conforma_dataset* data);
CONFORMA_API size_t conforma_dataset_dim(const conforma_dataset* data);
CONFORMA_API void conforma_dataset_free(conforma_dataset* data);

/* Precision by profile likelihood over grid[0..grid_len); grid_len == 0 uses
 * 25 log-spaced values in [1, 1e4]. Any output pointer may be NULL. */
CONFORMA_API conforma_status conforma_mle_theta(const conforma_dataset* data, double lambda,
                                                const double* grid, size_t grid_len,
                                                double* theta, double* sigma2,
                                                double* log_likelihood);
CONFORMA_API conforma_status conforma_log_likelihood(const conforma_dataset* data, double lambda,
                                                     double theta, double sigma2, double* out);

CONFORMA_API conforma_status conforma_model_fit(const conforma_dataset* data, double lambda,
                                                double theta, conforma_model** out);
CONFORMA_API void conforma_model_free(conforma_model* model);
CONFORMA_API conforma_status conforma_model_predict(const conforma_model* model, const double* x,
                                                    double* out);
/* Writes n residuals of the training sample. */
CONFORMA_API conforma_status conforma_model_residuals(const conforma_model* model,
                                                      conforma_residual kind, double* out);
/* Profile-likelihood sigma^2 of the fitted sample. */
CONFORMA_API conforma_status conforma_model_sigma2(const conforma_model* model, double* out);
/* GPR predictive interval at x with the profile sigma^2. */
CONFORMA_API conforma_status conforma_gpr_interval(const conforma_model* model, const double* x,
                                                   double alpha, double* mean, double* variance,
                                                   double* lo, double* hi);

CONFORMA_API conforma_status conforma_region_compute(const conforma_model* model, const double* x,
                                                     conforma_ncm ncm, conforma_residual kind,
                                                     double alpha, conforma_region** out);
/* Brute-force region refitted at every point of the default 2001-point grid;
 * *agree reports whether it matches the fast region on that grid. */
CONFORMA_API conforma_status conforma_region_oracle(const conforma_model* model, const double* x,
                                                    conforma_ncm ncm, conforma_residual kind,
                                                    double alpha, conforma_region** out,
                                                    int* agree);
CONFORMA_API size_t conforma_region_count(const conforma_region* region);
CONFORMA_API conforma_status conforma_region_component(const conforma_region* region, size_t i,
                                                       double* lo, double* hi);
CONFORMA_API int conforma_region_contains(const conforma_region* region, double z);
/* Hull width, +inf for unbounded regions. */
CONFORMA_API conforma_status conforma_region_width(const conforma_region* region, double* out);
/* Text of component i as printed by the command-line tool; returns the
 * length needed, excluding the terminator. */
CONFORMA_API size_t conforma_region_format(const conforma_region* region, size_t i, char* buf,
                                           size_t cap);
CONFORMA_API void conforma_region_free(conforma_region* region);

/* Loads a key = value configuration. seed_override applies when
 * has_seed_override is nonzero. */
CONFORMA_API conforma_status conforma_experiment_load(const char* config_path,
                                                      int has_seed_override,
                                                      uint64_t seed_override,
                                                      conforma_experiment** out);
CONFORMA_API size_t conforma_experiment_notice_count(const conforma_experiment* exp);
CONFORMA_API const char* conforma_experiment_notice(const conforma_experiment* exp, size_t i);
CONFORMA_API const char* conforma_experiment_output_dir(const conforma_experiment* exp);
CONFORMA_API conforma_status conforma_experiment_set_output_dir(conforma_experiment* exp,
                                                                const char* dir);
/* threads == 0 uses every hardware thread. */
CONFORMA_API conforma_status conforma_experiment_run(conforma_experiment* exp, unsigned threads);
CONFORMA_API int conforma_experiment_replications(const conforma_experiment* exp);
CONFORMA_API int conforma_experiment_skipped(const conforma_experiment* exp);
/* Writes result and summary files to the output directory. Returns
 * CONFORMA_E_TOO_MANY_SKIPPED (after writing) when more than 10% of the
 * replications failed. */
CONFORMA_API conforma_status conforma_experiment_write(const conforma_experiment* exp);
CONFORMA_API size_t conforma_experiment_summary_count(const conforma_experiment* exp);
CONFORMA_API conforma_status conforma_experiment_summary_row(const conforma_experiment* exp,
                                                             size_t i, const char** method,
                                                             double* alpha, double* error_rate,
                                                             double* mad);
CONFORMA_API void conforma_experiment_free(conforma_experiment* exp);

/* SVG charts next to result.csv in result_dir. */
CONFORMA_API conforma_status conforma_report_write(const char* result_dir, size_t* files_written);

#ifdef __cplusplus
}
#endif

#endif
