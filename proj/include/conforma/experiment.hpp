#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conforma/conformal.hpp"
#include "conforma/gpr.hpp"

namespace conforma {

enum class TestFunction { kGpPath, kHeaviside, kF2 };

TestFunction parse_test_function(std::string_view name);
const char* to_string(TestFunction fn);

/// One interval-producing method: Bayesian GPR or a conformal NCM/residual pair.
struct Method {
  bool gpr = false;
  Ncm ncm = Ncm::kRrcm;
  ResidualKind residual = ResidualKind::kInSample;

  /// gpr, rrcm, rrcm-loo, crr, crr-loo.
  std::string name() const;
  bool operator==(const Method&) const = default;
};

Method parse_method(std::string_view name);

struct ExperimentConfig {
  int dimension = 1;
  TestFunction test_function = TestFunction::kGpPath;
  double gamma = 1e-6;
  double theta_gen = 100.0;
  /// Empty means the precision is chosen by maximum likelihood per replication.
  std::optional<double> theta_fit;
  std::vector<double> theta_grid = default_theta_grid();
  double lambda = 1e-6;
  int n_train = 100;
  int n_pool = 400;
  int replications = 100;
  std::vector<double> alpha_grid = {0.01, 0.05, 0.1, 0.25};
  std::vector<Ncm> ncms = {Ncm::kRrcm, Ncm::kCrr};
  std::vector<ResidualKind> residual_kinds = {ResidualKind::kInSample, ResidualKind::kLoo};
  /// Test grid points per axis; 0 picks 101 in 1-d and 21 in 2-d.
  int test_grid = 0;
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument / kInvalidAlpha naming the offending field.
  void validate() const;
  int grid_per_axis() const;
  /// GPR first, then every (ncm, residual) pair in configuration order.
  std::vector<Method> methods() const;
};

struct WidthSummary {
  double min = 0.0;
  double p05 = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct CoverageWidth {
  double coverage = 0.0;
  WidthSummary widths;
};

/// Fraction of regions containing their truth, and hull-width quantiles
/// (linear interpolation between order statistics). Empty regions have width 0.
CoverageWidth coverage_and_width(const std::vector<ConfidenceRegion>& regions,
                                 const Vector& truths);

/// max over levels of |rate(α) - α|. Throws kMissingLevel.
double mad(const std::map<double, double>& error_rates, const std::vector<double>& levels);

/// Regular grid of cell midpoints over the domain, `per_axis` points per axis
/// ([0,1] in 1-d, [-1,1]² in 2-d).
PointMatrix test_grid(int dimension, int per_axis);

/// y ~ N(0, σ²(K + γI)), factorized with escalating diagonal jitter.
Vector sample_gp_path(const PointMatrix& points, double theta, double gamma, double sigma2,
                      std::uint64_t seed);

double test_function(TestFunction fn, Point x);

struct ReplicationResult {
  int index = 0;  // 1-based
  bool ok = false;
  std::string error;
  double theta = 0.0;
  double sigma2 = 0.0;
  /// cells[m][a] for methods()[m] and alpha_grid[a].
  std::vector<std::vector<CoverageWidth>> cells;
};

struct SummaryRow {
  std::string method;
  double alpha = 0.0;
  double error_rate = 0.0;
  double mad = 0.0;
};

struct ExperimentResult {
  std::vector<Method> methods;
  std::vector<double> alphas;
  std::vector<ReplicationResult> replications;
  int skipped = 0;
  /// False when fewer than 90% of replications survived.
  bool valid = true;
  std::vector<SummaryRow> summary;
};

/// Fraction of replications allowed to fail before the run is invalid.
inline constexpr double kMaxSkippedFraction = 0.1;

/// threads == 0 uses every hardware thread. Output is independent of the
/// thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 1);

/// Seed of replication l (1-based): seed XOR l.
std::uint64_t replication_seed(std::uint64_t seed, int l);

}  // namespace conforma
