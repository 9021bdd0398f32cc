#include "conforma/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

constexpr double kJitters[] = {0.0, 1e-10, 1e-8, 1e-6};
constexpr std::uint32_t kPoolStream = 0x706f6f6c;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "config: " + what);
}

double quantile_sorted(const std::vector<double>& x, double p) {
  const double h = p * static_cast<double>(x.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= x.size() || x[lo] == x[lo + 1]) return x[lo];
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

struct Pool {
  PointMatrix train_inputs;
  Vector train_targets;
  PointMatrix test_inputs;
  Vector test_targets;
};

Pool make_pool(const ExperimentConfig& cfg) {
  std::mt19937_64 rng = make_rng(cfg.seed, kPoolStream);
  Pool pool;
  const int d = cfg.dimension;
  const double lo = d == 1 ? 0.0 : -1.0;
  std::uniform_real_distribution<double> u(lo, 1.0);
  pool.train_inputs.resize(cfg.n_pool, d);
  for (int i = 0; i < cfg.n_pool; ++i) {
    for (int k = 0; k < d; ++k) pool.train_inputs(i, k) = u(rng);
  }
  pool.test_inputs = test_grid(d, cfg.grid_per_axis());
  const Eigen::Index m = pool.test_inputs.rows();

  Vector all(cfg.n_pool + m);
  if (cfg.test_function == TestFunction::kGpPath) {
    PointMatrix joint(cfg.n_pool + m, d);
    joint.topRows(cfg.n_pool) = pool.train_inputs;
    joint.bottomRows(m) = pool.test_inputs;
    all = sample_gp_path(joint, cfg.theta_gen, cfg.gamma, 1.0, rng());
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    const double noise = std::sqrt(cfg.gamma);
    for (int i = 0; i < cfg.n_pool; ++i) {
      all(i) = test_function(cfg.test_function, row_of(pool.train_inputs, i)) + noise * g(rng);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      all(cfg.n_pool + i) = test_function(cfg.test_function, row_of(pool.test_inputs, i)) + noise * g(rng);
    }
  }
  pool.train_targets = all.head(cfg.n_pool);
  pool.test_targets = all.tail(m);
  return pool;
}

Dataset subsample(const Pool& pool, int n, std::mt19937_64& rng) {
  const int size = static_cast<int>(pool.train_inputs.rows());
  std::vector<int> idx(size);
  for (int i = 0; i < size; ++i) idx[i] = i;
  // Partial Fisher-Yates.
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Dataset data;
  data.inputs.resize(n, pool.train_inputs.cols());
  data.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    data.inputs.row(i) = pool.train_inputs.row(idx[i]);
    data.targets(i) = pool.train_targets(idx[i]);
  }
  return data;
}

ReplicationResult run_replication(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                                  const Pool& pool, int l) {
  ReplicationResult out;
  out.index = l;
  try {
    std::mt19937_64 rng = make_rng(replication_seed(cfg.seed, l), 0);
    const Dataset train = subsample(pool, cfg.n_train, rng);
    out.theta = cfg.theta_fit ? *cfg.theta_fit : mle_theta(train, cfg.lambda, cfg.theta_grid).theta_hat;
    const FittedKRR fit = krr_fit(train, cfg.lambda, {KernelKind::kGaussianIsotropic, out.theta});
    out.sigma2 = profile_sigma2(fit);

    const std::size_t n_alpha = cfg.alpha_grid.size();
    const Eigen::Index m = pool.test_inputs.rows();
    std::vector<std::vector<std::vector<ConfidenceRegion>>> regions(
        methods.size(), std::vector<std::vector<ConfidenceRegion>>(n_alpha));
    for (auto& per_method : regions) {
      for (auto& per_alpha : per_method) per_alpha.reserve(m);
    }
    for (Eigen::Index t = 0; t < m; ++t) {
      const Point x = row_of(pool.test_inputs, t);
      const GPRPrediction post = gpr_posterior(fit, x, out.sigma2);
      const LinePair lines = residual_lines(fit, x);
      for (std::size_t k = 0; k < methods.size(); ++k) {
        const Method& method = methods[k];
        for (std::size_t a = 0; a < n_alpha; ++a) {
          const double alpha = cfg.alpha_grid[a];
          if (method.gpr) {
            const double half = std_normal_quantile(1.0 - alpha / 2.0) * std::sqrt(post.variance);
            regions[k][a].push_back(
                ConfidenceRegion::from_components({{post.mean - half, post.mean + half}}));
          } else {
            const ResidualLine& line =
                method.residual == ResidualKind::kInSample ? lines.in_sample : lines.loo;
            regions[k][a].push_back(conformal_region(line, method.ncm, alpha));
          }
        }
      }
    }
    out.cells.assign(methods.size(), std::vector<CoverageWidth>(n_alpha));
    for (std::size_t k = 0; k < methods.size(); ++k) {
      for (std::size_t a = 0; a < n_alpha; ++a) {
        out.cells[k][a] = coverage_and_width(regions[k][a], pool.test_targets);
      }
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
    out.cells.clear();
  }
  return out;
}

}  // namespace

TestFunction parse_test_function(std::string_view name) {
  if (name == "gp_path") return TestFunction::kGpPath;
  if (name == "heaviside") return TestFunction::kHeaviside;
  if (name == "f2") return TestFunction::kF2;
  throw Error(ErrorCode::kUnknownFunction, "unknown test function '" + std::string(name) + "'");
}

const char* to_string(TestFunction fn) {
  switch (fn) {
    case TestFunction::kGpPath: return "gp_path";
    case TestFunction::kHeaviside: return "heaviside";
    case TestFunction::kF2: return "f2";
  }
  return "?";
}

std::string Method::name() const {
  if (gpr) return "gpr";
  std::string out = ncm == Ncm::kRrcm ? "rrcm" : "crr";
  if (residual == ResidualKind::kLoo) out += "-loo";
  return out;
}

Method parse_method(std::string_view name) {
  if (name == "gpr") return Method{true};
  if (name == "rrcm") return Method{false, Ncm::kRrcm, ResidualKind::kInSample};
  if (name == "rrcm-loo") return Method{false, Ncm::kRrcm, ResidualKind::kLoo};
  if (name == "crr") return Method{false, Ncm::kCrr, ResidualKind::kInSample};
  if (name == "crr-loo") return Method{false, Ncm::kCrr, ResidualKind::kLoo};
  throw Error(ErrorCode::kParse, "unknown method '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (dimension != 1 && dimension != 2) bad_config("dimension must be 1 or 2");
  if (test_function == TestFunction::kHeaviside && dimension != 1) {
    bad_config("heaviside is defined in 1-d only");
  }
  if (test_function == TestFunction::kF2 && dimension != 2) bad_config("f2 is defined in 2-d only");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad_config("gamma must be >= 0");
  if (!(theta_gen > 0.0) || !std::isfinite(theta_gen)) bad_config("theta_gen must be positive");
  if (theta_fit && !(*theta_fit > 0.0 && std::isfinite(*theta_fit))) {
    bad_config("theta_fit must be positive or 'mle'");
  }
  if (!theta_fit) {
    if (theta_grid.empty()) bad_config("theta_grid must not be empty");
    for (double t : theta_grid) {
      if (!(t > 0.0) || !std::isfinite(t)) bad_config("theta_grid values must be positive");
    }
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) bad_config("lambda must be positive");
  if (n_train < 1) bad_config("n_train must be positive");
  if (n_pool < n_train) bad_config("n_pool must be >= n_train");
  if (replications < 1) bad_config("replications must be positive");
  if (alpha_grid.empty()) bad_config("alpha_grid must not be empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) {
      throw Error(ErrorCode::kInvalidAlpha, "config: alpha_grid values must lie in (0, 1)");
    }
  }
  if (ncms.empty()) bad_config("ncm must not be empty");
  if (residual_kinds.empty()) bad_config("residual_kind must not be empty");
  if (test_grid < 0) bad_config("test_grid must be >= 0");
}

int ExperimentConfig::grid_per_axis() const {
  if (test_grid > 0) return test_grid;
  return dimension == 1 ? 101 : 21;
}

std::vector<Method> ExperimentConfig::methods() const {
  std::vector<Method> out{Method{true}};
  for (Ncm ncm : ncms) {
    for (ResidualKind kind : residual_kinds) {
      const Method m{false, ncm, kind};
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
  }
  return out;
}

CoverageWidth coverage_and_width(const std::vector<ConfidenceRegion>& regions, const Vector& truths) {
  if (static_cast<Eigen::Index>(regions.size()) != truths.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "coverage_and_width: regions and truths differ in length");
  }
  if (regions.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "coverage_and_width: no test points");
  }
  CoverageWidth out;
  std::vector<double> widths;
  widths.reserve(regions.size());
  int hits = 0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    hits += region_contains(regions[i], truths(static_cast<Eigen::Index>(i))) ? 1 : 0;
    widths.push_back(regions[i].empty() ? 0.0 : region_hull_width(regions[i]));
  }
  std::sort(widths.begin(), widths.end());
  out.coverage = static_cast<double>(hits) / static_cast<double>(regions.size());
  out.widths.min = widths.front();
  out.widths.p05 = quantile_sorted(widths, 0.05);
  out.widths.median = quantile_sorted(widths, 0.5);
  out.widths.max = widths.back();
  return out;
}

double mad(const std::map<double, double>& error_rates, const std::vector<double>& levels) {
  double worst = 0.0;
  for (double level : levels) {
    const auto it = error_rates.find(level);
    if (it == error_rates.end()) {
      throw Error(ErrorCode::kMissingLevel, "mad: no error rate for level " + std::to_string(level));
    }
    worst = std::max(worst, std::abs(it->second - level));
  }
  return worst;
}

PointMatrix test_grid(int dimension, int per_axis) {
  if (per_axis < 1) throw Error(ErrorCode::kInvalidArgument, "test_grid: need at least one point per axis");
  if (dimension == 1) {
    PointMatrix out(per_axis, 1);
    for (int i = 0; i < per_axis; ++i) out(i, 0) = (i + 0.5) / per_axis;
    return out;
  }
  if (dimension == 2) {
    PointMatrix out(per_axis * per_axis, 2);
    for (int i = 0; i < per_axis; ++i) {
      for (int j = 0; j < per_axis; ++j) {
        out(i * per_axis + j, 0) = -1.0 + 2.0 * (i + 0.5) / per_axis;
        out(i * per_axis + j, 1) = -1.0 + 2.0 * (j + 0.5) / per_axis;
      }
    }
    return out;
  }
  throw Error(ErrorCode::kInvalidArgument, "test_grid: dimension must be 1 or 2");
}

Vector sample_gp_path(const PointMatrix& points, double theta, double gamma, double sigma2,
                      std::uint64_t seed) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sample_gp_path: gamma must be >= 0");
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sample_gp_path: sigma2 must be positive");
  const Eigen::Index n = points.rows();
  const Matrix base = gram({KernelKind::kGaussianIsotropic, theta}, points);
  std::optional<CholFactor> factor;
  for (double jitter : kJitters) {
    Matrix cov = base;
    cov.diagonal().array() += gamma + jitter;
    try {
      factor.emplace(cholesky_factorize(cov));
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNotPositiveDefinite) throw;
    }
  }
  if (!factor) {
    throw Error(ErrorCode::kNotPositiveDefinite, "sample_gp_path: covariance not positive definite after jitter");
  }
  std::mt19937_64 rng = make_rng(seed, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = g(rng);
  Vector y = factor->packed().triangularView<Eigen::Lower>() * z;
  return std::sqrt(sigma2) * y;
}

double test_function(TestFunction fn, Point x) {
  switch (fn) {
    case TestFunction::kHeaviside:
      if (x.size() != 1) throw Error(ErrorCode::kDimensionMismatch, "heaviside takes a 1-d point");
      return x[0] >= 0.5 ? 1.0 : 0.0;
    case TestFunction::kF2: {
      if (x.size() != 2) throw Error(ErrorCode::kDimensionMismatch, "f2 takes a 2-d point");
      const double sign = x[1] > 0.0 ? 1.0 : (x[1] < 0.0 ? -1.0 : 0.0);
      return std::sin(std::numbers::pi * x[0]) * sign;
    }
    case TestFunction::kGpPath:
      break;
  }
  throw Error(ErrorCode::kUnknownFunction, "test_function: gp_path has no closed form");
}

std::uint64_t replication_seed(std::uint64_t seed, int l) {
  return seed ^ static_cast<std::uint64_t>(l);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  ExperimentResult result;
  result.methods = cfg.methods();
  result.alphas = cfg.alpha_grid;
  const Pool pool = make_pool(cfg);

  const int L = cfg.replications;
  result.replications.resize(L);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(L));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int l = next++; l < L; l = next++) {
      result.replications[l] = run_replication(cfg, result.methods, pool, l + 1);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool_threads;
    for (unsigned t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
  }

  int ok = 0;
  for (const auto& r : result.replications) ok += r.ok ? 1 : 0;
  result.skipped = L - ok;
  result.valid = static_cast<double>(result.skipped) <= kMaxSkippedFraction * L;

  for (std::size_t k = 0; k < result.methods.size(); ++k) {
    std::map<double, double> rates;
    std::vector<SummaryRow> rows;
    for (std::size_t a = 0; a < result.alphas.size(); ++a) {
      double sum = 0.0;
      for (const auto& r : result.replications) {
        if (r.ok) sum += r.cells[k][a].coverage;
      }
      const double rate = ok > 0 ? 1.0 - sum / ok : std::nan("");
      rates[result.alphas[a]] = rate;
      rows.push_back({result.methods[k].name(), result.alphas[a], rate, 0.0});
    }
    const double m = mad(rates, result.alphas);
    for (auto& row : rows) {
      row.mad = m;
      result.summary.push_back(row);
    }
  }
  return result;
}

}  // namespace conforma
