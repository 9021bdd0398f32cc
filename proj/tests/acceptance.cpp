// One PASS/FAIL line per acceptance criterion. Arguments select criteria by
// number; none runs all eight. Exit status is nonzero if any check fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "conforma/conformal.hpp"
#include "conforma/experiment.hpp"
#include "conforma/gpr.hpp"
#include "conforma/krr.hpp"

namespace {

using namespace conforma;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

Dataset random_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset data;
  data.inputs.resize(n, d);
  data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) data.inputs(i, k) = u(rng);
    data.targets(i) = g(rng);
  }
  return data;
}

Dataset dataset_1d(std::vector<double> xs, std::vector<double> ys) {
  Dataset d;
  d.inputs = PointMatrix::Map(xs.data(), static_cast<Eigen::Index>(xs.size()), 1);
  d.targets = Vector::Map(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return d;
}

Dataset without(const Dataset& data, Eigen::Index skip) {
  Dataset out;
  out.inputs.resize(data.size() - 1, data.dim());
  out.targets.resize(data.size() - 1);
  for (Eigen::Index i = 0, j = 0; i < data.size(); ++i) {
    if (i == skip) continue;
    out.inputs.row(j) = data.inputs.row(i);
    out.targets(j++) = data.targets(i);
  }
  return out;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240501);
  const double lambdas[] = {1e-6, 1e-1};
  const double thetas[] = {1.0, 10.0, 100.0};
  const double alphas[] = {0.05, 0.1, 0.25, 0.5};
  std::uniform_int_distribution<int> size(2, 15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int instances = 0, disagreements = 0;
  std::string first_bad;
  // Every (λ, θ, d, kind, ncm) combination appears; n and the data vary.
  for (int rep = 0; rep < 11; ++rep) {
    for (double lambda : lambdas) {
      for (double theta : thetas) {
        for (int d = 1; d <= 2; ++d) {
          const Dataset train = random_dataset(rng, size(rng), d);
          std::vector<double> xs(d);
          for (double& v : xs) v = u(rng);
          const KernelParams p{KernelKind::kGaussianIsotropic, theta};
          const auto grid = default_oracle_grid(train, xs, lambda, p);
          for (ResidualKind kind : {ResidualKind::kInSample, ResidualKind::kLoo}) {
            const ResidualLine line = residual_line(train, xs, lambda, p, kind);
            for (Ncm ncm : {Ncm::kRrcm, Ncm::kCrr}) {
              const auto kept = brute_force_membership(train, xs, lambda, p, kind, ncm, alphas, grid);
              for (std::size_t a = 0; a < 4; ++a) {
                ++instances;
                if (!regions_agree_on_grid(conformal_region(line, ncm, alphas[a]),
                                           region_from_grid(grid, kept[a]), grid)) {
                  if (disagreements++ == 0) {
                    first_bad = fmt(" first: n=%d d=%d lambda=%g theta=%g %s %s alpha=%g",
                                    static_cast<int>(train.size()), d, lambda, theta, to_string(kind),
                                    to_string(ncm), alphas[a]);
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {disagreements == 0 && instances >= 500 && elapsed < 60.0,
          fmt("%d instances, %d disagreements, %.1fs (limit 60s)%s", instances, disagreements, elapsed,
              first_bad.c_str())};
}

Outcome fixtures() {
  const KernelParams underflow{KernelKind::kGaussianIsotropic, 1e6};
  std::vector<std::string> bad;
  auto check = [&](const char* what, double got, double want) {
    if (!(std::abs(got - want) <= 1e-6)) bad.push_back(fmt("%s=%.9f want %.9f", what, got, want));
  };
  auto check_interval = [&](const char* what, const ConfidenceRegion& r, double lo, double hi) {
    if (r.components().size() != 1) {
      bad.push_back(fmt("%s has %zu components", what, r.components().size()));
      return;
    }
    check(what, r.components()[0].lo, lo);
    check(what, r.components()[0].hi, hi);
  };

  const double x1[] = {1.0};
  const Dataset one = dataset_1d({0.0}, {1.0});
  check_interval("rrcm", rrcm_region(residual_line(one, x1, 1.0, underflow, ResidualKind::kInSample), 0.6),
                 -1.0, 1.0);
  const double x4[] = {4.0};
  const Dataset two = dataset_1d({0.0, 2.0}, {1.0, -1.0});
  check_interval("crr", crr_region(residual_line(two, x4, 1.0, underflow, ResidualKind::kInSample), 1.0),
                 -1.0, 1.0);

  // n=1 GPR: mean 0.5, variance σ²(λ + 1 - 1/2) with σ² = 1, λ = 1.
  const double x0[] = {0.0};
  const FittedKRR fit = krr_fit(one, 1.0, underflow);
  const GPRPrediction g = gpr_interval(fit, x0, 1.0, 0.05);
  const double z975 = 1.959963984540054;
  check("gpr_lo", g.lo, 0.5 - z975 * std::sqrt(1.5));
  check("gpr_hi", g.hi, 0.5 + z975 * std::sqrt(1.5));

  // ℒ = -½log2π - ½log2 - 1/4.
  check("loglik", log_marginal_likelihood(one, 1.0, underflow, 1.0), -1.5155121234846454);
  check("sigma2", profile_sigma2(one, 1.0, underflow), 0.5);

  std::string detail = fmt("rrcm/crr [-1,1], gpr [%.7f, %.7f], loglik %.7f, sigma2 %.7f", g.lo, g.hi,
                           log_marginal_likelihood(one, 1.0, underflow, 1.0), profile_sigma2(one, 1.0, underflow));
  for (const std::string& b : bad) detail += "; " + b;
  return {bad.empty(), detail};
}

Outcome leverage_identity() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(2, 200);
  const double lambdas[] = {1e-3, 1e-1, 1.0};
  const double thetas[] = {1.0, 10.0, 100.0};
  double worst_identity = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = t == 0 ? 200 : size(rng);
    const Dataset data = random_dataset(rng, n, 1 + t % 2);
    const double lambda = lambdas[t % 3];
    const KernelParams p{KernelKind::kGaussianIsotropic, thetas[(t / 3) % 3]};
    const FittedKRR fit = krr_fit(data, lambda, p);
    // In-sample residuals straight from the definition.
    const Vector r_in = data.targets - krr_predict(fit, data.inputs);
    const Vector r_loo = residuals_loo(fit);
    const Vector m = leverage(fit);
    const double scale = r_in.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      worst_identity = std::max(worst_identity, std::abs(r_in(i) - lambda / m(i) * r_loo(i)) / scale);
    }
  }
  double worst_refit = 0.0;
  for (int t = 0; t < 40; ++t) {
    const int n = 2 + t % 24;
    const Dataset data = random_dataset(rng, n, 1 + t % 2);
    const double lambda = lambdas[t % 3];
    const KernelParams p{KernelKind::kGaussianIsotropic, thetas[t % 3]};
    const Vector r_loo = residuals_loo(krr_fit(data, lambda, p));
    for (int i = 0; i < n; ++i) {
      const FittedKRR sub = krr_fit(without(data, i), lambda, p);
      const double literal = data.targets(i) - krr_predict(sub, row_of(data.inputs, i));
      worst_refit = std::max(worst_refit, std::abs(literal - r_loo(i)) / std::max(1.0, std::abs(literal)));
    }
  }
  return {worst_identity <= 1e-8 && worst_refit <= 1e-7,
          fmt("identity max rel err %.2e (limit 1e-8, 100 instances n<=200); refit max err %.2e (limit 1e-7, n<=25)",
              worst_identity, worst_refit)};
}

Outcome gaussian_validity() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double gamma : {1e-6, 1e-1}) {
    ExperimentConfig cfg;
    cfg.dimension = 1;
    cfg.test_function = TestFunction::kGpPath;
    cfg.gamma = gamma;
    cfg.theta_gen = 100.0;
    cfg.theta_fit.reset();
    cfg.lambda = gamma;
    cfg.n_train = 100;
    cfg.n_pool = 400;
    cfg.replications = 200;
    cfg.alpha_grid = {0.05, 0.1, 0.25};
    cfg.test_grid = 101;
    cfg.seed = 2024;
    const ExperimentResult r = run_experiment(cfg, threads());
    const double cells = 200.0 * 101.0;
    detail += fmt("gamma=%g:", gamma);
    for (const SummaryRow& row : r.summary) {
      if (row.method == "gpr") continue;
      const double limit = row.alpha + 3.0 * std::sqrt(row.alpha * (1.0 - row.alpha) / cells);
      const bool pass = row.error_rate <= limit;
      ok &= pass;
      detail += fmt(" %s@%g=%.4f%s", row.method.c_str(), row.alpha, row.error_rate, pass ? "" : "(>limit)");
    }
    ok &= r.skipped == 0;
    detail += "; ";
  }
  const double elapsed = seconds_since(t0);
  ok &= elapsed < 300.0;
  return {ok, detail + fmt("%.1fs (limit 300s)", elapsed)};
}

Outcome scaled_mad() {
  ExperimentConfig cfg;
  cfg.dimension = 2;
  cfg.test_function = TestFunction::kGpPath;
  cfg.gamma = 1e-6;
  cfg.theta_gen = 10.0;
  cfg.theta_fit = 10.0;
  cfg.lambda = 1e-6;
  cfg.n_train = 200;
  cfg.n_pool = 800;
  cfg.replications = 100;
  cfg.alpha_grid = {0.01, 0.05, 0.1, 0.25};
  cfg.seed = 7;
  const ExperimentResult r = run_experiment(cfg, threads());
  bool ok = r.skipped == 0;
  std::string detail;
  std::set<std::string> seen;
  for (const SummaryRow& row : r.summary) {
    if (row.method == "gpr" || !seen.insert(row.method).second) continue;
    ok &= row.mad <= 0.05;
    detail += fmt("%s MAD=%.4f ", row.method.c_str(), row.mad);
  }
  ok &= seen.size() == 4;
  return {ok, detail + "(limit 0.05)"};
}

Outcome misspecification() {
  ExperimentConfig cfg;
  cfg.dimension = 2;
  cfg.test_function = TestFunction::kGpPath;
  cfg.gamma = 1e-1;
  cfg.theta_gen = 100.0;
  cfg.theta_fit = 100.0;
  cfg.lambda = 1e-6;
  cfg.n_train = 200;
  cfg.n_pool = 800;
  cfg.replications = 100;
  cfg.alpha_grid = {0.05};
  cfg.ncms = {Ncm::kRrcm};
  cfg.residual_kinds = {ResidualKind::kInSample};
  cfg.seed = 11;
  const ExperimentResult r = run_experiment(cfg, threads());
  double gpr = NAN, rrcm = NAN;
  for (const SummaryRow& row : r.summary) {
    if (row.method == "gpr") gpr = row.error_rate;
    if (row.method == "rrcm") rrcm = row.error_rate;
  }
  return {gpr > 0.08 && rrcm <= 0.08 && r.skipped == 0,
          fmt("gpr error %.4f (need > 0.08), rrcm error %.4f (need <= 0.08)", gpr, rrcm)};
}

Outcome complexity() {
  std::mt19937_64 rng(5);
  const int sizes[] = {500, 1000, 2000, 4000};
  std::vector<std::vector<ResidualLine>> lines(4);
  for (std::size_t k = 0; k < 4; ++k) {
    const Dataset data = random_dataset(rng, sizes[k], 1);
    const FittedKRR fit = krr_fit(data, 0.1, {KernelKind::kGaussianIsotropic, 100.0});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j = 0; j < 8; ++j) {
      const double x[] = {u(rng)};
      const LinePair pair = residual_lines(fit, x);
      lines[k].push_back(pair.in_sample);
      lines[k].push_back(pair.loo);
    }
  }
  // Region assembly only, lines already built from the fit. Sizes are timed
  // round-robin so machine drift hits all of them alike.
  std::vector<std::vector<double>> times(4);
  std::size_t sink = 0;
  for (int round = 0; round < 400; ++round) {
    for (std::size_t k = 0; k < 4; ++k) {
      const ResidualLine& line = lines[k][round % lines[k].size()];
      const auto t0 = Clock::now();
      sink += rrcm_region(line, 0.1).components().size();
      sink += crr_region(line, 0.1).components().size();
      times[k].push_back(seconds_since(t0));
    }
  }
  std::vector<double> medians;
  for (std::vector<double>& t : times) {
    std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
    medians.push_back(t[t.size() / 2]);
  }
  bool ok = sink > 0;
  std::string detail = "median region time:";
  for (std::size_t i = 0; i < medians.size(); ++i) detail += fmt(" n=%d %.1fus", sizes[i], medians[i] * 1e6);
  detail += "; ratios";
  for (std::size_t i = 1; i < medians.size(); ++i) {
    const double ratio = medians[i] / medians[i - 1];
    ok &= ratio <= 2.5;
    detail += fmt(" %.2f", ratio);
  }
  return {ok, detail + " (limit 2.5)"};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "conforma_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "exp.conf") << "seed = 8\ndimension = 2\ntheta_gen = 10\ntheta_fit = mle\ngamma = 0.1\n"
                                     "lambda = 0.1\nn_train = 60\nreplications = 12\ntest_grid = 11\n"
                                     "alpha_grid = 0.05,0.1,0.25\nformat = json\n";
  const std::string cli = CONFORMA_CLI_PATH;
  const auto run = [&](const char* threads, const char* out) {
    const std::string cmd = std::string("CONFORMA_THREADS=") + threads + " " + cli + " experiment " +
                            (dir / "exp.conf").string() + " --out " + (dir / out).string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const int a = run("1", "a");
  const int b = run("0", "b");
  bool same = a == 0 && b == 0;
  std::string detail = fmt("exit codes %d/%d", a, b);
  for (const char* f : {"result.csv", "summary.csv", "result.json", "summary.json"}) {
    const std::string x = read_file(dir / "a" / f);
    const bool eq = !x.empty() && x == read_file(dir / "b" / f);
    same &= eq;
    detail += fmt("; %s %s", f, eq ? "identical" : "DIFFERS");
  }
  fs::remove_all(dir);
  return {same, detail + " (1 thread vs all cores)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"hand-computed fixtures", fixtures},
      {"leverage identity", leverage_identity},
      {"gaussian validity", gaussian_validity},
      {"scaled MAD", scaled_mad},
      {"gpr misspecification", misspecification},
      {"region complexity", complexity},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
