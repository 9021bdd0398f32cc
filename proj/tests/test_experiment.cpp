#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "conforma/errors.hpp"
#include "conforma/experiment.hpp"

namespace conforma {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConfidenceRegion interval(double lo, double hi) { return ConfidenceRegion::from_components({{lo, hi}}); }

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dimension = 1;
  cfg.gamma = 1e-1;
  cfg.theta_gen = 50.0;
  cfg.theta_fit = 50.0;
  cfg.lambda = 1e-1;
  cfg.n_train = 20;
  cfg.n_pool = 60;
  cfg.replications = 4;
  cfg.alpha_grid = {0.05, 0.25};
  cfg.test_grid = 21;
  cfg.seed = 99;
  return cfg;
}

void expect_same(const ExperimentResult& a, const ExperimentResult& b) {
  ASSERT_EQ(a.replications.size(), b.replications.size());
  for (std::size_t l = 0; l < a.replications.size(); ++l) {
    const auto& ra = a.replications[l];
    const auto& rb = b.replications[l];
    ASSERT_EQ(ra.ok, rb.ok);
    EXPECT_EQ(ra.theta, rb.theta);
    EXPECT_EQ(ra.sigma2, rb.sigma2);
    for (std::size_t k = 0; k < ra.cells.size(); ++k) {
      for (std::size_t j = 0; j < ra.cells[k].size(); ++j) {
        EXPECT_EQ(ra.cells[k][j].coverage, rb.cells[k][j].coverage);
        EXPECT_EQ(ra.cells[k][j].widths.median, rb.cells[k][j].widths.median);
        EXPECT_EQ(ra.cells[k][j].widths.max, rb.cells[k][j].widths.max);
      }
    }
  }
}

TEST(SampleGpPath, Deterministic) {
  const PointMatrix x = test_grid(1, 15);
  EXPECT_EQ(sample_gp_path(x, 10.0, 0.0, 1.0, 5), sample_gp_path(x, 10.0, 0.0, 1.0, 5));
  EXPECT_NE(sample_gp_path(x, 10.0, 0.0, 1.0, 5), sample_gp_path(x, 10.0, 0.0, 1.0, 6));
}

TEST(SampleGpPath, ScalarVarianceMatchesKernel) {
  PointMatrix x(1, 1);
  x(0, 0) = 0.3;
  const int draws = 10000;
  double sum2 = 0.0;
  for (int s = 0; s < draws; ++s) {
    const double y = sample_gp_path(x, 10.0, 0.0, 1.0, static_cast<std::uint64_t>(s))(0);
    sum2 += y * y;
  }
  // Var of the second-moment estimator is 2/N under N(0, 1).
  EXPECT_NEAR(sum2 / draws, 1.0, 3.0 * std::sqrt(2.0 / draws));
}

TEST(SampleGpPath, PairCovarianceMatchesKernelPlusNoise) {
  PointMatrix x(2, 1);
  x << 0.0, 0.5;
  const double gamma = 0.1;
  const double k01 = std::exp(-0.25);
  const int draws = 10000;
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;
  for (int s = 0; s < draws; ++s) {
    const Vector y = sample_gp_path(x, 1.0, gamma, 1.0, 1000 + static_cast<std::uint64_t>(s));
    s00 += y(0) * y(0);
    s01 += y(0) * y(1);
    s11 += y(1) * y(1);
  }
  const double v = 1.0 + gamma;
  EXPECT_NEAR(s00 / draws, v, 3.0 * std::sqrt(2.0 * v * v / draws));
  EXPECT_NEAR(s11 / draws, v, 3.0 * std::sqrt(2.0 * v * v / draws));
  EXPECT_NEAR(s01 / draws, k01, 3.0 * std::sqrt((v * v + k01 * k01) / draws));
}

TEST(SampleGpPath, JitterRescuesDuplicatePoints) {
  PointMatrix x(3, 1);
  x << 0.2, 0.2, 0.7;
  const Vector y = sample_gp_path(x, 10.0, 0.0, 1.0, 1);
  EXPECT_NEAR(y(0), y(1), 1e-3);
  EXPECT_THROW(sample_gp_path(x, 10.0, -1.0, 1.0, 1), Error);
}

TEST(TestFunction, Examples) {
  const double a[] = {0.2};
  const double b[] = {0.5};
  const double c[] = {0.5, -0.3};
  EXPECT_EQ(test_function(TestFunction::kHeaviside, a), 0.0);
  EXPECT_EQ(test_function(TestFunction::kHeaviside, b), 1.0);
  EXPECT_NEAR(test_function(TestFunction::kF2, c), -1.0, 1e-15);
  try {
    parse_test_function("f3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownFunction);
  }
  EXPECT_THROW(test_function(TestFunction::kF2, a), Error);
}

TEST(TestGrid, MidpointsInsideDomain) {
  const PointMatrix g1 = test_grid(1, 101);
  ASSERT_EQ(g1.rows(), 101);
  EXPECT_NEAR(g1(0, 0), 0.5 / 101, 1e-15);
  EXPECT_NEAR(g1(50, 0), 0.5, 1e-15);
  const PointMatrix g2 = test_grid(2, 21);
  ASSERT_EQ(g2.rows(), 441);
  EXPECT_GT(g2.minCoeff(), -1.0);
  EXPECT_LT(g2.maxCoeff(), 1.0);
}

TEST(CoverageAndWidth, Examples) {
  const CoverageWidth all = coverage_and_width({ConfidenceRegion::real_line(), ConfidenceRegion::real_line()},
                                               Vector::Constant(2, 3.0));
  EXPECT_EQ(all.coverage, 1.0);
  EXPECT_EQ(all.widths.min, kInf);
  EXPECT_EQ(all.widths.median, kInf);

  const CoverageWidth none = coverage_and_width({interval(0, 1), interval(0, 1)}, Vector::Constant(2, 5.0));
  EXPECT_EQ(none.coverage, 0.0);

  Vector truths(2);
  truths << 1.0, 5.0;
  EXPECT_EQ(coverage_and_width({interval(0, 2), interval(-1, 1)}, truths).coverage, 0.5);

  try {
    coverage_and_width({interval(0, 1)}, truths);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(CoverageAndWidth, WidthQuantiles) {
  std::vector<ConfidenceRegion> regions;
  for (int w = 5; w >= 1; --w) regions.push_back(interval(0.0, w));
  const CoverageWidth cw = coverage_and_width(regions, Vector::Zero(5));
  EXPECT_EQ(cw.widths.min, 1.0);
  EXPECT_NEAR(cw.widths.p05, 1.2, 1e-15);
  EXPECT_EQ(cw.widths.median, 3.0);
  EXPECT_EQ(cw.widths.max, 5.0);
  // Rays and disconnected pieces use the hull; empty regions have width 0.
  const CoverageWidth mixed = coverage_and_width(
      {ConfidenceRegion(), ConfidenceRegion::from_components({{0, 1}, {3, 4}})}, Vector::Zero(2));
  EXPECT_EQ(mixed.widths.min, 0.0);
  EXPECT_EQ(mixed.widths.max, 4.0);
}

TEST(Mad, Examples) {
  const std::map<double, double> rates{{0.01, 0.015}, {0.05, 0.05}, {0.1, 0.1}, {0.25, 0.25}};
  EXPECT_NEAR(mad(rates, {0.01, 0.05, 0.1, 0.25}), 0.005, 1e-15);
  EXPECT_EQ(mad({{0.1, 0.1}, {0.2, 0.2}}, {0.1, 0.2}), 0.0);
  try {
    mad(rates, {0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingLevel);
  }
}

TEST(Methods, NamesRoundTrip) {
  for (const char* name : {"gpr", "rrcm", "rrcm-loo", "crr", "crr-loo"}) {
    EXPECT_EQ(parse_method(name).name(), name);
  }
  ExperimentConfig cfg;
  cfg.ncms = {Ncm::kCrr};
  cfg.residual_kinds = {ResidualKind::kLoo, ResidualKind::kInSample};
  std::vector<std::string> names;
  for (const Method& m : cfg.methods()) names.push_back(m.name());
  EXPECT_EQ(names, (std::vector<std::string>{"gpr", "crr-loo", "crr"}));
}

TEST(ExperimentConfig, Validation) {
  const auto expect_invalid = [](auto mutate) {
    ExperimentConfig cfg = small_config();
    mutate(cfg);
    EXPECT_THROW(cfg.validate(), Error);
  };
  EXPECT_NO_THROW(small_config().validate());
  expect_invalid([](ExperimentConfig& c) { c.dimension = 3; });
  expect_invalid([](ExperimentConfig& c) { c.test_function = TestFunction::kF2; });
  expect_invalid([](ExperimentConfig& c) { c.n_pool = 10; });
  expect_invalid([](ExperimentConfig& c) { c.alpha_grid = {0.1, 1.0}; });
  expect_invalid([](ExperimentConfig& c) { c.gamma = -1.0; });
  expect_invalid([](ExperimentConfig& c) { c.lambda = 0.0; });
  expect_invalid([](ExperimentConfig& c) {
    c.theta_fit.reset();
    c.theta_grid.clear();
  });
}

TEST(RunExperiment, Shape) {
  ExperimentConfig cfg = small_config();
  cfg.replications = 1;
  cfg.n_train = 5;
  cfg.alpha_grid = {0.5};
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.replications.size(), 1u);
  ASSERT_TRUE(r.replications[0].ok) << r.replications[0].error;
  EXPECT_EQ(r.methods.size(), 5u);
  ASSERT_EQ(r.replications[0].cells.size(), 5u);
  EXPECT_EQ(r.replications[0].cells[0].size(), 1u);
  EXPECT_EQ(r.summary.size(), 5u);
  EXPECT_EQ(r.skipped, 0);
  EXPECT_TRUE(r.valid);
}

TEST(RunExperiment, DeterministicAcrossRunsAndThreads) {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult a = run_experiment(cfg, 1);
  expect_same(a, run_experiment(cfg, 1));
  expect_same(a, run_experiment(cfg, 3));
}

TEST(RunExperiment, ReplicationsIndependentOfL) {
  ExperimentConfig cfg = small_config();
  const ExperimentResult a = run_experiment(cfg);
  cfg.replications = 7;
  ExperimentResult b = run_experiment(cfg);
  b.replications.resize(a.replications.size());
  expect_same(a, b);
}

TEST(RunExperiment, MleFitPicksGridValue) {
  ExperimentConfig cfg = small_config();
  cfg.theta_fit.reset();
  cfg.theta_grid = {1.0, 10.0, 100.0};
  const ExperimentResult r = run_experiment(cfg);
  for (const auto& rep : r.replications) {
    ASSERT_TRUE(rep.ok);
    EXPECT_TRUE(rep.theta == 1.0 || rep.theta == 10.0 || rep.theta == 100.0);
  }
}

TEST(RunExperiment, WidthsShrinkAsAlphaGrows) {
  const ExperimentResult r = run_experiment(small_config());
  for (const auto& rep : r.replications) {
    for (const auto& per_method : rep.cells) {
      EXPECT_LE(per_method[1].widths.p05, per_method[0].widths.p05);
      EXPECT_LE(per_method[1].widths.median, per_method[0].widths.median);
      EXPECT_LE(per_method[1].widths.max, per_method[0].widths.max);
      EXPECT_LE(per_method[0].coverage + 0.0, 1.0);
      EXPECT_GE(per_method[1].coverage, 0.0);
    }
  }
}

TEST(RunExperiment, SummaryMatchesReplications) {
  const ExperimentResult r = run_experiment(small_config());
  for (std::size_t k = 0; k < r.methods.size(); ++k) {
    std::map<double, double> rates;
    for (std::size_t a = 0; a < r.alphas.size(); ++a) {
      double sum = 0.0;
      for (const auto& rep : r.replications) sum += rep.cells[k][a].coverage;
      rates[r.alphas[a]] = 1.0 - sum / static_cast<double>(r.replications.size());
    }
    for (const SummaryRow& row : r.summary) {
      if (row.method != r.methods[k].name()) continue;
      EXPECT_NEAR(row.error_rate, rates[row.alpha], 1e-15);
      EXPECT_NEAR(row.mad, mad(rates, r.alphas), 1e-15);
    }
  }
}

TEST(RunExperiment, HeavisideAndF2Run) {
  ExperimentConfig cfg = small_config();
  cfg.test_function = TestFunction::kHeaviside;
  EXPECT_EQ(run_experiment(cfg).skipped, 0);
  cfg.test_function = TestFunction::kF2;
  cfg.dimension = 2;
  cfg.test_grid = 7;
  EXPECT_EQ(run_experiment(cfg).skipped, 0);
}

TEST(RunExperiment, ConformalConservativeOnGaussianData) {
  ExperimentConfig cfg = small_config();
  cfg.replications = 40;
  cfg.n_train = 40;
  cfg.n_pool = 200;
  cfg.test_grid = 51;
  cfg.alpha_grid = {0.1, 0.25};
  const ExperimentResult r = run_experiment(cfg, 0);
  const double cells = 40.0 * 51.0;
  for (const SummaryRow& row : r.summary) {
    if (row.method == "gpr") continue;
    // Loose bound: a single path correlates test targets, so allow 5 s.e.
    EXPECT_LE(row.error_rate, row.alpha + 5.0 * std::sqrt(row.alpha * (1 - row.alpha) / cells))
        << row.method << " " << row.alpha;
  }
}

}  // namespace
}  // namespace conforma
