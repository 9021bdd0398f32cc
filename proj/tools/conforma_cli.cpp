// Command-line front end over the C API.
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conforma/conforma.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSkipped = 4;

int exit_code_for(conforma_status s) {
  switch (s) {
    case CONFORMA_OK: return kExitOk;
    case CONFORMA_E_NOT_POSITIVE_DEFINITE:
    case CONFORMA_E_ALL_POINTS_FAILED:
    case CONFORMA_E_EMPTY_REGION:
    case CONFORMA_E_INTERNAL:
      return kExitNumerical;
    case CONFORMA_E_TOO_MANY_SKIPPED: return kExitSkipped;
    default: return kExitInput;
  }
}

struct Failure {
  int code;
};

void check(conforma_status s) {
  if (s == CONFORMA_OK) return;
  std::fprintf(stderr, "error (%s): %s\n", conforma_status_name(s), conforma_last_error());
  throw Failure{exit_code_for(s)};
}

[[noreturn]] void usage_error(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  throw Failure{kExitInput};
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || errno != 0 || !std::isfinite(v)) {
      usage_error("test point: not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) usage_error("test point is empty");
  return out;
}

std::string interval_text(double lo, double hi) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.6f, %.6f]", lo, hi);
  return buf;
}

// Owns a C handle; the API fills `ptr` through an out-parameter.
template <typename T, void (*Free)(T*)>
struct Owned {
  Owned() = default;
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  ~Owned() { Free(ptr); }
  T* get() const { return ptr; }

  T* ptr = nullptr;
};

using DatasetHandle = Owned<conforma_dataset, conforma_dataset_free>;
using ModelHandle = Owned<conforma_model, conforma_model_free>;
using RegionHandle = Owned<conforma_region, conforma_region_free>;
using ExperimentHandle = Owned<conforma_experiment, conforma_experiment_free>;

void print_region(std::ostream& out, const conforma_region* region) {
  const size_t count = conforma_region_count(region);
  if (count == 0) {
    out << "empty\n";
    return;
  }
  for (size_t i = 0; i < count; ++i) {
    std::string text(conforma_region_format(region, i, nullptr, 0), '\0');
    conforma_region_format(region, i, text.data(), text.size() + 1);
    out << text << '\n';
  }
}

struct RegionArgs {
  std::string train;
  std::string point;
  double lambda = 1e-3;
  std::string theta = "mle";
  double alpha = 0.1;
  std::string ncm = "rrcm";
  std::string residual = "in";
  bool oracle = false;
  std::string out_dir;
};

int cmd_region(const RegionArgs& args) {
  DatasetHandle data;
  check(conforma_dataset_read_csv(args.train.c_str(), &data.ptr));
  const std::vector<double> x = parse_point(args.point);
  if (x.size() != conforma_dataset_dim(data.get())) {
    usage_error("test point has " + std::to_string(x.size()) + " coordinates, training inputs have " +
                std::to_string(conforma_dataset_dim(data.get())));
  }
  double theta = 0.0;
  if (args.theta == "mle") {
    check(conforma_mle_theta(data.get(), args.lambda, nullptr, 0, &theta, nullptr, nullptr));
  } else {
    char* end = nullptr;
    theta = std::strtod(args.theta.c_str(), &end);
    if (args.theta.empty() || *end != '\0') usage_error("--theta must be a number or 'mle'");
  }
  const conforma_ncm ncm = args.ncm == "crr" ? CONFORMA_NCM_CRR : CONFORMA_NCM_RRCM;
  const conforma_residual kind = args.residual == "loo" ? CONFORMA_RESIDUAL_LOO : CONFORMA_RESIDUAL_IN_SAMPLE;

  ModelHandle model;
  check(conforma_model_fit(data.get(), args.lambda, theta, &model.ptr));
  RegionHandle region;
  check(conforma_region_compute(model.get(), x.data(), ncm, kind, args.alpha, &region.ptr));

  std::ostringstream out;
  out << "# conformal ncm=" << args.ncm << " residual=" << args.residual << " alpha=" << args.alpha
      << " lambda=" << args.lambda << " theta=" << theta << '\n';
  print_region(out, region.get());

  double sigma2 = 0.0;
  check(conforma_model_sigma2(model.get(), &sigma2));
  if (args.alpha < 1.0) {
    double mean = 0.0, variance = 0.0, lo = 0.0, hi = 0.0;
    check(conforma_gpr_interval(model.get(), x.data(), args.alpha, &mean, &variance, &lo, &hi));
    out << "# gpr mean=" << mean << " variance=" << variance << " sigma2=" << sigma2 << '\n'
        << interval_text(lo, hi) << '\n';
  } else {
    out << "# gpr undefined at alpha=1\n";
  }

  if (args.oracle) {
    RegionHandle oracle;
    int agree = 0;
    check(conforma_region_oracle(model.get(), x.data(), ncm, kind, args.alpha, &oracle.ptr, &agree));
    out << "# oracle brute-force refit on 2001-point grid\n";
    print_region(out, oracle.get());
    out << (agree ? "AGREE" : "DISAGREE") << '\n';
  }

  const std::string text = out.str();
  std::fputs(text.c_str(), stdout);
  if (!args.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(args.out_dir, ec);
    std::ofstream file(std::filesystem::path(args.out_dir) / "region.txt", std::ios::binary);
    if (ec || !file) usage_error("cannot write to '" + args.out_dir + "'");
    file << text;
  }
  return kExitOk;
}

unsigned thread_count() {
  const char* env = std::getenv("CONFORMA_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) usage_error("CONFORMA_THREADS must be a non-negative integer");
  return static_cast<unsigned>(v);
}

int cmd_experiment(const std::string& config, const std::optional<std::uint64_t>& seed, const std::string& out_dir) {
  const unsigned threads = thread_count();
  ExperimentHandle exp;
  check(conforma_experiment_load(config.c_str(), seed ? 1 : 0, seed.value_or(0), &exp.ptr));
  for (size_t i = 0; i < conforma_experiment_notice_count(exp.get()); ++i) {
    std::fprintf(stderr, "%s\n", conforma_experiment_notice(exp.get(), i));
  }
  if (!out_dir.empty()) check(conforma_experiment_set_output_dir(exp.get(), out_dir.c_str()));
  check(conforma_experiment_run(exp.get(), threads));
  const conforma_status written = conforma_experiment_write(exp.get());
  if (written != CONFORMA_OK && written != CONFORMA_E_TOO_MANY_SKIPPED) check(written);

  std::printf("%-10s %8s %10s %8s\n", "method", "alpha", "error", "mad");
  for (size_t i = 0; i < conforma_experiment_summary_count(exp.get()); ++i) {
    const char* method = nullptr;
    double alpha = 0, rate = 0, mad = 0;
    check(conforma_experiment_summary_row(exp.get(), i, &method, &alpha, &rate, &mad));
    std::printf("%-10s %8.4f %10.4f %8.4f\n", method, alpha, rate, mad);
  }
  std::printf("replications %d, skipped %d, output %s\n", conforma_experiment_replications(exp.get()),
              conforma_experiment_skipped(exp.get()), conforma_experiment_output_dir(exp.get()));
  if (written == CONFORMA_E_TOO_MANY_SKIPPED) check(written);
  return kExitOk;
}

int cmd_report(const std::string& dir) {
  size_t files = 0;
  check(conforma_report_write(dir.c_str(), &files));
  std::printf("wrote %zu charts to %s\n", files, dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal and Bayesian prediction regions for kernel ridge regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(conforma_version()));

  RegionArgs region;
  auto* reg = app.add_subcommand("region", "Confidence region for one test point");
  reg->add_option("train", region.train, "Training CSV (header, d input columns, target)")->required();
  reg->add_option("point", region.point, "Test point, comma-separated coordinates")->required();
  reg->add_option("--lambda", region.lambda, "Ridge parameter")->capture_default_str();
  reg->add_option("--theta", region.theta, "Kernel precision or 'mle'")->capture_default_str();
  reg->add_option("--alpha", region.alpha, "Significance level")->capture_default_str();
  reg->add_option("--ncm", region.ncm, "rrcm or crr")
      ->check(CLI::IsMember({"rrcm", "crr"}))
      ->capture_default_str();
  reg->add_option("--residual", region.residual, "in or loo")
      ->check(CLI::IsMember({"in", "loo"}))
      ->capture_default_str();
  reg->add_flag("--oracle", region.oracle, "Also print the brute-force region and a verdict");
  reg->add_option("--out", region.out_dir, "Directory for region.txt");

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string exp_out;
  auto* exp = app.add_subcommand("experiment", "Run a coverage experiment from a config file");
  exp->add_option("config", config, "key = value configuration file")->required();
  exp->add_option("--seed", seed, "Override the config seed");
  exp->add_option("--out", exp_out, "Override output_dir");

  std::string result_dir;
  auto* rep = app.add_subcommand("report", "Render SVG charts from an experiment directory");
  rep->add_option("result_dir", result_dir, "Directory holding result.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*reg) return cmd_region(region);
    if (*exp) return cmd_experiment(config, seed, exp_out);
    return cmd_report(result_dir);
  } catch (const Failure& f) {
    return f.code;
  }
}
