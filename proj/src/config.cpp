#include "conforma/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, "not a number: '" + text + "'");
  }
  return value;
}

template <typename Int>
Int to_int(const std::string& text) {
  Int value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, "not an integer: '" + text + "'");
  }
  return value;
}

std::string join(const std::vector<double>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) out.push_back(to_double(item));
  return out;
}

CliConfig parse_config(std::istream& in, std::optional<std::uint64_t> seed_override) {
  CliConfig cfg;
  ExperimentConfig& e = cfg.experiment;

  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"dimension", [&](const std::string& v) { e.dimension = to_int<int>(v); }},
      {"test_function", [&](const std::string& v) { e.test_function = parse_test_function(v); }},
      {"gamma", [&](const std::string& v) { e.gamma = to_double(v); }},
      {"theta_gen", [&](const std::string& v) { e.theta_gen = to_double(v); }},
      {"theta_fit",
       [&](const std::string& v) {
         if (v == "mle") {
           e.theta_fit.reset();
         } else {
           e.theta_fit = to_double(v);
         }
       }},
      {"theta_grid", [&](const std::string& v) { e.theta_grid = parse_number_list(v); }},
      {"lambda", [&](const std::string& v) { e.lambda = to_double(v); }},
      {"n_train", [&](const std::string& v) { e.n_train = to_int<int>(v); }},
      {"n_pool", [&](const std::string& v) { e.n_pool = to_int<int>(v); }},
      {"replications", [&](const std::string& v) { e.replications = to_int<int>(v); }},
      {"alpha_grid", [&](const std::string& v) { e.alpha_grid = parse_number_list(v); }},
      {"ncm",
       [&](const std::string& v) {
         e.ncms.clear();
         for (const std::string& item : split_list(v)) {
           if (item == "rrcm") e.ncms.push_back(Ncm::kRrcm);
           else if (item == "crr") e.ncms.push_back(Ncm::kCrr);
           else throw Error(ErrorCode::kParse, "ncm must be rrcm or crr, got '" + item + "'");
         }
       }},
      {"residual_kind",
       [&](const std::string& v) {
         e.residual_kinds.clear();
         for (const std::string& item : split_list(v)) {
           if (item == "in_sample") e.residual_kinds.push_back(ResidualKind::kInSample);
           else if (item == "loo") e.residual_kinds.push_back(ResidualKind::kLoo);
           else throw Error(ErrorCode::kParse, "residual_kind must be in_sample or loo, got '" + item + "'");
         }
       }},
      {"test_grid", [&](const std::string& v) { e.test_grid = to_int<int>(v); }},
      {"seed", [&](const std::string& v) { e.seed = to_int<std::uint64_t>(v); }},
      {"output_dir", [&](const std::string& v) { cfg.output_dir = v; }},
      {"format",
       [&](const std::string& v) {
         if (v == "csv") cfg.format = OutputFormat::kCsv;
         else if (v == "json") cfg.format = OutputFormat::kJson;
         else throw Error(ErrorCode::kParse, "format must be csv or json, got '" + v + "'");
       }},
  };

  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kParse, where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::kParse, where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw Error(ErrorCode::kParse, where + "duplicate key '" + key + "'");
    if (value.empty()) throw Error(ErrorCode::kParse, where + "empty value for '" + key + "'");
    try {
      it->second(value);
    } catch (const Error& err) {
      throw Error(err.code() == ErrorCode::kUnknownFunction ? err.code() : ErrorCode::kParse,
                  where + err.what());
    }
  }
  if (seed_override) {
    e.seed = *seed_override;
    seen.insert("seed");
  }
  if (!seen.contains("seed")) throw Error(ErrorCode::kParse, "config: required key 'seed' missing");
  if (!seen.contains("n_pool")) e.n_pool = 4 * e.n_train;

  const std::vector<std::pair<std::string, std::string>> defaults = {
      {"dimension", std::to_string(e.dimension)},
      {"test_function", to_string(e.test_function)},
      {"gamma", join({e.gamma})},
      {"theta_gen", join({e.theta_gen})},
      {"theta_fit", "mle"},
      {"theta_grid", "25 log-spaced values in [1, 1e4]"},
      {"lambda", join({e.lambda})},
      {"n_train", std::to_string(e.n_train)},
      {"n_pool", std::to_string(e.n_pool)},
      {"replications", std::to_string(e.replications)},
      {"alpha_grid", join(e.alpha_grid)},
      {"ncm", "rrcm,crr"},
      {"residual_kind", "in_sample,loo"},
      {"test_grid", std::to_string(e.grid_per_axis())},
      {"output_dir", cfg.output_dir},
      {"format", "csv"},
  };
  for (const auto& [key, value] : defaults) {
    if (key == "theta_grid" && e.theta_fit) continue;
    if (!seen.contains(key)) cfg.notices.push_back("notice: " + key + " not set, using " + value);
  }
  e.validate();
  return cfg;
}

CliConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  return parse_config(in, seed_override);
}

}  // namespace conforma
