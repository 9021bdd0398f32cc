#include "conforma/results.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

const char* const kResultHeader =
    "replication,method,alpha,coverage,width_min,width_p05,width_median,width_max";
const char* const kSummaryHeader = "method,alpha,error_rate,mad";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, where + ": not a number: '" + cell + "'");
  }
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  return out;
}

void expect_header(std::istream& in, const std::string& path, const char* header) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error(ErrorCode::kParse, path + " line 1: unexpected header");
}

// Infinite widths become null; JSON has no infinity literal.
nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

Dataset read_train_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path + " line 1: missing header row");
  const std::size_t columns = split_csv(line).size();
  if (columns < 2) {
    throw Error(ErrorCode::kParse, path + " line 1: need at least one input column and a target column");
  }
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + " line " + std::to_string(line_no);
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != columns) {
      throw Error(ErrorCode::kParse, where + ": expected " + std::to_string(columns) + " fields, got " +
                                         std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const std::string& cell : cells) {
      const double v = parse_cell(cell, where);
      if (!std::isfinite(v)) throw Error(ErrorCode::kParse, where + ": non-finite value");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kParse, path + ": no data rows");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(columns - 1);
  Dataset data;
  data.inputs.resize(n, d);
  data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) data.inputs(i, k) = rows[i][k];
    data.targets(i) = rows[i][d];
  }
  return data;
}

std::vector<ResultRow> result_rows(const ExperimentResult& result) {
  std::vector<ResultRow> rows;
  for (const ReplicationResult& rep : result.replications) {
    if (!rep.ok) continue;
    for (std::size_t k = 0; k < result.methods.size(); ++k) {
      for (std::size_t a = 0; a < result.alphas.size(); ++a) {
        const CoverageWidth& cell = rep.cells[k][a];
        rows.push_back({rep.index, result.methods[k].name(), result.alphas[a], cell.coverage, cell.widths});
      }
    }
  }
  return rows;
}

std::vector<std::string> write_results(const ExperimentResult& result, const std::string& dir,
                                       OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  std::vector<std::string> written;
  const std::vector<ResultRow> rows = result_rows(result);

  {
    const std::string path = (base / "result.csv").string();
    std::ofstream out = open_output(path);
    out << kResultHeader << '\n';
    for (const ResultRow& r : rows) {
      out << r.replication << ',' << r.method << ',' << format_number(r.alpha) << ','
          << format_number(r.coverage) << ',' << format_number(r.widths.min) << ','
          << format_number(r.widths.p05) << ',' << format_number(r.widths.median) << ','
          << format_number(r.widths.max) << '\n';
    }
    written.push_back(path);
  }
  {
    const std::string path = (base / "summary.csv").string();
    std::ofstream out = open_output(path);
    out << kSummaryHeader << '\n';
    for (const SummaryRow& s : result.summary) {
      out << s.method << ',' << format_number(s.alpha) << ',' << format_number(s.error_rate) << ','
          << format_number(s.mad) << '\n';
    }
    written.push_back(path);
  }
  if (format == OutputFormat::kJson) {
    nlohmann::json jrows = nlohmann::json::array();
    for (const ResultRow& r : rows) {
      jrows.push_back({{"replication", r.replication},
                       {"method", r.method},
                       {"alpha", r.alpha},
                       {"coverage", r.coverage},
                       {"width_min", json_number(r.widths.min)},
                       {"width_p05", json_number(r.widths.p05)},
                       {"width_median", json_number(r.widths.median)},
                       {"width_max", json_number(r.widths.max)}});
    }
    nlohmann::json jsummary = nlohmann::json::array();
    for (const SummaryRow& s : result.summary) {
      jsummary.push_back({{"method", s.method},
                          {"alpha", s.alpha},
                          {"error_rate", json_number(s.error_rate)},
                          {"mad", json_number(s.mad)}});
    }
    const std::string rpath = (base / "result.json").string();
    open_output(rpath) << jrows.dump(2) << '\n';
    const std::string spath = (base / "summary.json").string();
    open_output(spath) << nlohmann::json{{"skipped", result.skipped}, {"summary", jsummary}}.dump(2) << '\n';
    written.push_back(rpath);
    written.push_back(spath);
  }
  return written;
}

std::vector<ResultRow> read_result_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_header(in, path, kResultHeader);
  std::vector<ResultRow> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + " line " + std::to_string(line_no);
    const auto c = split_csv(line);
    if (c.size() != 8) throw Error(ErrorCode::kParse, where + ": expected 8 fields");
    ResultRow r;
    r.replication = static_cast<int>(parse_cell(c[0], where));
    r.method = c[1];
    r.alpha = parse_cell(c[2], where);
    r.coverage = parse_cell(c[3], where);
    r.widths = {parse_cell(c[4], where), parse_cell(c[5], where), parse_cell(c[6], where),
                parse_cell(c[7], where)};
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_header(in, path, kSummaryHeader);
  std::vector<SummaryRow> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + " line " + std::to_string(line_no);
    const auto c = split_csv(line);
    if (c.size() != 4) throw Error(ErrorCode::kParse, where + ": expected 4 fields");
    rows.push_back({c[0], parse_cell(c[1], where), parse_cell(c[2], where), parse_cell(c[3], where)});
  }
  return rows;
}

}  // namespace conforma
