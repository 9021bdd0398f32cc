#pragma once

#include <string>
#include <vector>

#include "conforma/config.hpp"
#include "conforma/experiment.hpp"

namespace conforma {

/// Header row, then d input columns and the target per line. Throws kParse
/// naming the offending line, kIo when the file cannot be read.
Dataset read_train_csv(const std::string& path);

/// Shortest decimal that round-trips, `inf` / `-inf` for infinities.
std::string format_number(double value);

struct ResultRow {
  int replication = 0;
  std::string method;
  double alpha = 0.0;
  double coverage = 0.0;
  WidthSummary widths;
};

std::vector<ResultRow> result_rows(const ExperimentResult& result);

/// Writes result.csv and summary.csv into `dir` (created if needed), plus
/// result.json and summary.json for the JSON format. Returns the paths written.
std::vector<std::string> write_results(const ExperimentResult& result, const std::string& dir,
                                       OutputFormat format);

std::vector<ResultRow> read_result_csv(const std::string& path);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

}  // namespace conforma
