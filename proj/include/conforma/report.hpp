#pragma once

#include <string>
#include <vector>

#include "conforma/results.hpp"

namespace conforma {

/// Coverage per replication, one line per level, with the nominal 1 - α as a
/// dashed reference.
std::string coverage_chart_svg(const std::vector<ResultRow>& rows, const std::string& method);

/// Mean median hull width per level; upward triangles mark the 5% quantile,
/// downward triangles the maximum. Infinite widths are left out and counted
/// in the caption.
std::string width_chart_svg(const std::vector<ResultRow>& rows, const std::string& method);

/// Reads result.csv from `result_dir` and writes coverage_<method>.svg and
/// width_<method>.svg next to it. Throws kIo when the file is missing and
/// kParse when it holds no rows.
std::vector<std::string> write_report(const std::string& result_dir);

}  // namespace conforma
