#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "conforma/experiment.hpp"

namespace conforma {

enum class OutputFormat { kCsv, kJson };

struct CliConfig {
  ExperimentConfig experiment;
  std::string output_dir = "results";
  OutputFormat format = OutputFormat::kCsv;
  /// One line per key that fell back to its default.
  std::vector<std::string> notices;
};

/// Flat `key = value` text; `#` starts a comment. List values are comma
/// separated. Unknown or repeated keys and a missing `seed` throw kParse with
/// the line number. A seed override replaces (or supplies) `seed`. The result
/// is validated.
CliConfig parse_config(std::istream& in, std::optional<std::uint64_t> seed_override = {});
CliConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {});

std::vector<double> parse_number_list(const std::string& text);

}  // namespace conforma
