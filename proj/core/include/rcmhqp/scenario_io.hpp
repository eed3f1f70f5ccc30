#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "rcmhqp/simulator.hpp"

namespace rcmhqp {

/// Parses a scenario JSON document. Errors are raised as ConfigError with a
/// "<source>:<line>: message" prefix pointing at the offending entry.
Scenario parse_scenario(std::string_view text, std::string_view source = "<scenario>");

Scenario load_scenario(const std::filesystem::path& path);

/// Column header of the per-cycle log for a chain with `dof` joints.
std::string csv_header(std::size_t dof);

/// One header line plus one line per record, LF terminated. Numbers use the
/// shortest representation that round-trips to the same double.
void write_csv(std::ostream& out, const std::vector<StepRecord>& records, std::size_t dof);

std::string summary_json(const SimSummary& summary, const std::optional<std::string>& failure = std::nullopt);

}  // namespace rcmhqp
