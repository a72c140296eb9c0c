#pragma once

#include "ssrd/scenario.hpp"

#include <filesystem>
#include <string>

namespace ssrd {

/// Parses the `ssrd-scenario/1` key/value format (see docs/scenario_format.md).
/// Relative `regions.file` paths resolve against `base_dir`.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});

Scenario load_scenario(const std::filesystem::path& path);

/// Fully resolved form: inline regions, explicit calibration and costs.
/// parse_scenario(write_scenario(s)) reproduces `s` exactly.
std::string write_scenario(const Scenario& s);

}  // namespace ssrd
