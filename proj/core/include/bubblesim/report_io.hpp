#pragma once

#include <string>
#include <vector>

#include "bubblesim/scenario.hpp"

namespace bubblesim {

/// Decimal with 12 significant digits; the one numeric format every output
/// file uses, so byte-identical runs produce byte-identical files.
std::string format_number(double x);

struct RunArtifacts {
    std::string manifest_path;
    std::string summary_path;
    std::vector<std::string> series_paths;
};

/// Writes manifest (key = value), summary.csv, and one series file per
/// path-statistic quantity into out_dir. Returns the written paths.
RunArtifacts write_run_artifacts(const ScenarioOutput& output, const std::string& out_dir,
                                 const std::string& library_version);

}  // namespace bubblesim
