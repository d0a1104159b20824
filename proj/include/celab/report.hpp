#pragma once

#include "celab/exclusion.hpp"

#include <string>
#include <vector>

namespace celab {

// Manifest for a finished run: echoes the scenario, the startup outcome and
// the artifact list. Worker counts are deliberately absent so reruns of the
// same scenario produce identical bytes under any thread setting.
std::string manifest_json(const RunResult& res, const ScenarioConfig& cfg,
                          const std::vector<std::string>& artifacts);

// Writes ledger.csv, summary.json, tree.jsonl and manifest.json into out_dir
// (created if missing); returns the file names in the order written.
std::vector<std::string> write_run_report(const RunResult& res, const ScenarioConfig& cfg,
                                          const std::string& out_dir);

} // namespace celab
