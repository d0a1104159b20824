#pragma once

#include "celab/exclusion.hpp"

#include <iosfwd>
#include <string>

namespace celab {

// Scenario files hold one `key = value` pair per line; '#' starts a comment,
// blank lines are skipped, later duplicates win. Unknown keys throw Error so
// typos cannot silently fall back to defaults. `name_hint` names the scenario
// when the file has no explicit `name` key.
ScenarioConfig parse_scenario(std::istream& is, const std::string& name_hint = "unnamed");

// reads `path`, hinting the file stem as the scenario name
ScenarioConfig load_scenario(const std::string& path);

// writes every key in a fixed order; parse_scenario(write_scenario(cfg))
// reproduces cfg exactly (doubles round-trip through their shortest form)
void write_scenario(std::ostream& os, const ScenarioConfig& cfg);

} // namespace celab
