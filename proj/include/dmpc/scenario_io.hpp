/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Scenario files (YAML), dotted overrides, trace and report emission.

#ifndef DMPC_SCENARIO_IO_HPP
#define DMPC_SCENARIO_IO_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "dmpc/harness.hpp"

namespace dmpc {

/// Parse or validation failure. what() names the file, and the line and
/// column when the YAML location is known.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key=value` with a dotted key, e.g. `admm.rho=2` or `agents.0.goal.position=[1, 2]`.
struct Override {
  std::string key;
  std::string value;
};

Override parse_override(const std::string& text);

/// Reads, applies overrides, converts and validates. Unknown keys are rejected.
Scenario load_scenario(const std::string& path, const std::vector<Override>& overrides = {});
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>",
                        const std::vector<Override>& overrides = {});

/// Full effective configuration; parse_scenario(emit_scenario(sc)) == sc.
std::string emit_scenario(const Scenario& sc);

/// One row per (step, agent), fixed column order, %.9e numbers.
std::string trace_csv(const RunReport& rep, int n);
std::string trace_header(int n);

/// Deterministic run report with the effective configuration echoed; timing
/// lives in timing_yaml.
std::string report_yaml(const Scenario& sc, const RunReport& rep);
std::string timing_yaml(const RunReport& rep);

std::string sweep_yaml(const std::vector<SweepEntry>& entries);
std::string compare_yaml(const ModeComparison& cmp);

}  // namespace dmpc

#endif  // DMPC_SCENARIO_IO_HPP
