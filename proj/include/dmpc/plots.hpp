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


// Static SVG figures: agent paths, ADMM residuals, sweep summary.

#ifndef DMPC_PLOTS_HPP
#define DMPC_PLOTS_HPP

#include <string>
#include <vector>

#include "dmpc/harness.hpp"

namespace dmpc {

/// Paths in the x-y plane with start and goal markers and the delta box at
/// the final positions.
std::string trajectory_svg(const Scenario& sc, const RunReport& rep);

/// log10 primal residual per ADMM round, one polyline per MPC step (first
/// step highlighted).
std::string residual_svg(const RunReport& rep);

/// Closed-loop cost bars per delta.
std::string sweep_svg(const std::vector<SweepEntry>& entries);

}  // namespace dmpc

#endif  // DMPC_PLOTS_HPP
