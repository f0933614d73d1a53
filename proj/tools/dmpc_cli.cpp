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


// dmpc command line: run, sweep and compare scenarios.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dmpc/harness.hpp"
#include "dmpc/plots.hpp"
#include "dmpc/scenario_io.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef DMPC_SCENARIO_DIR
#define DMPC_SCENARIO_DIR "scenarios"
#endif

// Accepts a path or a shipped scenario name.
std::string resolve(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  if (fs::path(arg).extension().empty()) {
    for (const fs::path dir : {fs::path("scenarios"), fs::path(DMPC_SCENARIO_DIR)}) {
      const fs::path p = dir / (arg + ".yaml");
      if (fs::exists(p)) return p.string();
    }
  }
  return arg;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cli: cannot write " + p.string());
  out << text;
}

void write_run(const fs::path& dir, const dmpc::Scenario& sc, const dmpc::RunReport& rep) {
  fs::create_directories(dir);
  write(dir / "config.yaml", dmpc::emit_scenario(sc));
  write(dir / "trace.csv", dmpc::trace_csv(rep, sc.n));
  write(dir / "report.yaml", dmpc::report_yaml(sc, rep));
  write(dir / "timing.yaml", dmpc::timing_yaml(rep));
  write(dir / "trajectories.svg", dmpc::trajectory_svg(sc, rep));
  write(dir / "residuals.svg", dmpc::residual_svg(rep));
}

void summarize(const std::string& label, const dmpc::RunReport& rep) {
  std::cout << label << ": " << (rep.success ? "success" : "FAILED") << " steps=" << rep.steps
            << " cost=" << rep.cost << " min_dist=" << rep.min_dist
            << " mean_rounds=" << rep.mean_rounds
            << " infeasibility_events=" << rep.infeasibility_events;
  if (!rep.error.empty()) std::cout << " error=\"" << rep.error << "\"";
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("dmpc");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("DMPC_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(lvl));
  }

  CLI::App app{"Distributed MPC with dual-certificate collision avoidance"};
  app.require_subcommand(1);

  std::string scenario_arg;
  std::string out_dir = "out";
  std::vector<std::string> sets;
  std::vector<double> deltas{0.1, 0.3, 0.5};

  auto common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_arg, "scenario file or shipped scenario name")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", sets, "override a scenario field, key=value (repeatable)");
  };
  CLI::App* run = app.add_subcommand("run", "closed-loop run");
  common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "run once per delta");
  common(sweep);
  sweep->add_option("--deltas", deltas, "comma-separated deltas")->delimiter(',');
  CLI::App* compare = app.add_subcommand("compare", "hard versus soft constraints");
  common(compare);

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<dmpc::Override> overrides;
    for (const auto& s : sets) overrides.push_back(dmpc::parse_override(s));
    const dmpc::Scenario sc = dmpc::load_scenario(resolve(scenario_arg), overrides);
    const fs::path out(out_dir);
    fs::create_directories(out);

    if (*run) {
      const dmpc::RunReport rep = dmpc::run_dmpc(sc);
      write_run(out, sc, rep);
      summarize(sc.name, rep);
      return rep.success && rep.error.empty() ? 0 : 1;
    }
    if (*sweep) {
      const auto entries = dmpc::sweep_delta(sc, deltas);
      bool ok = true;
      for (const auto& e : entries) {
        dmpc::Scenario s = sc;
        s.delta = e.delta;
        write_run(out / ("delta_" + std::to_string(e.delta).substr(0, 5)), s, e.report);
        summarize("delta " + std::to_string(e.delta), e.report);
        ok = ok && e.report.success && e.report.error.empty();
      }
      write(out / "sweep.yaml", dmpc::sweep_yaml(entries));
      write(out / "sweep.svg", dmpc::sweep_svg(entries));
      return ok ? 0 : 1;
    }
    const dmpc::ModeComparison cmp = dmpc::compare_modes(sc);
    dmpc::Scenario hard = sc, soft = sc;
    hard.mode = dmpc::ConstraintMode::kHard;
    soft.mode = dmpc::ConstraintMode::kSoft;
    write_run(out / "hard", hard, cmp.hard);
    write_run(out / "soft", soft, cmp.soft);
    write(out / "compare.yaml", dmpc::compare_yaml(cmp));
    summarize("hard", cmp.hard);
    summarize("soft", cmp.soft);
    std::cout << "max slack (soft): " << cmp.soft.max_slack << "\n";
    return cmp.hard.success && cmp.soft.success && cmp.hard.error.empty() &&
                   cmp.soft.error.empty()
               ? 0
               : 1;
  } catch (const dmpc::ScenarioError& e) {
    std::cerr << "scenario_io: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "harness: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}
