// SPDX-License-Identifier: Apache-2.0
//
// fisac — simulation and optimization toolkit for multistatic sensing with
// movable-antenna transceivers.
// Copyright (C) 2026 the fisac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end.  All experiment logic lives in fisac/cli.hpp; this
// file only maps flags onto engine calls and writes the resulting files.
//
// Exit codes: 0 success, 1 error, 2 infeasible run verdict.

#include "fisac/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

struct CommonFlags
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool genie_psi = false;
    std::string convention = "auto";
};

void add_common(CLI::App *cmd, CommonFlags &fl)
{
    cmd->add_option("--config", fl.config_path, "scenario configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", fl.seed, "override the configured master seed");
    cmd->add_flag("--genie-psi", fl.genie_psi,
                  "build sensing weights from the realized reflections");
    cmd->add_option("--convention", fl.convention,
                    "detector statistic scaling: auto, paper, or half")
        ->check(CLI::IsMember({"auto", "paper", "half"}));
}

fisac::ScenarioConfig load_scenario(const CommonFlags &fl)
{
    fisac::ScenarioConfig cfg = fisac::load_scenario_config_file(fl.config_path);
    if (fl.seed)
        cfg.seed = *fl.seed;
    return cfg;
}

void write_file(const std::string &path, const std::string &content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw fisac::config_error("cannot open output file '" + path + "'");
    out << content;
    if (!out)
        throw fisac::config_error("failed writing output file '" + path + "'");
}

std::vector<fisac::SchemeMode> parse_modes(const std::vector<std::string> &names)
{
    if (names.empty())
        return fisac::all_schemes();
    std::vector<fisac::SchemeMode> modes;
    for (const std::string &name : names)
        modes.push_back(fisac::parse_scheme(name));
    return modes;
}

int cmd_run(const CommonFlags &fl, const std::string &scheme, const std::string &out_path)
{
    fisac::RunConfig rc;
    rc.scenario = load_scenario(fl);
    rc.mode = fisac::parse_scheme(scheme);
    rc.genie_psi = fl.genie_psi;
    rc.convention =
        fisac::resolve_convention(fisac::parse_convention(fl.convention), rc.scenario);

    fisac::RunResult res = fisac::run(rc);
    write_file(out_path, fisac::trace_csv(res));
    std::cout << fisac::summary_csv(rc, res);
    return fisac::run_exit_code(res);
}

int cmd_sweep(const CommonFlags &fl, const std::string &sweep_text,
              const std::vector<std::string> &scheme_names, int trials,
              const std::string &out_path)
{
    fisac::ExperimentSpec spec;
    spec.base.scenario = load_scenario(fl);
    spec.base.genie_psi = fl.genie_psi;
    spec.base.convention =
        fisac::resolve_convention(fisac::parse_convention(fl.convention), spec.base.scenario);
    spec.modes = parse_modes(scheme_names);
    auto [var, grid] = fisac::parse_sweep(sweep_text);
    spec.var = var;
    spec.grid = grid;
    spec.trials = trials;
    spec.out_path = out_path;

    fisac::SweepArtifacts art = fisac::execute_sweep(spec);
    write_file(spec.out_path, art.csv);
    std::cout << art.csv;
    return 0;
}

int cmd_calibrate(const CommonFlags &fl, long draws, const std::string &out_path)
{
    fisac::ScenarioConfig cfg = load_scenario(fl);
    fisac::CalibrationArtifacts art = fisac::execute_calibration(cfg, draws);
    write_file(out_path, art.text);
    std::cout << art.text;
    if (!art.report.ok)
    {
        std::cerr << "fisac: error: no statistic scaling matched the false-alarm target\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"multistatic sensing with movable-antenna transceivers"};
    app.require_subcommand(1);

    CommonFlags run_fl;
    std::string run_scheme = "ds-fas";
    std::string run_out = "trace.csv";
    CLI::App *run_cmd =
        app.add_subcommand("run", "one optimization run; trace CSV plus a summary row");
    add_common(run_cmd, run_fl);
    run_cmd->add_option("--scheme", run_scheme, "ds-fas, t-fas, r-fas, fpa-ula, or fpa-cp");
    run_cmd->add_option("--out", run_out, "convergence trace CSV path");

    CommonFlags sweep_fl;
    std::string sweep_text;
    std::vector<std::string> sweep_schemes;
    int sweep_trials = 1;
    std::string sweep_out = "sweep.csv";
    CLI::App *sweep_cmd = app.add_subcommand(
        "sweep", "paired-seed Monte Carlo aggregation over a parameter grid");
    add_common(sweep_cmd, sweep_fl);
    sweep_cmd->add_option("--sweep", sweep_text, "grid, e.g. gamma=1,3,5 or k=8,12,16")
        ->required();
    sweep_cmd
        ->add_option("--scheme", sweep_schemes,
                     "schemes to compare (repeatable; default: all five)")
        ->delimiter(',');
    sweep_cmd->add_option("--trials", sweep_trials, "paired trials per grid point")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep_out, "aggregate CSV path");

    CommonFlags cal_fl;
    long cal_draws = 100000;
    std::string cal_out = "calibration.txt";
    CLI::App *cal_cmd = app.add_subcommand(
        "calibrate-detector", "adjudicate the detector scaling on pure-noise draws");
    add_common(cal_cmd, cal_fl);
    cal_cmd->add_option("--trials", cal_draws, "pure-noise draw count")
        ->check(CLI::PositiveNumber);
    cal_cmd->add_option("--out", cal_out, "report path");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // help exits clean; every parse failure is an error
    }

    try
    {
        if (run_cmd->parsed())
            return cmd_run(run_fl, run_scheme, run_out);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_fl, sweep_text, sweep_schemes, sweep_trials, sweep_out);
        return cmd_calibrate(cal_fl, cal_draws, cal_out);
    }
    catch (const std::exception &e)
    {
        std::cerr << "fisac: error: " << e.what() << "\n";
        return 1;
    }
}
