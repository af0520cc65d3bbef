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

// Covered tests:
//  - configuration parsing: values, conversions, comments, sections, line
//    diagnostics on malformed input
//  - trace CSV format contract (row count, schema)
//  - summary row and exit-code mapping, incl. forced infeasibility
//  - repeated runs emit bitwise-identical CSV text
//  - sweep grid parsing and experiment validation
//  - degenerate single-point sweep equals the single-run summary
//  - RFC-4180 field quoting
//  - detector calibration report determinism and verdict

#include "fisac/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace fisac;

namespace
{

ScenarioConfig smoke_scenario()
{
    ScenarioConfig cfg;
    cfg.m_t = 2;
    cfg.m_r = 1;
    cfg.k = 2;
    cfg.n = 2;
    cfg.l = 4;
    cfg.t_snapshots = 8;
    cfg.model = ChannelModel::normalized;
    cfg.gamma = 1.0;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST_CASE("configuration files parse with conversions")
{
    std::istringstream in("# comment\n"
                          "[scenario]\n"
                          "m_t = 3\n"
                          "m_r = 2 ; trailing comment\n"
                          "k = 5\n"
                          "n = 2\n"
                          "l = 6\n"
                          "region_tx_lambda = 1.5\n"
                          "region_rx_lambda = 0.75\n"
                          "p_t_dbm = 30\n"
                          "gamma_db = 10\n"
                          "p_fa = 0.1\n"
                          "t_snapshots = 4\n"
                          "model = normalized\n"
                          "seed = 99\n"
                          "radius_m = 150\n");
    ScenarioConfig cfg = load_scenario_config(in, "inline");
    REQUIRE(cfg.m_t == 3);
    REQUIRE(cfg.m_r == 2);
    REQUIRE(cfg.k == 5);
    REQUIRE(cfg.n == 2);
    REQUIRE(cfg.l == 6);
    REQUIRE(cfg.region_tx_lambda == 1.5);
    REQUIRE(cfg.region_rx_lambda == 0.75);
    REQUIRE(cfg.p_t_watt == Catch::Approx(1.0).epsilon(1e-12));  // 30 dBm
    REQUIRE(cfg.gamma == Catch::Approx(10.0).epsilon(1e-12));    // 10 dB
    REQUIRE(cfg.p_fa == 0.1);
    REQUIRE(cfg.t_snapshots == 4);
    REQUIRE(cfg.model == ChannelModel::normalized);
    REQUIRE(cfg.seed == 99);
    REQUIRE(cfg.radius_m == 150.0);
}

TEST_CASE("malformed configuration lines carry diagnostics")
{
    auto message_of = [](const std::string &text)
    {
        std::istringstream in(text);
        try
        {
            load_scenario_config(in, "bad.ini");
        }
        catch (const config_error &e)
        {
            return std::string(e.what());
        }
        return std::string();
    };

    std::string msg = message_of("m_t = 2\nwhatever = 3\n");
    REQUIRE(msg.find("bad.ini:2") != std::string::npos);
    REQUIRE(msg.find("unknown key 'whatever'") != std::string::npos);

    msg = message_of("m_t = banana\n");
    REQUIRE(msg.find("bad.ini:1") != std::string::npos);
    REQUIRE(msg.find("banana") != std::string::npos);

    msg = message_of("m_t = 2.5\n");
    REQUIRE(msg.find("integer") != std::string::npos);

    msg = message_of("model = fancy\n");
    REQUIRE(msg.find("fancy") != std::string::npos);

    msg = message_of("k 4\n");
    REQUIRE(msg.find("key = value") != std::string::npos);

    msg = message_of("[scenario\n");
    REQUIRE(msg.find("unterminated") != std::string::npos);

    // values survive parsing but violate scenario invariants
    std::istringstream in("p_fa = 1.5\n");
    REQUIRE_THROWS_AS(load_scenario_config(in, "bad.ini"), config_error);

    REQUIRE_THROWS_AS(load_scenario_config_file("/nonexistent/path.ini"), config_error);
}

TEST_CASE("trace CSV keeps one row per iteration plus a header")
{
    RunConfig rc;
    rc.scenario = smoke_scenario();
    rc.mode = SchemeMode::fpa_cp;
    RunResult res = run(rc);

    std::string trace = trace_csv(res);
    long rows = long(std::count(trace.begin(), trace.end(), '\n'));
    REQUIRE(rows == res.iterations + 1);
    REQUIRE(trace.rfind("iter,omega,nu,rho,sinr_1,sinr_2\n", 0) == 0);

    std::string summary = summary_csv(rc, res);
    REQUIRE(summary.rfind("scheme,seed,iterations,omega,nu,rho,eta,p_d,feasible,sinr_1,sinr_2\n",
                          0) == 0);
    REQUIRE(summary.find("fpa-cp,7,") != std::string::npos);
    REQUIRE(run_exit_code(res) == 0);
}

TEST_CASE("impossible targets surface as the infeasible exit code")
{
    RunConfig rc;
    rc.scenario = smoke_scenario();
    rc.scenario.gamma = 1e6;
    rc.mode = SchemeMode::fpa_cp;
    RunResult res = run(rc);
    REQUIRE(run_exit_code(res) == 2);
    REQUIRE(res.nu > 0.0);
    std::string summary = summary_csv(rc, res);
    REQUIRE(summary.find(",0,") != std::string::npos); // feasible column reads 0
}

TEST_CASE("repeated runs emit bitwise-identical CSV text")
{
    RunConfig rc;
    rc.scenario = smoke_scenario();
    rc.mode = SchemeMode::ds_fas;

    RunResult a = run(rc);
    RunResult b = run(rc);
    REQUIRE(trace_csv(a) == trace_csv(b));
    REQUIRE(summary_csv(rc, a) == summary_csv(rc, b));

    ExperimentSpec spec;
    spec.base.scenario = smoke_scenario();
    spec.var = SweepVar::gamma;
    spec.grid = {1.0, 2.0};
    spec.trials = 2;
    REQUIRE(execute_sweep(spec).csv == execute_sweep(spec).csv);
}

TEST_CASE("sweep grids parse")
{
    auto [var_g, grid_g] = parse_sweep("gamma=1,3,5");
    REQUIRE(var_g == SweepVar::gamma);
    REQUIRE(grid_g == std::vector<double>{1.0, 3.0, 5.0});

    auto [var_k, grid_k] = parse_sweep("k=8,12");
    REQUIRE(var_k == SweepVar::users);
    REQUIRE(grid_k == std::vector<double>{8.0, 12.0});

    auto [var_r, grid_r] = parse_sweep("region=2");
    REQUIRE(var_r == SweepVar::region);
    REQUIRE(grid_r == std::vector<double>{2.0});

    REQUIRE_THROWS_AS(parse_sweep("power=1,2"), config_error);
    REQUIRE_THROWS_AS(parse_sweep("gamma"), config_error);
    REQUIRE_THROWS_AS(parse_sweep("gamma=1,,2"), config_error);
    REQUIRE_THROWS_AS(parse_sweep("gamma=1,two"), config_error);
}

TEST_CASE("experiment specs are validated")
{
    ExperimentSpec spec;
    spec.base.scenario = smoke_scenario();
    spec.grid = {1.0};

    ExperimentSpec bad = spec;
    bad.trials = 0;
    REQUIRE_THROWS_AS(execute_sweep(bad), config_error);

    bad = spec;
    bad.grid.clear();
    REQUIRE_THROWS_AS(execute_sweep(bad), config_error);

    bad = spec;
    bad.modes.clear();
    REQUIRE_THROWS_AS(execute_sweep(bad), config_error);

    bad = spec;
    bad.var = SweepVar::users;
    bad.grid = {2.5};
    REQUIRE_THROWS_AS(execute_sweep(bad), config_error);

    bad = spec;
    bad.var = SweepVar::region;
    bad.grid = {0.0};
    REQUIRE_THROWS_AS(execute_sweep(bad), config_error);
}

TEST_CASE("single-point single-trial sweeps match the run summary")
{
    RunConfig rc;
    rc.scenario = smoke_scenario();
    rc.mode = SchemeMode::fpa_cp;
    RunResult res = run(rc);

    ExperimentSpec spec;
    spec.base.scenario = smoke_scenario();
    spec.modes = {SchemeMode::fpa_cp};
    spec.var = SweepVar::gamma;
    spec.grid = {rc.scenario.gamma};
    spec.trials = 1;
    SweepArtifacts art = execute_sweep(spec);

    REQUIRE(art.cells.size() == 1);
    REQUIRE(art.cells[0].mean_omega == res.omega); // identical computation path
    REQUIRE(art.cells[0].mean_pd == res.p_d);
    REQUIRE(art.cells[0].se_omega == 0.0);
    REQUIRE(art.cells[0].feasible_rate == 1.0);
}

TEST_CASE("infeasible trials contribute zero to sweep means")
{
    ExperimentSpec spec;
    spec.base.scenario = smoke_scenario();
    spec.modes = {SchemeMode::fpa_cp};
    spec.var = SweepVar::gamma;
    spec.grid = {1e6}; // no beamformer can reach this target
    spec.trials = 2;
    SweepArtifacts art = execute_sweep(spec);
    REQUIRE(art.cells[0].mean_omega == 0.0);
    REQUIRE(art.cells[0].feasible_rate == 0.0);
    REQUIRE(art.cells[0].mean_pd == spec.base.scenario.p_fa); // null-only detections
}

TEST_CASE("CSV fields are quoted per RFC 4180")
{
    REQUIRE(csv_field("plain") == "plain");
    REQUIRE(csv_field("with,comma") == "\"with,comma\"");
    REQUIRE(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    REQUIRE(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("convention flags parse and resolve")
{
    REQUIRE(parse_convention("paper") == ConventionChoice::paper);
    REQUIRE(parse_convention("half") == ConventionChoice::half);
    REQUIRE(parse_convention("auto") == ConventionChoice::automatic);
    REQUIRE_THROWS_AS(parse_convention("exact"), config_error);

    ScenarioConfig cfg = smoke_scenario();
    REQUIRE(resolve_convention(ConventionChoice::paper, cfg) == Convention::paper);
    REQUIRE(resolve_convention(ConventionChoice::half, cfg) == Convention::half_scaled);
    REQUIRE(resolve_convention(ConventionChoice::automatic, cfg, 20000) ==
            Convention::half_scaled);
}

TEST_CASE("calibration reports are deterministic and conclusive")
{
    ScenarioConfig cfg = smoke_scenario();
    CalibrationArtifacts a = execute_calibration(cfg, 20000);
    CalibrationArtifacts b = execute_calibration(cfg, 20000);
    REQUIRE(a.text == b.text);
    REQUIRE(a.report.ok);
    REQUIRE(a.report.selected == Convention::half_scaled);
    REQUIRE(a.report.half_consistent);
    REQUIRE_FALSE(a.report.paper_consistent);
    REQUIRE(a.text.find("selected: half-scaled") != std::string::npos);
    REQUIRE(a.text.find("rate_paper") != std::string::npos);
    REQUIRE(a.text.find("rate_half_scaled") != std::string::npos);

    REQUIRE_THROWS_AS(execute_calibration(cfg, 0), config_error);
}
