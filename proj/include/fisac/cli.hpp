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

#ifndef FISAC_CLI_HPP
#define FISAC_CLI_HPP

// Experiment engine underneath the command-line front end: sweep-grid
// parsing, paired-seed Monte Carlo aggregation, CSV emission, and detector
// calibration reports.  Everything returns structs and strings so behavior
// is testable without spawning processes; the binary in tools/ only parses
// flags and writes files.

#include "fisac/optimizer.hpp"

#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fisac
{

// ---------------------------------------------------------------------------
// CSV primitives.  Numbers are printed with %.17g so values round-trip
// exactly and repeated runs with the same seed emit bitwise-identical files.

inline std::string csv_num(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// ---------------------------------------------------------------------------
// Single run: convergence trace plus a one-row summary.

inline std::string trace_csv(const RunResult &res)
{
    int k = res.sinr_trace.empty() ? 0 : int(res.sinr_trace.front().size());
    std::ostringstream os;
    os << "iter,omega,nu,rho";
    for (int i = 1; i <= k; ++i)
        os << ",sinr_" << i;
    os << "\n";
    for (std::size_t i = 0; i < res.rho_trace.size(); ++i)
    {
        os << (i + 1) << ',' << csv_num(res.omega_trace[i]) << ',' << csv_num(res.nu_trace[i])
           << ',' << csv_num(res.rho_trace[i]);
        for (int j = 0; j < k; ++j)
            os << ',' << csv_num(res.sinr_trace[i](j));
        os << "\n";
    }
    return os.str();
}

inline std::string summary_csv(const RunConfig &rc, const RunResult &res)
{
    std::ostringstream os;
    os << "scheme,seed,iterations,omega,nu,rho,eta,p_d,feasible";
    for (int i = 1; i <= res.sinr.size(); ++i)
        os << ",sinr_" << i;
    os << "\n";
    os << scheme_name(rc.mode) << ',' << rc.scenario.seed << ',' << res.iterations << ','
       << csv_num(res.omega) << ',' << csv_num(res.nu) << ',' << csv_num(res.rho) << ','
       << csv_num(res.eta) << ',' << csv_num(res.p_d) << ',' << (res.feasible ? 1 : 0);
    for (int i = 0; i < res.sinr.size(); ++i)
        os << ',' << csv_num(res.sinr(i));
    os << "\n";
    return os.str();
}

// Verdict-to-shell mapping: success, or the distinguished infeasible code.
inline int run_exit_code(const RunResult &res) { return res.feasible ? 0 : 2; }

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepVar
{
    gamma,  // per-user SINR target, linear scale
    users,  // communication user count
    region  // transmit aperture side length, wavelengths
};

inline const char *sweep_var_name(SweepVar v)
{
    switch (v)
    {
    case SweepVar::gamma: return "gamma";
    case SweepVar::users: return "k";
    default: return "region";
    }
}

// Grid syntax: `name=v1,v2,...` with name in {gamma, k, region}.
inline std::pair<SweepVar, std::vector<double>> parse_sweep(const std::string &text)
{
    std::size_t eq = text.find('=');
    if (eq == std::string::npos)
        throw config_error("sweep: expected 'name=v1,v2,...', got '" + text + "'");
    std::string name = text.substr(0, eq);
    SweepVar var;
    if (name == "gamma")
        var = SweepVar::gamma;
    else if (name == "k")
        var = SweepVar::users;
    else if (name == "region")
        var = SweepVar::region;
    else
        throw config_error("sweep: unknown variable '" + name + "' (use gamma, k, or region)");

    std::vector<double> grid;
    std::string rest = text.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size())
    {
        std::size_t comma = rest.find(',', pos);
        std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        if (tok.empty())
            throw config_error("sweep: empty value in '" + text + "'");
        try
        {
            std::size_t used = 0;
            grid.push_back(std::stod(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        }
        catch (const std::exception &)
        {
            throw config_error("sweep: expected a number, got '" + tok + "'");
        }
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    if (grid.empty())
        throw config_error("sweep: the grid must be nonempty");
    return {var, grid};
}

inline std::vector<SchemeMode> all_schemes()
{
    return {SchemeMode::ds_fas, SchemeMode::t_fas, SchemeMode::r_fas, SchemeMode::fpa_ula,
            SchemeMode::fpa_cp};
}

// One Monte Carlo experiment: a scenario template, the schemes to compare,
// one swept variable, and a paired-seed trial budget.  Trial i of every
// (value, mode) pair runs on the ChannelSet drawn from seed base+i, so mode
// comparisons are within-channel.
struct ExperimentSpec
{
    RunConfig base;
    std::vector<SchemeMode> modes = all_schemes();
    SweepVar var = SweepVar::gamma;
    std::vector<double> grid;
    int trials = 1;
    std::string out_path = "sweep.csv";

    void validate() const
    {
        if (trials < 1)
            throw config_error("sweep: the trial count must be >= 1");
        if (grid.empty())
            throw config_error("sweep: the grid must be nonempty");
        if (modes.empty())
            throw config_error("sweep: the mode list must be nonempty");
        for (double v : grid)
        {
            if (var == SweepVar::gamma && v < 0.0)
                throw config_error("sweep: SINR targets must be >= 0");
            if (var == SweepVar::users && (v < 0.0 || v != std::floor(v)))
                throw config_error("sweep: user counts must be nonnegative integers");
            if (var == SweepVar::region && !(v > 0.0))
                throw config_error("sweep: region sides must be positive");
        }
    }
};

struct SweepCell
{
    double value = 0.0;
    SchemeMode mode = SchemeMode::ds_fas;
    int trials = 0;
    double mean_omega = 0.0; // infeasible trials enter as zero
    double se_omega = 0.0;
    double mean_pd = 0.0;
    double se_pd = 0.0;
    double feasible_rate = 0.0;
};

struct SweepArtifacts
{
    std::vector<SweepCell> cells; // ordered by (grid position, mode position)
    std::string csv;
};

namespace cli_detail
{

inline std::pair<double, double> mean_se(const std::vector<double> &x)
{
    double n = double(x.size());
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= n;
    if (x.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline void apply_sweep_value(SweepVar var, double value, ScenarioConfig &cfg)
{
    switch (var)
    {
    case SweepVar::gamma: cfg.gamma = value; break;
    case SweepVar::users: cfg.k = int(value); break;
    case SweepVar::region: cfg.region_tx_lambda = value; break;
    }
}

} // namespace cli_detail

inline SweepArtifacts execute_sweep(const ExperimentSpec &spec)
{
    spec.validate();
    SweepArtifacts out;
    std::ostringstream os;
    os << "sweep,value,mode,trials,mean_omega,se_omega,mean_pd,se_pd,feasible_rate\n";

    const std::size_t nm = spec.modes.size();
    for (double value : spec.grid)
    {
        std::vector<std::vector<double>> omegas(nm), pds(nm);
        std::vector<int> feas(nm, 0);
        for (int trial = 0; trial < spec.trials; ++trial)
        {
            RunConfig rc = spec.base;
            cli_detail::apply_sweep_value(spec.var, value, rc.scenario);
            rc.scenario.seed = spec.base.scenario.seed + std::uint64_t(trial);
            Rng rng(rc.scenario.seed);
            ChannelSet ch =
                generate_channels(generate_topology(rc.scenario, rng), rc.scenario, rng);
            SensingWeights wts = rc.genie_psi
                                     ? genie_weights(ch, rc.scenario.t_snapshots, rng)
                                     : expected_weights(ch, rc.scenario.t_snapshots);
            for (std::size_t m = 0; m < nm; ++m)
            {
                rc.mode = spec.modes[m];
                RunResult res = optimize(ch, wts, rc);
                omegas[m].push_back(res.feasible ? res.omega : 0.0);
                pds[m].push_back(res.p_d);
                feas[m] += res.feasible ? 1 : 0;
            }
        }
        for (std::size_t m = 0; m < nm; ++m)
        {
            SweepCell cell;
            cell.value = value;
            cell.mode = spec.modes[m];
            cell.trials = spec.trials;
            auto [om, ose] = cli_detail::mean_se(omegas[m]);
            auto [pm, pse] = cli_detail::mean_se(pds[m]);
            cell.mean_omega = om;
            cell.se_omega = ose;
            cell.mean_pd = pm;
            cell.se_pd = pse;
            cell.feasible_rate = double(feas[m]) / double(spec.trials);
            out.cells.push_back(cell);
            os << sweep_var_name(spec.var) << ',' << csv_num(cell.value) << ','
               << scheme_name(cell.mode) << ',' << cell.trials << ','
               << csv_num(cell.mean_omega) << ',' << csv_num(cell.se_omega) << ','
               << csv_num(cell.mean_pd) << ',' << csv_num(cell.se_pd) << ','
               << csv_num(cell.feasible_rate) << "\n";
        }
    }
    out.csv = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// Detector calibration.

struct CalibrationArtifacts
{
    CalibrationReport report;
    DetectorConfig detector;
    long draws = 0;
    std::uint64_t seed = 0;
    std::string text;
};

// Empirical adjudication of the statistic scaling on pure-noise draws.  The
// transmit sequence uses uniform per-transmitter power on the scheme's
// initial layout; receive steering is a seeded unit-modulus draw, which the
// sensing statistic is invariant to.
inline CalibrationArtifacts execute_calibration(const ScenarioConfig &cfg, long draws,
                                                SchemeMode mode = SchemeMode::fpa_cp)
{
    if (draws < 1)
        throw config_error("calibrate: the draw count must be >= 1");
    Rng rng(cfg.seed);
    ChannelSet ch = generate_channels(generate_topology(cfg, rng), cfg, rng);
    AntennaLayout lay = init_layout(mode, cfg);

    SensingSimulator sim;
    int dim = ch.n * ch.m_t;
    sim.r_sqrt = std::sqrt(ch.p_t / double(ch.n)) * Mat::Identity(dim, dim);
    for (int t = 0; t < ch.m_t; ++t)
        sim.tx_steer.push_back(steering_vector(ch.sensing_wv.col(t), lay.tx[std::size_t(t)]));
    for (int r = 0; r < ch.m_r; ++r)
    {
        Vec a(ch.n);
        for (int i = 0; i < ch.n; ++i)
            a(i) = std::polar(1.0, two_pi * rng.uniform());
        sim.rx_steer.push_back(a);
    }
    sim.beta = ch.beta;
    sim.noise = ch.noise_rx;
    sim.t_snapshots = cfg.t_snapshots;

    CalibrationArtifacts out;
    out.detector.q = ch.m_r * ch.m_t;
    out.detector.p_fa = cfg.p_fa;
    out.detector.sigma2 = ch.noise_rx;
    out.draws = draws;
    out.seed = cfg.seed;
    out.report = calibrate_convention(out.detector, sim, draws, substream_seed(cfg.seed, 0xca), 1);
    out.detector.convention = out.report.selected;

    std::ostringstream os;
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    os << "glr calibration report\n"
       << "draws: " << out.draws << "\n"
       << "seed: " << out.seed << "\n"
       << "q: " << out.detector.q << "\n"
       << "target_p_fa: " << csv_num(out.detector.p_fa) << "\n"
       << "band_3sigma: " << csv_num(out.report.band) << "\n"
       << "rate_paper: " << csv_num(out.report.rate_paper) << "\n"
       << "rate_half_scaled: " << csv_num(out.report.rate_half) << "\n"
       << "paper_consistent: " << yn(out.report.paper_consistent) << "\n"
       << "half_scaled_consistent: " << yn(out.report.half_consistent) << "\n"
       << "selected: " << convention_name(out.report.selected) << "\n"
       << "ok: " << yn(out.report.ok) << "\n";
    out.text = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// Convention flag: an explicit scaling, or empirical selection.

enum class ConventionChoice
{
    automatic,
    paper,
    half
};

inline ConventionChoice parse_convention(const std::string &s)
{
    if (s == "auto")
        return ConventionChoice::automatic;
    if (s == "paper")
        return ConventionChoice::paper;
    if (s == "half")
        return ConventionChoice::half;
    throw config_error("convention: expected auto, paper, or half, got '" + s + "'");
}

inline Convention resolve_convention(ConventionChoice choice, const ScenarioConfig &cfg,
                                     long draws = 20000)
{
    switch (choice)
    {
    case ConventionChoice::paper: return Convention::paper;
    case ConventionChoice::half: return Convention::half_scaled;
    default: return execute_calibration(cfg, draws).report.selected;
    }
}

} // namespace fisac

#endif // FISAC_CLI_HPP
