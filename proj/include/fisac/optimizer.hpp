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

#ifndef FISAC_OPTIMIZER_HPP
#define FISAC_OPTIMIZER_HPP

// Alternating optimization over beamformers, transmit element positions,
// and receive element positions, plus the fixed-antenna baseline schemes.
// Each pass re-solves the covariance design, then lets the enabled position
// subproblems ascend the shared penalty objective rho = omega - eta * nu,
// so the trace is monotone up to solver tolerance.

#include "fisac/beamforming.hpp"
#include "fisac/detection.hpp"
#include "fisac/rxpos.hpp"
#include "fisac/scenario.hpp"
#include "fisac/txpos.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fisac
{

// Which apertures may move and how the transmit elements start out.
enum class SchemeMode
{
    ds_fas,  // both sides movable
    t_fas,   // transmit side only
    r_fas,   // receive side only
    fpa_ula, // fixed uniform linear arrays
    fpa_cp,  // fixed packed arrays
};

inline const char *scheme_name(SchemeMode m)
{
    switch (m)
    {
    case SchemeMode::ds_fas: return "ds-fas";
    case SchemeMode::t_fas: return "t-fas";
    case SchemeMode::r_fas: return "r-fas";
    case SchemeMode::fpa_ula: return "fpa-ula";
    default: return "fpa-cp";
    }
}

inline SchemeMode parse_scheme(const std::string &name)
{
    for (SchemeMode m : {SchemeMode::ds_fas, SchemeMode::t_fas, SchemeMode::r_fas,
                         SchemeMode::fpa_ula, SchemeMode::fpa_cp})
        if (name == scheme_name(m))
            return m;
    throw config_error("unknown scheme '" + name + "'");
}

inline bool moves_tx(SchemeMode m) { return m == SchemeMode::ds_fas || m == SchemeMode::t_fas; }
inline bool moves_rx(SchemeMode m) { return m == SchemeMode::ds_fas || m == SchemeMode::r_fas; }

namespace optimizer_detail
{

// Greedy max-min placement on a fixed grid, refined by coordinate-wise
// re-placement.  Deterministic; good enough as a packing seed because the
// penalty mechanism tolerates imperfect starting layouts.
inline RMat packed_positions(const Rect &region, int n, double min_sep)
{
    if (n < 1)
        throw config_error("layout: element count must be positive");
    RMat pos(2, n);
    if (n == 1)
    {
        pos.col(0) = Vec2(0.0, 0.0);
        return pos;
    }

    constexpr int grid = 41;
    std::vector<Vec2> points;
    points.reserve(grid * grid);
    for (int iy = 0; iy < grid; ++iy)
        for (int ix = 0; ix < grid; ++ix)
            points.emplace_back(-region.half_x + 2.0 * region.half_x * ix / (grid - 1),
                                -region.half_y + 2.0 * region.half_y * iy / (grid - 1));

    std::vector<Vec2> chosen;
    chosen.emplace_back(-region.half_x, -region.half_y);
    while (int(chosen.size()) < n)
    {
        double best = -1.0;
        Vec2 pick = points.front();
        for (const Vec2 &cand : points)
        {
            double dist = std::numeric_limits<double>::infinity();
            for (const Vec2 &c : chosen)
                dist = std::min(dist, (cand - c).norm());
            if (dist > best + 1e-12)
            {
                best = dist;
                pick = cand;
            }
        }
        chosen.push_back(pick);
    }

    for (int pass = 0; pass < 20; ++pass)
    {
        bool moved = false;
        for (int i = 0; i < n; ++i)
        {
            auto clearance = [&](const Vec2 &cand) {
                double dist = std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j)
                    if (j != i)
                        dist = std::min(dist, (cand - chosen[std::size_t(j)]).norm());
                return dist;
            };
            double cur = clearance(chosen[std::size_t(i)]);
            for (const Vec2 &cand : points)
                if (clearance(cand) > cur + 1e-12)
                {
                    cur = clearance(cand);
                    chosen[std::size_t(i)] = cand;
                    moved = true;
                }
        }
        if (!moved)
            break;
    }

    for (int i = 0; i < n; ++i)
    {
        for (int j = i + 1; j < n; ++j)
            if ((chosen[std::size_t(i)] - chosen[std::size_t(j)]).norm() < min_sep)
                throw config_error("layout: region cannot hold the requested elements at the "
                                   "minimum separation");
        pos.col(i) = chosen[std::size_t(i)];
    }
    return pos;
}

inline RMat ula_positions(const Rect &region, int n, double spacing)
{
    RMat pos(2, n);
    for (int i = 0; i < n; ++i)
    {
        pos(0, i) = (double(i) - 0.5 * double(n - 1)) * spacing;
        pos(1, i) = 0.0;
    }
    if (n > 0 && std::abs(pos(0, 0)) > region.half_x + 1e-12)
        throw config_error("layout: the line array does not fit the region");
    return pos;
}

} // namespace optimizer_detail

// Starting placement per scheme: packed or line transmit arrays, every user
// element at the center of its region.
inline AntennaLayout init_layout(SchemeMode mode, const ScenarioConfig &cfg)
{
    AntennaLayout lay;
    lay.tx_region = {0.5 * cfg.region_tx_lambda, 0.5 * cfg.region_tx_lambda};
    lay.ue_region = {0.5 * cfg.region_rx_lambda, 0.5 * cfg.region_rx_lambda};
    RMat pos = mode == SchemeMode::fpa_ula
                   ? optimizer_detail::ula_positions(lay.tx_region, cfg.n, 0.5)
                   : optimizer_detail::packed_positions(lay.tx_region, cfg.n, 0.5);
    for (int t = 0; t < cfg.m_t; ++t)
        lay.tx.push_back(pos);
    for (int k = 0; k < cfg.k; ++k)
        lay.ue.emplace_back(0.0, 0.0);
    return lay;
}

// Worst remaining slack of every constraint family, recomputed from scratch
// on a final solution.  Positive numbers mean satisfied with room.
struct ConstraintReport
{
    double sinr_slack = 0.0;      // min_k (sinr_k - gamma_k) / max(1, gamma_k)
    double power_slack = 0.0;     // min_t (budget - used) / budget
    double tx_region_slack = 0.0; // clearance to the transmit rectangle
    double ue_region_slack = 0.0; // clearance to the receive rectangle
    double spacing_slack = 0.0;   // min pairwise distance minus the floor
    double nu = 0.0;              // slack the margins would still need
    bool feasible = false;
};

inline ConstraintReport verify_constraints(const ChannelSet &ch, const AntennaLayout &lay,
                                           const TransmitCovariances &cov, const RVec &gamma,
                                           double noise, double power, double min_sep = 0.5)
{
    if (gamma.size() != ch.k)
        throw contract_error("verify_constraints: one SINR target per user required");
    ConstraintReport rep;
    double inf = std::numeric_limits<double>::infinity();
    rep.sinr_slack = inf;
    rep.power_slack = inf;
    rep.tx_region_slack = inf;
    rep.ue_region_slack = inf;
    rep.spacing_slack = inf;

    for (int k = 0; k < ch.k; ++k)
    {
        Vec h = user_channel(ch, lay, k);
        double s = sinr_value(h, cov, k, noise);
        rep.sinr_slack = std::min(rep.sinr_slack, (s - gamma(k)) / std::max(1.0, gamma(k)));
        rep.nu = std::max(rep.nu, -zeta_value(h, cov, k, gamma(k), noise) / noise);
    }
    for (int t = 0; t < ch.m_t; ++t)
    {
        rep.power_slack = std::min(rep.power_slack, (power - tx_power(cov.total, t, ch.n)) / power);
        const RMat &pos = lay.tx[std::size_t(t)];
        for (int i = 0; i < ch.n; ++i)
        {
            rep.tx_region_slack =
                std::min({rep.tx_region_slack, lay.tx_region.half_x - std::abs(pos(0, i)),
                          lay.tx_region.half_y - std::abs(pos(1, i))});
            for (int j = i + 1; j < ch.n; ++j)
                rep.spacing_slack = std::min(
                    rep.spacing_slack, (Vec2(pos.col(i)) - Vec2(pos.col(j))).norm() - min_sep);
        }
    }
    for (const Vec2 &v : lay.ue)
        rep.ue_region_slack = std::min({rep.ue_region_slack, lay.ue_region.half_x - std::abs(v.x()),
                                        lay.ue_region.half_y - std::abs(v.y())});

    rep.feasible = rep.sinr_slack >= -1e-6 && rep.power_slack >= -1e-6 &&
                   rep.tx_region_slack >= -1e-9 && rep.ue_region_slack >= -1e-9 &&
                   rep.spacing_slack >= -1e-9;
    return rep;
}

struct RunConfig
{
    ScenarioConfig scenario;
    SchemeMode mode = SchemeMode::ds_fas;
    double epsilon = 1e-2;   // fractional-increase stopping threshold
    int max_iterations = 100;
    Convention convention = Convention::half_scaled;
    bool genie_psi = false;  // sensing weights from the realized reflections
    solver_options conic{1e-8, 200, 0.99, true};
};

struct RunResult
{
    std::vector<double> omega_trace;
    std::vector<double> nu_trace;
    std::vector<double> rho_trace;
    std::vector<RVec> sinr_trace; // per-user SINR at each covariance solve
    AntennaLayout layout;
    TransmitCovariances cov; // extracted covariances (rank-one users + residual)
    std::vector<Vec> w;
    Mat r_sensing;
    RVec sinr;               // per user, on the extracted beamformers
    double omega = 0.0;
    double nu = 0.0;
    double rho = 0.0;
    double eta = 0.0;
    double p_d = 0.0;
    bool feasible = false;
    int iterations = 0;
    int tx_moves = 0;
    int tx_failures = 0;
    double wall_seconds = 0.0;
    ConstraintReport constraints;
};

namespace optimizer_detail
{

inline void validate(const RunConfig &rc)
{
    if (!(rc.epsilon > 0.0))
        throw config_error("optimizer: the stopping threshold must be positive");
    if (rc.max_iterations < 1)
        throw config_error("optimizer: at least one iteration is required");
}

} // namespace optimizer_detail

// Alternating optimization on one synthesized scenario.  The penalty weight
// is chosen by the first covariance solve and then frozen so that every
// later step ascends the same objective.
inline RunResult optimize(const ChannelSet &ch, const SensingWeights &wts, const RunConfig &rc)
{
    optimizer_detail::validate(rc);
    auto t0 = std::chrono::steady_clock::now();

    RunResult res;
    res.layout = init_layout(rc.mode, rc.scenario);

    BeamformingConfig bcfg;
    bcfg.m_t = ch.m_t;
    bcfg.power = ch.p_t;
    bcfg.gamma = RVec::Constant(ch.k, rc.scenario.gamma);
    bcfg.noise = RVec::Constant(ch.k, ch.noise_ue);
    bcfg.eta = 0.0; // automatic on the first pass, frozen afterwards
    bcfg.conic = rc.conic;

    TxposConfig tcfg;
    tcfg.gamma = bcfg.gamma;
    tcfg.noise = bcfg.noise;
    tcfg.conic = rc.conic;

    BeamformingResult bres;
    double rho_prev = 0.0;
    for (int it = 0; it < rc.max_iterations; ++it)
    {
        bres = design_beamformers(ch, res.layout, wts, bcfg);
        if (it == 0)
        {
            res.eta = bres.eta;
            bcfg.eta = bres.eta;
            tcfg.eta = bres.eta;
        }

        TransmitCovariances cov;
        cov.per_user = bres.r_user;
        cov.total = bres.r_total;

        res.omega = bres.omega;
        res.nu = bres.nu;
        res.rho = bres.omega - res.eta * bres.nu;
        res.omega_trace.push_back(res.omega);
        res.nu_trace.push_back(res.nu);
        res.rho_trace.push_back(res.rho);
        RVec snapshot(ch.k);
        for (int k = 0; k < ch.k; ++k)
            snapshot(k) = sinr_value(user_channel(ch, res.layout, k), cov, k, ch.noise_ue);
        res.sinr_trace.push_back(std::move(snapshot));
        ++res.iterations;

        if (it > 0 && res.rho - rho_prev <= rc.epsilon * std::max(std::abs(rho_prev), 1e-12))
            break;
        rho_prev = res.rho;
        if (res.iterations == rc.max_iterations)
            break; // cap reached: skip the position pass nothing would consume

        if (moves_tx(rc.mode))
        {
            SweepReport sweep = sweep_positions(ch, res.layout, cov, wts, tcfg);
            res.tx_moves += sweep.accepted;
            res.tx_failures += sweep.failed;
        }
        if (moves_rx(rc.mode))
            for (int k = 0; k < ch.k; ++k)
            {
                ReceiveQuadratic rq = receive_quadratic(ch, res.layout, cov, k, ch.noise_ue);
                res.layout.ue[std::size_t(k)] =
                    ga_optimize(rq, res.layout.ue_region, res.layout.ue[std::size_t(k)]).v;
            }
    }

    // Final solution on the extracted beamformers.
    res.w = bres.w;
    res.r_sensing = bres.r_sensing;
    res.cov.per_user.clear();
    res.cov.total = bres.r_sensing.rows() > 0
                        ? bres.r_sensing
                        : Mat::Zero(ch.n * ch.m_t, ch.n * ch.m_t).eval();
    for (const Vec &w : res.w)
    {
        res.cov.per_user.push_back(w * w.adjoint());
        res.cov.total += res.cov.per_user.back();
    }

    res.sinr = RVec::Zero(ch.k);
    bool ok = true;
    for (int k = 0; k < ch.k; ++k)
    {
        res.sinr(k) = sinr_value(user_channel(ch, res.layout, k), res.cov, k, ch.noise_ue);
        ok = ok && res.sinr(k) >= rc.scenario.gamma * (1.0 - 1e-6);
    }
    res.feasible = ok;
    res.constraints =
        verify_constraints(ch, res.layout, res.cov, bcfg.gamma, ch.noise_ue, ch.p_t);

    DetectorConfig det;
    det.q = ch.m_r * ch.m_t;
    det.p_fa = rc.scenario.p_fa;
    det.sigma2 = ch.noise_rx;
    det.convention = rc.convention;
    res.p_d = detection_probability(det, res.feasible ? res.omega : 0.0);

    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Convenience wrapper: synthesize the scenario from its seed, build the
// sensing weights, and optimize.
inline RunResult run(const RunConfig &rc)
{
    Rng rng(rc.scenario.seed);
    ChannelSet ch = generate_channels(generate_topology(rc.scenario, rng), rc.scenario, rng);
    SensingWeights wts = rc.genie_psi ? genie_weights(ch, rc.scenario.t_snapshots, rng)
                                      : expected_weights(ch, rc.scenario.t_snapshots);
    return optimize(ch, wts, rc);
}

} // namespace fisac

#endif
