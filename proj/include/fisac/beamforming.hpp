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

#ifndef FISAC_BEAMFORMING_HPP
#define FISAC_BEAMFORMING_HPP

#include "fisac/conic.hpp"
#include "fisac/physics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

// Transmit covariance design by semidefinite relaxation.  The design
// maximizes the sensing metric tr(Q R) minus a penalty eta * nu on a shared
// feasibility slack nu >= 0, subject to per-user SINR margins
// zeta_k + nu >= 0 (margins pre-divided by the user noise power, so they are
// dimensionless), per-transmitter power budgets, and covariance constraints
// R_k >= 0, R - sum_k R_k >= 0.  The residual R - sum_k R_k is the sensing
// component; rank-one downlink beamformers are recovered from the relaxed
// optimum without losing any of the constrained quantities.

namespace fisac
{

struct BeamformingConfig
{
    int m_t = 1;       // transmitter count (the stacked dimension is m_t * n)
    double power = 1.0; // per-transmitter budget (watts)
    RVec gamma;         // per-user SINR targets, linear scale, length K
    RVec noise;         // per-user noise powers (watts), length K
    double eta = 0.0;   // penalty weight; <= 0 selects it automatically
    solver_options conic{1e-8, 200, 0.99, true};
    double nu_tol() const
    {
        return 1e-6 * (1.0 + (gamma.size() > 0 ? gamma.maxCoeff() : 0.0));
    }
};

struct SensingBeam
{
    double power = 0.0;
    Vec beam; // unit norm
};

struct Extraction
{
    std::vector<Vec> w; // rank-one downlink beamformers, stacked length N*M_t
    Mat r_sensing;      // residual covariance after removing the beams
};

struct BeamformingResult
{
    // Relaxed solution.
    std::vector<Mat> r_user;
    Mat r_total;
    double nu = 0.0;
    double eta = 0.0; // penalty weight actually used
    double omega = 0.0;
    RVec zeta; // dimensionless per-user margins of the relaxed covariances

    // Rank-one reconstruction (filled by design_beamformers).
    std::vector<Vec> w;
    Mat r_sensing;
    std::vector<SensingBeam> beams;
    double omega_extracted = 0.0;
    RVec zeta_extracted;
    RVec tx_power_used;

    // Solver diagnostics of the final penalized solve.
    bool certified = false;
    double primal_res = 0.0;
    double dual_res = 0.0;
    double gap = 0.0;
    int iterations = 0;
    int eta_doublings = 0;
};

namespace beamforming_detail
{

inline void validate(const std::vector<Vec> &h, const Mat &q, const BeamformingConfig &cfg)
{
    if (q.rows() != q.cols() || q.rows() < 1)
        throw config_error("beamforming: sensing matrix must be square and nonempty");
    if (cfg.m_t < 1 || q.rows() % cfg.m_t != 0)
        throw config_error("beamforming: transmitter count must divide the stacked dimension");
    if (!(cfg.power > 0.0))
        throw config_error("beamforming: per-transmitter power budget must be positive");
    const int k = int(h.size());
    if (cfg.gamma.size() != k || cfg.noise.size() != k)
        throw config_error("beamforming: gamma and noise must have one entry per user");
    for (int i = 0; i < k; ++i)
    {
        if (cfg.gamma(i) < 0.0)
            throw config_error("beamforming: SINR targets must be nonnegative");
        if (!(cfg.noise(i) > 0.0))
            throw config_error("beamforming: user noise powers must be positive");
        if (h[std::size_t(i)].size() != q.rows())
            throw config_error("beamforming: channel length does not match the sensing matrix");
    }
}

// svec of the real embedding of the per-transmitter block selector.
inline RVec embedded_selector(int m_t, int n, int t)
{
    const int nm = m_t * n;
    RMat d = RMat::Zero(2 * nm, 2 * nm);
    for (int e = 0; e < n; ++e)
    {
        d(t * n + e, t * n + e) = 1.0;
        d(nm + t * n + e, nm + t * n + e) = 1.0;
    }
    return svec(d);
}

struct Assembly
{
    conic_problem prob;
    int k = 0;
    int nm = 0;
    Eigen::Index block_len = 0; // svec length of one embedded covariance
    Eigen::Index slack_at = 0;  // offset of [nu, s_1..s_K, p_1..p_Mt]
    double obj_scale = 1.0;     // objective divided by this before solving
};

// Variables: [Z | R_1 .. R_K | nu, s_1..s_K, p_1..p_Mt], each covariance an
// svec-packed real embedding of order 2*N*M_t.  Rows: K margin equalities
// (slack s_k) followed by M_t power equalities (slack p_t).
inline Assembly assemble(const std::vector<Vec> &h, const Mat &q_sym,
                         const BeamformingConfig &cfg, double eta)
{
    Assembly as;
    as.k = int(h.size());
    as.nm = int(q_sym.rows());
    const int n = as.nm / cfg.m_t;
    const int order = 2 * as.nm;
    as.block_len = Eigen::Index(order) * (order + 1) / 2;
    const Eigen::Index nblocks = as.k + 1;
    as.slack_at = nblocks * as.block_len;
    const Eigen::Index nvars = as.slack_at + 1 + as.k + cfg.m_t;
    const Eigen::Index rows = as.k + cfg.m_t;

    as.obj_scale = std::max(q_sym.cwiseAbs().maxCoeff(), 0.0);
    if (!(as.obj_scale > 0.0))
        as.obj_scale = 1.0;

    conic_problem &p = as.prob;
    for (Eigen::Index i = 0; i < nblocks; ++i)
        p.cones.push_back({cone_kind::psd, order});
    p.cones.push_back({cone_kind::nonneg, int(1 + as.k + cfg.m_t)});

    p.c = RVec::Zero(nvars);
    RVec q_vec = 0.5 * svec(complex_embedding(q_sym / as.obj_scale));
    for (Eigen::Index i = 0; i < nblocks; ++i)
        p.c.segment(i * as.block_len, as.block_len) = -q_vec;
    p.c(as.slack_at) = eta / as.obj_scale;

    p.a = RMat::Zero(rows, nvars);
    p.b = RVec::Zero(rows);
    for (int u = 0; u < as.k; ++u)
    {
        const Vec &hu = h[std::size_t(u)];
        Mat big = hu * hu.adjoint();
        RVec h_vec = 0.5 * svec(complex_embedding(big)) / cfg.noise(u);
        double g = cfg.gamma(u);
        p.a.row(u).segment(0, as.block_len) = -g * h_vec.transpose();
        for (int j = 0; j < as.k; ++j)
        {
            double coeff = (j == u) ? 1.0 : -g;
            p.a.row(u).segment((1 + j) * as.block_len, as.block_len) =
                coeff * h_vec.transpose();
        }
        p.a(u, as.slack_at) = 1.0;          // + nu
        p.a(u, as.slack_at + 1 + u) = -1.0; // - s_u
        p.b(u) = g;
    }
    for (int t = 0; t < cfg.m_t; ++t)
    {
        RVec d_vec = 0.5 * embedded_selector(cfg.m_t, n, t) / cfg.power;
        for (Eigen::Index i = 0; i < nblocks; ++i)
            p.a.row(as.k + t).segment(i * as.block_len, as.block_len) = d_vec.transpose();
        p.a(as.k + t, as.slack_at + 1 + as.k + t) = 1.0;
        p.b(as.k + t) = 1.0;
    }
    // Equalities are invariant under row scaling, but the solver's stopping
    // test is relative to these data: a margin row whose coefficients dwarf
    // its right-hand side (strong channel over weak noise) would demand a
    // scaled-space residual below machine precision.  Normalize each row to
    // a unit leading coefficient so the test measures what is achievable.
    for (Eigen::Index i = 0; i < rows; ++i)
    {
        double s = p.a.row(i).cwiseAbs().maxCoeff();
        if (s > 1.0)
        {
            p.a.row(i) /= s;
            p.b(i) /= s;
        }
    }
    return as;
}

inline Mat recover_block(const RVec &x, const Assembly &as, Eigen::Index block)
{
    Mat m = embedded_to_complex(smat(RVec(x.segment(block * as.block_len, as.block_len))));
    return hermitian_part(m);
}

inline conic_solution run_solver(const Assembly &as, const BeamformingConfig &cfg)
{
    conic_solution s = solve(as.prob, cfg.conic);
    if (s.status == solve_status::optimal)
        return s;
    double err = std::max({s.primal_res, s.dual_res, s.gap});
    if (s.status == solve_status::max_iterations && err <= 1e-5)
        return s;
    throw numeric_error(std::string("beamforming: conic solve ended ") + status_name(s.status) +
                        " (primal " + fmt_double(s.primal_res) + ", dual " +
                        fmt_double(s.dual_res) + ", gap " + fmt_double(s.gap) + ")");
}

// Feasibility probe: same constraint set, objective min nu.  Returns the
// smallest shared slack that satisfies every margin row.
inline double min_slack(const std::vector<Vec> &h, const Mat &q_sym, const BeamformingConfig &cfg)
{
    Assembly as = assemble(h, q_sym, cfg, 1.0);
    as.prob.c.setZero();
    as.prob.c(as.slack_at) = 1.0;
    conic_solution s = run_solver(as, cfg);
    return std::max(0.0, s.x(as.slack_at));
}

} // namespace beamforming_detail

// Penalty weight heuristic: one hundred times the sensing metric of the
// uniform-power covariance (power/n on every element), with a positive floor
// for an all-zero metric.
inline double default_penalty(const Mat &q, double power, int m_t)
{
    if (q.rows() < 1 || m_t < 1 || q.rows() % m_t != 0)
        throw config_error("default_penalty: malformed sensing matrix");
    const int n = int(q.rows()) / m_t;
    double uniform = (power / double(n)) * std::real(q.trace());
    return uniform > 0.0 ? 100.0 * uniform : 1.0;
}

inline BeamformingResult solve_beamforming(const std::vector<Vec> &h, const Mat &q,
                                           const BeamformingConfig &cfg)
{
    using namespace beamforming_detail;
    validate(h, q, cfg);
    Mat q_sym = hermitian_part(q);
    const int k = int(h.size());

    BeamformingResult res;
    res.eta = cfg.eta > 0.0 ? cfg.eta : default_penalty(q_sym, cfg.power, cfg.m_t);

    Assembly as = assemble(h, q_sym, cfg, res.eta);
    conic_solution s = run_solver(as, cfg);

    // If the slack stayed open under an automatic penalty although the
    // margins are actually satisfiable, the weight was too small: double it
    // until the slack closes (bounded number of escalations).
    if (cfg.eta <= 0.0 && s.x(as.slack_at) > cfg.nu_tol())
    {
        double feasible_nu = min_slack(h, q_sym, cfg);
        if (feasible_nu <= cfg.nu_tol())
        {
            for (int round = 0; round < 6 && s.x(as.slack_at) > cfg.nu_tol(); ++round)
            {
                res.eta *= 2.0;
                ++res.eta_doublings;
                as.prob.c(as.slack_at) = res.eta / as.obj_scale;
                s = run_solver(as, cfg);
            }
        }
    }

    res.nu = std::max(0.0, s.x(as.slack_at));
    Mat z = recover_block(s.x, as, 0);
    res.r_total = z;
    for (int u = 0; u < k; ++u)
    {
        res.r_user.push_back(recover_block(s.x, as, 1 + u));
        res.r_total += res.r_user.back();
    }
    res.omega = std::real((q_sym * res.r_total).trace());
    res.zeta = RVec::Zero(k);
    TransmitCovariances cov{res.r_user, res.r_total};
    for (int u = 0; u < k; ++u)
        res.zeta(u) =
            zeta_value(h[std::size_t(u)], cov, u, cfg.gamma(u), cfg.noise(u)) / cfg.noise(u);

    res.certified = (s.status == solve_status::optimal);
    res.primal_res = s.primal_res;
    res.dual_res = s.dual_res;
    res.gap = s.gap;
    res.iterations = s.iterations;
    return res;
}

// Rank-one reconstruction: w_k = R_k h_k / sqrt(h_k^H R_k h_k) preserves the
// constrained signal and interference powers exactly, and the removed parts
// never exceed R_k, so the sensing remainder stays positive semidefinite up
// to rounding.
inline Extraction extract_rank1(const std::vector<Mat> &r_user, const Mat &r_total,
                                const std::vector<Vec> &h, const RVec &gamma)
{
    const int k = int(r_user.size());
    if (int(h.size()) != k || gamma.size() != k)
        throw contract_error("extract_rank1: per-user inputs must align");
    Extraction ext;
    ext.r_sensing = r_total;
    const double scale = std::max(1e-300, std::abs(r_total.trace().real()));
    for (int u = 0; u < k; ++u)
    {
        const Mat &ru = r_user[std::size_t(u)];
        const Vec &hu = h[std::size_t(u)];
        if (ru.rows() != r_total.rows() || hu.size() != r_total.rows())
            throw contract_error("extract_rank1: dimension mismatch");
        Vec rh = ru * hu;
        double denom = std::max(0.0, std::real(hu.dot(rh)));
        if (denom <= 1e-14 * scale * std::max(1.0, hu.squaredNorm()))
        {
            if (gamma(u) > 0.0)
                throw numeric_error("extract_rank1: degenerate extraction, user " +
                                    std::to_string(u) +
                                    " carries no signal but has a positive target");
            ext.w.push_back(Vec::Zero(r_total.rows()));
            continue;
        }
        ext.w.push_back(rh / std::sqrt(denom));
        ext.r_sensing -= ext.w.back() * ext.w.back().adjoint();
    }
    ext.r_sensing = hermitian_part(ext.r_sensing);
    return ext;
}

// Eigen-decomposition of the sensing covariance into weighted unit beams.
// Directions carrying less than 1e-9 of the trace are dropped; beams come
// back sorted by power, strongest first.
inline std::vector<SensingBeam> sensing_beams(const Mat &r0)
{
    Mat sym = hermitian_part(r0);
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.info() != Eigen::Success)
        throw numeric_error("sensing_beams: eigendecomposition failed");
    double tr = std::max(0.0, sym.trace().real());
    double floor = 1e-9 * tr;
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(tr, 1.0))
        throw contract_error("sensing_beams: covariance is not positive semidefinite");
    std::vector<SensingBeam> beams;
    for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i)
    {
        double p = es.eigenvalues()(i);
        if (p <= floor || p <= 0.0)
            continue;
        beams.push_back({p, es.eigenvectors().col(i)});
    }
    std::sort(beams.begin(), beams.end(),
              [](const SensingBeam &a, const SensingBeam &b) { return a.power > b.power; });
    return beams;
}

// Full design: relaxed solve, rank-one reconstruction, sensing beams, and
// the post-extraction metrics.
inline BeamformingResult design_beamformers(const std::vector<Vec> &h, const Mat &q,
                                            const BeamformingConfig &cfg)
{
    BeamformingResult res = solve_beamforming(h, q, cfg);
    const int k = int(h.size());
    Extraction ext = extract_rank1(res.r_user, res.r_total, h, cfg.gamma);
    res.w = std::move(ext.w);
    res.r_sensing = std::move(ext.r_sensing);
    res.beams = sensing_beams(res.r_sensing);

    Mat q_sym = hermitian_part(q);
    Mat rebuilt = res.r_sensing;
    std::vector<Mat> rank1;
    for (const Vec &w : res.w)
    {
        rank1.push_back((w * w.adjoint()).eval());
        rebuilt += rank1.back();
    }
    res.omega_extracted = std::real((q_sym * rebuilt).trace());
    TransmitCovariances cov{rank1, rebuilt};
    res.zeta_extracted = RVec::Zero(k);
    for (int u = 0; u < k; ++u)
        res.zeta_extracted(u) =
            zeta_value(h[std::size_t(u)], cov, u, cfg.gamma(u), cfg.noise(u)) / cfg.noise(u);
    const int n = int(q.rows()) / cfg.m_t;
    res.tx_power_used = RVec::Zero(cfg.m_t);
    for (int t = 0; t < cfg.m_t; ++t)
        res.tx_power_used(t) = tx_power(rebuilt, t, n);
    return res;
}

// Scenario-level wrapper: stacked user channels and the sensing quadratic
// are produced from the channel set and the current layout.
inline BeamformingResult design_beamformers(const ChannelSet &ch, const AntennaLayout &lay,
                                            const SensingWeights &wts,
                                            const BeamformingConfig &cfg)
{
    std::vector<Vec> h;
    for (int u = 0; u < ch.k; ++u)
        h.push_back(user_channel(ch, lay, u));
    Mat q = sensing_quadratic(ch, lay, wts);
    return design_beamformers(h, q, cfg);
}

} // namespace fisac

#endif // FISAC_BEAMFORMING_HPP
