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

#ifndef FISAC_TXPOS_HPP
#define FISAC_TXPOS_HPP

// Per-element transmit-position optimization.  With every other element
// frozen, both the user margin and the sensing metric are exact quadratics
// in the phase vector of the moving element, so each becomes
//
//     f(u) = phi(u)^H P phi(u) + 2 Re{phi(u)^H q} + eps
//
// with a rank-one P.  A second-order minorizer with the closed-form
// curvature bound delta turns the per-element step into a tiny SOCP that is
// handed to the conic solver.  Acceptance is guarded by the true penalty
// objective, so a sweep can only improve it.

#include "fisac/conic.hpp"
#include "fisac/physics.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace fisac
{

// Quadratic phase-domain coefficients of one user margin as a function of a
// single element position. All quantities are divided by the user noise
// power so that slack values compose with the beamformer penalty term.
struct CommSurrogate
{
    Mat p;            // L x L Hermitian, rank <= 1
    Vec q;            // length L
    double eps = 0.0; // position-independent remainder
    RMat wv;          // 2 x L departure wave vectors
    double delta = 0.0;
};

// Sensing analog: the moving element enters through a single phase, so the
// quadratic collapses to one real constant plus one complex cross term.
struct SenseSurrogate
{
    double p = 0.0;
    cplx q{0.0, 0.0};
    double eps = 0.0;
    Vec2 wv{0.0, 0.0};
    double delta = 0.0;
};

// Conjugate field response: the moving element contributes
// sum_l c_l exp(+j 2 pi wv_l . u) to the stacked channel entry.
inline Vec conj_field(const RMat &wv, const Vec2 &u)
{
    return field_vector(wv, u).conjugate();
}

inline CommSurrogate comm_surrogate(const ChannelSet &ch, const AntennaLayout &lay,
                                    const TransmitCovariances &cov, int t, int n, int k,
                                    double gamma, double noise)
{
    if (t < 0 || t >= ch.m_t || n < 0 || n >= ch.n)
        throw contract_error("comm_surrogate: element index out of range");
    if (noise <= 0.0)
        throw contract_error("comm_surrogate: noise power must be positive");

    const LinkChannel &link = ch.links[std::size_t(t)][std::size_t(k)];
    CommSurrogate cs;
    cs.wv = link.aod;

    // Per-path weights of the moving element's phase basis.
    Vec b = field_vector(link.aoa, lay.ue[std::size_t(k)]);
    Vec c = link.gains.conjugate().cwiseProduct(b);

    Mat shifted = shifted_covariance(cov, k, gamma) / noise;
    int idx = t * ch.n + n;
    Vec h = user_channel(ch, lay, k);
    Vec h0 = h;
    h0(idx) = cplx(0.0, 0.0);

    cplx w = (shifted.row(idx) * h0)(0);
    double d = std::real(shifted(idx, idx));

    cs.p = d * (c.conjugate() * c.transpose());
    cs.q = w * c.conjugate();

    Vec phi = conj_field(link.aod, lay.tx[std::size_t(t)].col(n));
    double quad = std::real(phi.dot(cs.p * phi)) + 2.0 * std::real(phi.dot(cs.q));
    cs.eps = zeta_value(h, cov, k, gamma, noise) / noise - quad;

    double off = 0.0;
    for (Eigen::Index l1 = 0; l1 < cs.p.rows(); ++l1)
        for (Eigen::Index l2 = l1 + 1; l2 < cs.p.cols(); ++l2)
            off += std::abs(cs.p(l1, l2));
    cs.delta = 16.0 * pi * pi * (off + cs.q.cwiseAbs().sum());
    return cs;
}

inline double comm_value(const CommSurrogate &cs, const Vec2 &u)
{
    Vec phi = conj_field(cs.wv, u);
    return std::real(phi.dot(cs.p * phi)) + 2.0 * std::real(phi.dot(cs.q)) + cs.eps;
}

inline Vec2 comm_gradient(const CommSurrogate &cs, const Vec2 &u)
{
    Vec phi = conj_field(cs.wv, u);
    Vec2 g = Vec2::Zero();
    for (Eigen::Index l1 = 0; l1 < cs.p.rows(); ++l1)
        for (Eigen::Index l2 = 0; l2 < cs.p.cols(); ++l2)
        {
            cplx core = cs.p(l1, l2) * std::conj(phi(l1)) * phi(l2);
            double gap_x = cs.wv(0, l2) - cs.wv(0, l1);
            double gap_y = cs.wv(1, l2) - cs.wv(1, l1);
            g.x() += -two_pi * gap_x * std::imag(core);
            g.y() += -two_pi * gap_y * std::imag(core);
        }
    for (Eigen::Index l = 0; l < cs.q.size(); ++l)
    {
        double lever = 2.0 * two_pi * std::imag(std::conj(phi(l)) * cs.q(l));
        g.x() += cs.wv(0, l) * lever;
        g.y() += cs.wv(1, l) * lever;
    }
    return g;
}

inline SenseSurrogate sense_surrogate(const ChannelSet &ch, const AntennaLayout &lay,
                                      const Mat &r_total, const SensingWeights &wts, int t, int n)
{
    if (t < 0 || t >= ch.m_t || n < 0 || n >= ch.n)
        throw contract_error("sense_surrogate: element index out of range");

    SenseSurrogate ss;
    ss.wv = ch.sensing_wv.col(t);

    Mat c = wts.coupling();
    double tn = double(wts.t_snapshots) * double(wts.n);
    int idx = t * ch.n + n;

    cplx cross(0.0, 0.0);
    for (int j = 0; j < ch.m_t; ++j)
    {
        Vec a = steering_vector(ch.sensing_wv.col(j), lay.tx[std::size_t(j)]);
        if (j == t)
            a(n) = cplx(0.0, 0.0);
        cross += c(t, j) * (r_total.block(t * ch.n, j * ch.n, ch.n, ch.n).row(n) * a)(0);
    }
    ss.q = tn * cross;
    ss.p = tn * std::real(c(t, t)) * std::real(r_total(idx, idx));
    ss.delta = 16.0 * pi * pi * std::abs(ss.q);

    double phase = -two_pi * ss.wv.dot(lay.tx[std::size_t(t)].col(n));
    cplx bar_phi(std::cos(-phase), std::sin(-phase));
    double omega = omega_value(sensing_quadratic(ch, lay, wts), r_total);
    ss.eps = omega - ss.p - 2.0 * std::real(bar_phi * ss.q);
    return ss;
}

inline double sense_value(const SenseSurrogate &ss, const Vec2 &u)
{
    double theta = two_pi * ss.wv.dot(u);
    cplx bar_phi(std::cos(theta), std::sin(theta));
    return ss.p + 2.0 * std::real(bar_phi * ss.q) + ss.eps;
}

inline Vec2 sense_gradient(const SenseSurrogate &ss, const Vec2 &u)
{
    double theta = two_pi * ss.wv.dot(u);
    cplx bar_phi(std::cos(theta), std::sin(theta));
    double lever = -2.0 * two_pi * std::imag(bar_phi * ss.q);
    return {ss.wv.x() * lever, ss.wv.y() * lever};
}

// Second-order minorizer anchored at u0: value and gradient there, curved
// down by delta/2 along every direction.
inline double quadratic_floor(double value0, const Vec2 &grad0, double delta, const Vec2 &u,
                              const Vec2 &u0)
{
    Vec2 step = u - u0;
    return value0 + grad0.dot(step) - 0.5 * delta * step.squaredNorm();
}

struct TxposConfig
{
    RVec gamma;                   // per-user SINR targets (linear)
    RVec noise;                   // per-user noise powers
    double eta = 1.0;             // slack penalty weight
    double min_separation = 0.5;  // within-transmitter element spacing
    solver_options conic{1e-8, 200, 0.99, true};
};

struct MeritValue
{
    double rho = 0.0;   // omega - eta * nu
    double omega = 0.0; // sensing metric
    double nu = 0.0;    // smallest slack making every margin nonnegative
};

struct ElementUpdate
{
    Vec2 position{0.0, 0.0};
    double nu = 0.0;
    double merit_before = 0.0;
    double merit_after = 0.0;
    bool accepted = false;  // position actually moved
    bool solver_ok = true;  // subproblem solved to acceptable accuracy
};

struct SweepReport
{
    int accepted = 0;
    int retained = 0;
    int failed = 0;
    double merit_before = 0.0;
    double merit_after = 0.0;
    double nu = 0.0;
};

namespace txpos_detail
{

inline void validate(const ChannelSet &ch, const TxposConfig &cfg)
{
    if (cfg.gamma.size() != ch.k || cfg.noise.size() != ch.k)
        throw config_error("txpos: gamma and noise must have one entry per user");
    for (int k = 0; k < ch.k; ++k)
    {
        if (cfg.gamma(k) < 0.0)
            throw config_error("txpos: SINR targets must be nonnegative");
        if (cfg.noise(k) <= 0.0)
            throw config_error("txpos: noise powers must be positive");
    }
    if (cfg.eta < 0.0)
        throw config_error("txpos: penalty weight must be nonnegative");
}

} // namespace txpos_detail

// Penalty objective of the position subproblem at the current layout:
// the sensing metric minus eta times the slack that the current margins
// would require from the beamformer penalty.
inline MeritValue position_merit(const ChannelSet &ch, const AntennaLayout &lay,
                                 const TransmitCovariances &cov, const SensingWeights &wts,
                                 const TxposConfig &cfg)
{
    txpos_detail::validate(ch, cfg);
    MeritValue m;
    m.omega = omega_value(sensing_quadratic(ch, lay, wts), cov.total);
    for (int k = 0; k < ch.k; ++k)
    {
        double margin =
            zeta_value(user_channel(ch, lay, k), cov, k, cfg.gamma(k), cfg.noise(k)) / cfg.noise(k);
        m.nu = std::max(m.nu, -margin);
    }
    m.rho = m.omega - cfg.eta * m.nu;
    return m;
}

namespace txpos_detail
{

// One concave-quadratic subproblem in standard conic form.  Variables are
// [px py sbx sby nu s_1..s_K hp_1..hp_J | z0 z1 z2 z3] with u = lower + p,
// the box enforced through the slacks sb, one margin row per user sharing
// the slack nu, one half-plane row per fixed neighbor element, and a
// four-dimensional second-order cone tying z3 + 1 to an upper bound on
// ||u - u'||^2.
struct SubproblemPieces
{
    conic_problem prob;
    Vec2 lower;
    int nu_index = 0;
};

inline SubproblemPieces assemble_element(const Vec2 &u0, const Rect &region,
                                         const std::vector<Vec2> &others,
                                         const std::vector<double> &zeta0,
                                         const std::vector<Vec2> &zeta_grad,
                                         const std::vector<double> &zeta_delta,
                                         const Vec2 &omega_grad, double omega_delta, double eta,
                                         double min_sep)
{
    int k = int(zeta0.size());
    int j = int(others.size());
    int nn = 5 + k + j;   // leading nonnegative block
    int nv = nn + 4;      // plus the second-order cone
    int rows = 5 + k + j;

    SubproblemPieces sp;
    sp.lower = Vec2(-region.half_x, -region.half_y);
    sp.nu_index = 4;
    Vec2 p0 = u0 - sp.lower;

    conic_problem &pb = sp.prob;
    pb.a = RMat::Zero(rows, nv);
    pb.b = RVec::Zero(rows);
    pb.c = RVec::Zero(nv);
    pb.cones = {cone{cone_kind::nonneg, nn}, cone{cone_kind::soc, 4}};

    int z = nn; // first index of the cone block

    // Box rows: p + sb = width.
    pb.a(0, 0) = 1.0;
    pb.a(0, 2) = 1.0;
    pb.b(0) = 2.0 * region.half_x;
    pb.a(1, 1) = 1.0;
    pb.a(1, 3) = 1.0;
    pb.b(1) = 2.0 * region.half_y;

    // Cone ties: z = (w + 1, 2(u - u0), w - 1) makes z3 + 1 >= ||u - u0||^2.
    pb.a(2, z + 0) = 1.0;
    pb.a(2, z + 3) = -1.0;
    pb.b(2) = 2.0;
    pb.a(3, z + 1) = 1.0;
    pb.a(3, 0) = -2.0;
    pb.b(3) = -2.0 * p0.x();
    pb.a(4, z + 2) = 1.0;
    pb.a(4, 1) = -2.0;
    pb.b(4) = -2.0 * p0.y();

    // Margin rows: zeta-hat_k + nu - s_k = 0.
    for (int i = 0; i < k; ++i)
    {
        int r = 5 + i;
        pb.a(r, 0) = zeta_grad[std::size_t(i)].x();
        pb.a(r, 1) = zeta_grad[std::size_t(i)].y();
        pb.a(r, z + 3) = -0.5 * zeta_delta[std::size_t(i)];
        pb.a(r, 4) = 1.0;
        pb.a(r, 5 + i) = -1.0;
        pb.b(r) = 0.5 * zeta_delta[std::size_t(i)] - zeta0[std::size_t(i)] +
                  zeta_grad[std::size_t(i)].dot(p0);
    }

    // Half-plane rows keep the supporting side of each exclusion disk.
    for (int i = 0; i < j; ++i)
    {
        int r = 5 + k + i;
        Vec2 gap = u0 - others[std::size_t(i)];
        double len = gap.norm();
        Vec2 dir = len > 1e-9 ? Vec2(gap / len) : Vec2(1.0, 0.0);
        pb.a(r, 0) = dir.x();
        pb.a(r, 1) = dir.y();
        pb.a(r, 5 + k + i) = -1.0;
        pb.b(r) = min_sep + dir.dot(others[std::size_t(i)] - sp.lower);
    }

    pb.c(0) = -omega_grad.x();
    pb.c(1) = -omega_grad.y();
    pb.c(z + 3) = 0.5 * omega_delta;
    pb.c(4) = eta;

    // Pure objective rescale: keeps tiny sensing couplings away from the
    // solver's absolute tolerances without changing the argmin.
    double scale = pb.c.cwiseAbs().maxCoeff();
    if (scale > 0.0)
        pb.c /= scale;
    return sp;
}

} // namespace txpos_detail

// Re-optimize a single element with everything else frozen.  The update is
// kept only when the true penalty objective improves, so the sweep is an
// ascent method by construction; a failed or non-improving subproblem
// leaves the layout untouched.
inline ElementUpdate optimize_element(const ChannelSet &ch, AntennaLayout &lay,
                                      const TransmitCovariances &cov, const SensingWeights &wts,
                                      const TxposConfig &cfg, int t, int n)
{
    txpos_detail::validate(ch, cfg);
    if (t < 0 || t >= ch.m_t || n < 0 || n >= ch.n)
        throw contract_error("optimize_element: element index out of range");

    Vec2 u0 = lay.tx[std::size_t(t)].col(n);
    MeritValue before = position_merit(ch, lay, cov, wts, cfg);

    ElementUpdate up;
    up.position = u0;
    up.nu = before.nu;
    up.merit_before = before.rho;
    up.merit_after = before.rho;

    const Rect &region = lay.tx_region;
    if (region.half_x <= 1e-12 && region.half_y <= 1e-12)
        return up; // the region is a single point

    std::vector<double> zeta0(std::size_t(ch.k));
    std::vector<Vec2> zeta_grad(std::size_t(ch.k));
    std::vector<double> zeta_delta(std::size_t(ch.k));
    for (int k = 0; k < ch.k; ++k)
    {
        CommSurrogate cs = comm_surrogate(ch, lay, cov, t, n, k, cfg.gamma(k), cfg.noise(k));
        zeta0[std::size_t(k)] = comm_value(cs, u0);
        zeta_grad[std::size_t(k)] = comm_gradient(cs, u0);
        zeta_delta[std::size_t(k)] = cs.delta;
    }
    SenseSurrogate ss = sense_surrogate(ch, lay, cov.total, wts, t, n);

    std::vector<Vec2> others;
    for (int i = 0; i < ch.n; ++i)
        if (i != n)
            others.emplace_back(lay.tx[std::size_t(t)].col(i));

    txpos_detail::SubproblemPieces sp = txpos_detail::assemble_element(
        u0, region, others, zeta0, zeta_grad, zeta_delta, sense_gradient(ss, u0), ss.delta,
        cfg.eta, cfg.min_separation);

    conic_solution sol = solve(sp.prob, cfg.conic);
    bool usable = sol.status == solve_status::optimal ||
                  (sol.status == solve_status::max_iterations &&
                   std::max({sol.primal_res, sol.dual_res, sol.gap}) <= 1e-5);
    if (!usable)
    {
        up.solver_ok = false;
        return up;
    }

    Vec2 cand = region.clamp(sp.lower + Vec2(sol.x(0), sol.x(1)));
    for (const Vec2 &other : others)
        if ((cand - other).norm() < cfg.min_separation - 1e-9)
            return up; // defensive: keep the audited spacing

    lay.tx[std::size_t(t)].col(n) = cand;
    MeritValue after = position_merit(ch, lay, cov, wts, cfg);
    if (after.rho > before.rho + 1e-12 * (1.0 + std::abs(before.rho)))
    {
        up.position = cand;
        up.nu = after.nu;
        up.merit_after = after.rho;
        up.accepted = true;
        return up;
    }
    lay.tx[std::size_t(t)].col(n) = u0; // no improvement: retain
    return up;
}

// One ascending (t, n) pass over every movable transmit element.
inline SweepReport sweep_positions(const ChannelSet &ch, AntennaLayout &lay,
                                   const TransmitCovariances &cov, const SensingWeights &wts,
                                   const TxposConfig &cfg)
{
    txpos_detail::validate(ch, cfg);
    SweepReport rep;
    rep.merit_before = position_merit(ch, lay, cov, wts, cfg).rho;
    rep.merit_after = rep.merit_before;
    for (int t = 0; t < ch.m_t; ++t)
        for (int n = 0; n < ch.n; ++n)
        {
            ElementUpdate up = optimize_element(ch, lay, cov, wts, cfg, t, n);
            if (!up.solver_ok)
                ++rep.failed;
            else if (up.accepted)
                ++rep.accepted;
            else
                ++rep.retained;
            rep.merit_after = up.merit_after;
            rep.nu = up.nu;
        }
    return rep;
}

} // namespace fisac

#endif
