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

#ifndef FISAC_RXPOS_HPP
#define FISAC_RXPOS_HPP

// Per-user receive-position optimization.  With transmit positions and
// covariances frozen, the user channel is linear in the receive field
// vector b(v), so the SINR becomes a ratio of two fixed Hermitian forms in
// b(v) and a cheap projected gradient ascent over the receive rectangle
// needs no channel re-synthesis per iterate.

#include "fisac/physics.hpp"
#include "fisac/scenario.hpp"

#include <cmath>

namespace fisac
{

// SINR numerator and denominator of one user folded into the receive-field
// domain: sinr(v) = b(v)^H r_user b(v) / (b(v)^H (r_total - r_user) b(v) + noise).
struct ReceiveQuadratic
{
    Mat r_user;   // L*M_t x L*M_t Hermitian
    Mat r_total;  // same shape
    RMat wv;      // 2 x L*M_t stacked arrival wave vectors
    double noise = 1.0;
};

inline ReceiveQuadratic receive_quadratic(const ChannelSet &ch, const AntennaLayout &lay,
                                          const TransmitCovariances &cov, int k, double noise)
{
    if (k < 0 || k >= ch.k)
        throw contract_error("receive_quadratic: user index out of range");
    if (!(noise > 0.0))
        throw contract_error("receive_quadratic: noise power must be positive");
    if (int(cov.per_user.size()) != ch.k || cov.total.rows() != ch.n * ch.m_t)
        throw contract_error("receive_quadratic: covariances do not match the channel set");

    // h(v) = fold * b(v) with fold block-diagonal over transmitters.
    Mat fold = Mat::Zero(ch.n * ch.m_t, ch.l * ch.m_t);
    ReceiveQuadratic rq;
    rq.wv.resize(2, ch.l * ch.m_t);
    for (int t = 0; t < ch.m_t; ++t)
    {
        const LinkChannel &link = ch.links[std::size_t(t)][std::size_t(k)];
        Mat a = field_matrix(link.aod, lay.tx[std::size_t(t)]);
        fold.block(t * ch.n, t * ch.l, ch.n, ch.l) =
            a.adjoint() * link.gains.conjugate().asDiagonal();
        rq.wv.middleCols(t * ch.l, ch.l) = link.aoa;
    }
    rq.r_user = fold.adjoint() * cov.per_user[std::size_t(k)] * fold;
    rq.r_total = fold.adjoint() * cov.total * fold;
    rq.noise = noise;
    return rq;
}

inline double receive_sinr(const ReceiveQuadratic &rq, const Vec2 &v, bool *clamped = nullptr)
{
    Vec b = field_vector(rq.wv, v);
    double signal = std::max(0.0, std::real(b.dot(rq.r_user * b)));
    double interf = std::real(b.dot((rq.r_total - rq.r_user) * b));
    if (clamped)
        *clamped = interf < 0.0;
    interf = std::max(0.0, interf);
    return signal / (interf + rq.noise);
}

// Quotient-rule gradient; each field entry differentiates to
// -j 2 pi wv b, so both quadratic forms have closed-form partials.
inline Vec2 receive_sinr_gradient(const ReceiveQuadratic &rq, const Vec2 &v)
{
    Vec b = field_vector(rq.wv, v);
    Vec bx = b.cwiseProduct(rq.wv.row(0).transpose().cast<cplx>());
    Vec by = b.cwiseProduct(rq.wv.row(1).transpose().cast<cplx>());

    auto form = [&](const Mat &m, double &val, Vec2 &grad, bool clamp) {
        val = std::real(b.dot(m * b));
        grad = {2.0 * two_pi * std::imag(b.dot(m * bx)),
                2.0 * two_pi * std::imag(b.dot(m * by))};
        if (clamp && val < 0.0)
        {
            val = 0.0;
            grad = Vec2::Zero();
        }
    };

    double num = 0.0, interf = 0.0;
    Vec2 gnum, ginterf;
    form(rq.r_user, num, gnum, true);
    form(rq.r_total - rq.r_user, interf, ginterf, true);

    double den = interf + rq.noise;
    return (gnum * den - num * ginterf) / (den * den);
}

struct GAConfig
{
    double step_a = 0.0;       // 0 selects 1 / (1 + ||gradient at start||)
    double step_b = 10.0;
    int max_iter = 30;
    bool best_iterate = true;  // return the best visited point, not the last
};

struct GAResult
{
    Vec2 v{0.0, 0.0};
    double sinr = 0.0;
    int iterations = 0;
    bool feasible = true; // only meaningful for the feasibility baseline
    int clamps = 0;       // iterates with numerically negative interference
};

namespace rxpos_detail
{

inline void validate(const GAConfig &cfg)
{
    if (cfg.step_a < 0.0 || cfg.step_b < 0.0)
        throw config_error("rxpos: step constants must be nonnegative");
    if (cfg.max_iter < 0)
        throw config_error("rxpos: iteration count must be nonnegative");
}

} // namespace rxpos_detail

// Projected gradient ascent with a decaying step a / (iter + b), clipped to
// the receive rectangle; the best iterate visited is tracked so the result
// can never fall below the starting SINR.
inline GAResult ga_optimize(const ReceiveQuadratic &rq, const Rect &region, const Vec2 &start,
                            const GAConfig &cfg = {})
{
    rxpos_detail::validate(cfg);
    Vec2 v = region.clamp(start);

    GAResult res;
    bool clamped = false;
    res.v = v;
    res.sinr = receive_sinr(rq, v, &clamped);
    res.clamps += clamped ? 1 : 0;

    double a = cfg.step_a;
    if (a <= 0.0)
        a = 1.0 / (1.0 + receive_sinr_gradient(rq, v).norm());

    Vec2 last = v;
    double last_sinr = res.sinr;
    for (int it = 0; it < cfg.max_iter; ++it)
    {
        double step = a / (double(it) + cfg.step_b);
        last = region.clamp(last + step * receive_sinr_gradient(rq, last));
        last_sinr = receive_sinr(rq, last, &clamped);
        res.clamps += clamped ? 1 : 0;
        ++res.iterations;
        if (last_sinr > res.sinr)
        {
            res.sinr = last_sinr;
            res.v = last;
        }
    }
    if (!cfg.best_iterate)
    {
        res.v = last;
        res.sinr = last_sinr;
    }
    return res;
}

// Same iteration, but stops at the first iterate meeting the SINR target —
// the cheaper scheme the gradient ascent is compared against.
inline GAResult feasibility_baseline(const ReceiveQuadratic &rq, const Rect &region,
                                     const Vec2 &start, double gamma, const GAConfig &cfg = {})
{
    rxpos_detail::validate(cfg);
    if (gamma < 0.0)
        throw config_error("rxpos: SINR target must be nonnegative");

    Vec2 v = region.clamp(start);
    GAResult res;
    res.v = v;
    res.sinr = receive_sinr(rq, v);
    if (res.sinr >= gamma)
        return res; // already feasible: exit before any step

    double a = cfg.step_a;
    if (a <= 0.0)
        a = 1.0 / (1.0 + receive_sinr_gradient(rq, v).norm());

    for (int it = 0; it < cfg.max_iter; ++it)
    {
        double step = a / (double(it) + cfg.step_b);
        v = region.clamp(v + step * receive_sinr_gradient(rq, v));
        double s = receive_sinr(rq, v);
        ++res.iterations;
        if (s > res.sinr)
        {
            res.sinr = s;
            res.v = v;
        }
        if (s >= gamma)
        {
            res.sinr = s;
            res.v = v;
            return res;
        }
    }
    res.feasible = false;
    return res;
}

} // namespace fisac

#endif
