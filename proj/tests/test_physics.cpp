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
//  - field vectors / matrices against per-element phase loops
//  - stacked user channels against a naive triple loop
//  - SINR: covariance form vs explicit-beamformer form, scale invariance,
//    interference clamping
//  - constraint margin zeta: explicit-matrix oracle and sign equivalence
//  - block extraction against explicit selection matrices
//  - sensing metric omega: selection-matrix oracle, linearity, positivity,
//    receive-steering invariance, sample-covariance Monte Carlo, and the
//    Hermitian-input contract

#include "fisac/physics.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace fisac;

namespace
{

ScenarioConfig tiny_config(int m_t = 2, int k = 2, int n = 3, int l = 5)
{
    ScenarioConfig cfg;
    cfg.m_t = m_t;
    cfg.m_r = 2;
    cfg.k = k;
    cfg.n = n;
    cfg.l = l;
    cfg.model = ChannelModel::normalized;
    return cfg;
}

AntennaLayout random_layout(const ScenarioConfig &cfg, Rng &rng)
{
    AntennaLayout lay;
    lay.tx_region = {0.5 * cfg.region_tx_lambda, 0.5 * cfg.region_tx_lambda};
    lay.ue_region = {0.5 * cfg.region_rx_lambda, 0.5 * cfg.region_rx_lambda};
    for (int t = 0; t < cfg.m_t; ++t)
    {
        RMat pos(2, cfg.n);
        for (int i = 0; i < cfg.n; ++i)
        {
            pos(0, i) = rng.uniform(-lay.tx_region.half_x, lay.tx_region.half_x);
            pos(1, i) = rng.uniform(-lay.tx_region.half_y, lay.tx_region.half_y);
        }
        lay.tx.push_back(pos);
    }
    for (int k = 0; k < cfg.k; ++k)
        lay.ue.emplace_back(rng.uniform(-lay.ue_region.half_x, lay.ue_region.half_x),
                            rng.uniform(-lay.ue_region.half_y, lay.ue_region.half_y));
    return lay;
}

TransmitCovariances random_covariances(Rng &rng, int dim, int k, double p_total)
{
    TransmitCovariances cov;
    cov.total = Mat::Zero(dim, dim);
    for (int i = 0; i < k; ++i)
    {
        cov.per_user.push_back(oracle::random_psd(rng, dim, p_total / (k + 1)));
        cov.total += cov.per_user.back();
    }
    cov.total += oracle::random_psd(rng, dim, p_total / (k + 1));
    return cov;
}

} // namespace

TEST_CASE("field vector matches the per-element phase formula")
{
    Rng rng(101);
    for (int rep = 0; rep < 20; ++rep)
    {
        int l = 1 + int(rng.raw() % 12);
        RMat wv(2, l);
        for (int i = 0; i < l; ++i)
            wv.col(i) = wave_vector(rng.uniform(0.0, pi), rng.uniform(0.0, pi));
        Vec2 u(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));

        Vec a = field_vector(wv, u);
        REQUIRE(a.size() == l);
        for (int i = 0; i < l; ++i)
        {
            double phase = -two_pi * (wv(0, i) * u.x() + wv(1, i) * u.y());
            CHECK(std::abs(a(i) - cplx(std::cos(phase), std::sin(phase))) < 1e-12);
            CHECK(std::abs(std::abs(a(i)) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("field matrix stacks per-position field vectors")
{
    Rng rng(102);
    RMat wv(2, 6);
    for (int i = 0; i < 6; ++i)
        wv.col(i) = wave_vector(rng.uniform(0.0, pi), rng.uniform(0.0, pi));
    RMat pos(2, 4);
    for (int i = 0; i < 4; ++i)
        pos.col(i) = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

    Mat a = field_matrix(wv, pos);
    REQUIRE(a.rows() == 6);
    REQUIRE(a.cols() == 4);
    for (int c = 0; c < 4; ++c)
        CHECK((a.col(c) - field_vector(wv, pos.col(c))).norm() < 1e-12);

    // a single-direction steering vector is the L=1 special case
    Vec2 dir = wave_vector(0.3, 1.1);
    RMat one(2, 1);
    one.col(0) = dir;
    Vec s = steering_vector(dir, pos);
    Mat a1 = field_matrix(one, pos);
    CHECK((s.transpose() - a1.row(0)).norm() < 1e-12);
}

TEST_CASE("stacked user channel matches the naive triple loop")
{
    ScenarioConfig cfg = tiny_config();
    cfg.seed = 7;
    Scenario sc = make_scenario(cfg);
    Rng rng(103);
    AntennaLayout lay = random_layout(cfg, rng);

    for (int k = 0; k < cfg.k; ++k)
    {
        Vec h = user_channel(sc.channels, lay, k);
        REQUIRE(h.size() == cfg.n * cfg.m_t);
        for (int t = 0; t < cfg.m_t; ++t)
        {
            const LinkChannel &link = sc.channels.links[t][k];
            for (int n = 0; n < cfg.n; ++n)
            {
                cplx acc = 0.0;
                for (int l = 0; l < cfg.l; ++l)
                {
                    const Vec2 u = lay.tx[t].col(n);
                    const Vec2 v = lay.ue[k];
                    double tx_phase = two_pi * (link.aod(0, l) * u.x() + link.aod(1, l) * u.y());
                    double rx_phase = -two_pi * (link.aoa(0, l) * v.x() + link.aoa(1, l) * v.y());
                    acc += std::conj(link.gains(l)) *
                           cplx(std::cos(tx_phase), std::sin(tx_phase)) *
                           cplx(std::cos(rx_phase), std::sin(rx_phase));
                }
                CHECK(std::abs(h(t * cfg.n + n) - acc) < 1e-12 * std::max(1.0, std::abs(acc)));
            }
        }
    }
}

TEST_CASE("covariance-form SINR equals the explicit-beamformer form")
{
    Rng rng(104);
    const int dim = 6, k = 3;
    const double noise = 0.37;
    Vec h = oracle::random_cvec(rng, dim);

    std::vector<Vec> w;
    TransmitCovariances cov;
    cov.total = oracle::random_psd(rng, dim, 0.5); // residual sensing part
    Mat r0 = cov.total;
    for (int i = 0; i < k; ++i)
    {
        w.push_back(oracle::random_cvec(rng, dim));
        cov.per_user.push_back(w.back() * w.back().adjoint());
        cov.total += cov.per_user.back();
    }

    for (int i = 0; i < k; ++i)
    {
        double sig = std::norm(w[i].dot(h));
        double interf = std::real(h.dot(r0 * h));
        for (int j = 0; j < k; ++j)
            if (j != i)
                interf += std::norm(w[j].dot(h));
        double expect = sig / (interf + noise);
        CHECK(sinr_value(h, cov, i, noise) == Catch::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("SINR is invariant under joint power/noise scaling and clamps interference")
{
    Rng rng(105);
    const int dim = 4;
    Vec h = oracle::random_cvec(rng, dim);
    TransmitCovariances cov = random_covariances(rng, dim, 2, 3.0);
    double s1 = sinr_value(h, cov, 0, 0.11);

    TransmitCovariances scaled = cov;
    for (auto &m : scaled.per_user)
        m *= 7.5;
    scaled.total *= 7.5;
    CHECK(sinr_value(h, scaled, 0, 0.11 * 7.5) == Catch::Approx(s1).epsilon(1e-12));

    // craft indefinite interference: total slightly smaller than the user
    // part along h, which a PSD-correct solver could never produce
    TransmitCovariances bad;
    bad.per_user.push_back(oracle::random_psd(rng, dim, 2.0));
    bad.total = bad.per_user[0] - 1e-3 * (h * h.adjoint()) / h.squaredNorm();
    bool clamped = false;
    double s = sinr_value(h, bad, 0, 0.31, &clamped);
    CHECK(clamped);
    double sig = std::real(h.dot(bad.per_user[0] * h));
    CHECK(s == Catch::Approx(sig / 0.31).epsilon(1e-10));
}

TEST_CASE("constraint margin zeta matches explicit matrices and the SINR sign")
{
    Rng rng(106);
    const int dim = 6;
    for (int rep = 0; rep < 1000; ++rep)
    {
        TransmitCovariances cov = random_covariances(rng, dim, 2, 4.0);
        Vec h = oracle::random_cvec(rng, dim);
        double gamma = rng.uniform(0.05, 6.0);
        double noise = rng.uniform(0.05, 2.0);

        Mat shifted = (1.0 + gamma) * cov.per_user[0] - gamma * cov.total;
        double expect = std::real(h.dot(shifted * h)) - gamma * noise;
        double z = zeta_value(h, cov, 0, gamma, noise);
        CHECK(z == Catch::Approx(expect).margin(1e-10 * (1.0 + std::abs(expect))));
        CHECK((shifted_covariance(cov, 0, gamma) - shifted).norm() < 1e-12);

        double margin = sinr_value(h, cov, 0, noise) - gamma;
        if (std::abs(z) > 1e-9)
            CHECK((z > 0.0) == (margin > 0.0));
    }
}

TEST_CASE("block extraction agrees with explicit selection matrices")
{
    Rng rng(107);
    const int m = 3, n = 4;
    Mat a = oracle::random_cmat(rng, m * n, m * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
        {
            Mat ei = oracle::selection_matrix(i, m, n);
            Mat ej = oracle::selection_matrix(j, m, n);
            Mat expect = ei * a * ej.adjoint();
            CHECK((block_of(a, i, j, n) - expect).norm() < 1e-14);
        }
    CHECK_THROWS_AS(block_of(a, 3, 0, n), contract_error);

    // per-transmitter power: trace of the diagonal block
    Mat p = oracle::random_psd(rng, m * n, 5.0);
    for (int t = 0; t < m; ++t)
    {
        Mat et = oracle::selection_matrix(t, m, n);
        CHECK(tx_power(p, t, n) ==
              Catch::Approx((et * p * et.adjoint()).trace().real()).epsilon(1e-12));
    }
}

TEST_CASE("sensing metric matches the selection-matrix oracle")
{
    ScenarioConfig cfg = tiny_config(3, 1, 2, 4);
    cfg.seed = 21;
    Scenario sc = make_scenario(cfg);
    Rng rng(108);
    AntennaLayout lay = random_layout(cfg, rng);
    SensingWeights wts = expected_weights(sc.channels, cfg.t_snapshots);

    const int dim = cfg.m_t * cfg.n;
    Mat r = oracle::random_psd(rng, dim, 2.5);
    Mat q = sensing_quadratic(sc.channels, lay, wts);
    double val = omega_value(q, r);

    // oracle: explicit selection matrices and explicit coupling coefficients
    cplx acc = 0.0;
    for (int i = 0; i < cfg.m_t; ++i)
        for (int j = 0; j < cfg.m_t; ++j)
        {
            cplx c = 0.0;
            for (int rr = 0; rr < cfg.m_r; ++rr)
                c += wts.psi(rr * cfg.m_t + i, rr * cfg.m_t + j) *
                     std::sqrt(sc.channels.beta(i, rr) * sc.channels.beta(j, rr));
            Vec ai = steering_vector(sc.channels.sensing_wv.col(i), lay.tx[i]);
            Vec aj = steering_vector(sc.channels.sensing_wv.col(j), lay.tx[j]);
            Mat ei = oracle::selection_matrix(i, cfg.m_t, cfg.n);
            Mat ej = oracle::selection_matrix(j, cfg.m_t, cfg.n);
            acc += c * ai.dot(ei * r * ej.adjoint() * aj);
        }
    acc *= double(cfg.t_snapshots) * double(cfg.n);
    CHECK(std::abs(acc.imag()) < 1e-9 * std::abs(acc.real()));
    CHECK(val == Catch::Approx(acc.real()).epsilon(1e-10));
}

TEST_CASE("sensing metric is linear and nonnegative on PSD inputs")
{
    ScenarioConfig cfg = tiny_config(2, 1, 3, 4);
    cfg.seed = 22;
    Scenario sc = make_scenario(cfg);
    Rng rng(109);
    AntennaLayout lay = random_layout(cfg, rng);
    Mat q = sensing_quadratic(sc.channels, lay, expected_weights(sc.channels, cfg.t_snapshots));

    const int dim = cfg.m_t * cfg.n;
    Mat r1 = oracle::random_psd(rng, dim, 1.0);
    Mat r2 = oracle::random_psd(rng, dim, 3.0);
    double w1 = omega_value(q, r1), w2 = omega_value(q, r2);
    CHECK(w1 >= 0.0);
    CHECK(w2 >= 0.0);
    CHECK(omega_value(q, 2.0 * r1 + 0.5 * r2) == Catch::Approx(2.0 * w1 + 0.5 * w2).epsilon(1e-10));

    // genie weighting is PSD rank-one, so the metric stays nonnegative
    Rng grng(110);
    SensingWeights genie = genie_weights(sc.channels, cfg.t_snapshots, grng);
    Eigen::SelfAdjointEigenSolver<Mat> es(genie.psi);
    CHECK(es.eigenvalues().minCoeff() > -1e-12 * genie.psi.norm());
    Mat qg = sensing_quadratic(sc.channels, lay, genie);
    CHECK(omega_value(qg, r1) >= 0.0);
}

TEST_CASE("sensing metric ignores the receive steering (explicit-G oracle)")
{
    ScenarioConfig cfg = tiny_config(3, 1, 2, 6);
    cfg.seed = 23;
    Scenario sc = make_scenario(cfg);
    Rng rng(111);
    AntennaLayout lay = random_layout(cfg, rng);
    SensingWeights wts = expected_weights(sc.channels, cfg.t_snapshots);

    const int dim = cfg.m_t * cfg.n;
    Mat r = oracle::random_psd(rng, dim, 1.7);
    double val = omega_value(sensing_quadratic(sc.channels, lay, wts), r);

    // oracle: assemble the per-receiver hop matrices G_{t,r} = sqrt(beta) b a^H
    // with explicit random unit-modulus receive steering, then take the exact
    // snapshot expectation of the correlation form
    for (int draw = 0; draw < 20; ++draw)
    {
        std::vector<Vec> b;
        for (int rr = 0; rr < cfg.m_r; ++rr)
        {
            Vec v(cfg.n);
            for (int i = 0; i < cfg.n; ++i)
                v(i) = rng.unit_phase();
            b.push_back(v);
        }
        cplx acc = 0.0;
        for (int rr = 0; rr < cfg.m_r; ++rr)
        {
            Mat m(cfg.m_t, cfg.m_t);
            for (int i = 0; i < cfg.m_t; ++i)
                for (int j = 0; j < cfg.m_t; ++j)
                {
                    Vec ai = steering_vector(sc.channels.sensing_wv.col(i), lay.tx[i]);
                    Vec aj = steering_vector(sc.channels.sensing_wv.col(j), lay.tx[j]);
                    Mat gi = std::sqrt(sc.channels.beta(i, rr)) * b[rr] * ai.adjoint();
                    Mat gj = std::sqrt(sc.channels.beta(j, rr)) * b[rr] * aj.adjoint();
                    Mat eij = block_of(r, j, i, cfg.n); // E_j R E_i^H
                    m(i, j) = double(cfg.t_snapshots) * (gi.adjoint() * gj * eij).trace();
                }
            for (int i = 0; i < cfg.m_t; ++i)
                for (int j = 0; j < cfg.m_t; ++j)
                    acc += wts.psi(rr * cfg.m_t + i, rr * cfg.m_t + j) * m(j, i);
        }
        CHECK(std::abs(acc.imag()) < 1e-9 * std::abs(acc.real()));
        CHECK(std::abs(acc.real() - val) < 1e-10 * std::abs(val));
    }
}

TEST_CASE("sensing metric agrees with a sample-covariance Monte Carlo")
{
    ScenarioConfig cfg = tiny_config(2, 1, 2, 4);
    cfg.seed = 24;
    cfg.t_snapshots = 4000;
    Scenario sc = make_scenario(cfg);
    Rng rng(112);
    AntennaLayout lay = random_layout(cfg, rng);
    SensingWeights wts = expected_weights(sc.channels, cfg.t_snapshots);

    const int dim = cfg.m_t * cfg.n;
    Mat r = oracle::random_psd(rng, dim, 2.0);
    double val = omega_value(sensing_quadratic(sc.channels, lay, wts), r);

    // draw T snapshots with covariance R and accumulate the empirical form
    Eigen::SelfAdjointEigenSolver<Mat> es(r);
    Mat half = es.eigenvectors() *
               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
               es.eigenvectors().adjoint();
    std::vector<Vec> a;
    for (int t = 0; t < cfg.m_t; ++t)
        a.push_back(steering_vector(sc.channels.sensing_wv.col(t), lay.tx[t]));
    Mat acc = Mat::Zero(cfg.m_t, cfg.m_t); // accumulates conj(g_i) g_j per receiver-free part
    for (int snap = 0; snap < cfg.t_snapshots; ++snap)
    {
        Vec x = half * oracle::random_cvec(rng, dim);
        Vec g(cfg.m_t);
        for (int t = 0; t < cfg.m_t; ++t)
            g(t) = a[t].dot(x.segment(t * cfg.n, cfg.n));
        acc += g.conjugate() * g.transpose();
    }
    cplx mc = 0.0;
    for (int rr = 0; rr < cfg.m_r; ++rr)
        for (int i = 0; i < cfg.m_t; ++i)
            for (int j = 0; j < cfg.m_t; ++j)
                mc += wts.psi(rr * cfg.m_t + i, rr * cfg.m_t + j) *
                      std::sqrt(sc.channels.beta(i, rr) * sc.channels.beta(j, rr)) *
                      double(cfg.n) * acc(i, j);
    CHECK(std::abs(mc.real() - val) < 0.10 * std::abs(val));
}

TEST_CASE("sensing metric rejects non-Hermitian covariances")
{
    ScenarioConfig cfg = tiny_config(2, 1, 2, 3);
    cfg.seed = 25;
    Scenario sc = make_scenario(cfg);
    Rng rng(113);
    AntennaLayout lay = random_layout(cfg, rng);
    Mat q = sensing_quadratic(sc.channels, lay, expected_weights(sc.channels, cfg.t_snapshots));
    Mat bad = oracle::random_cmat(rng, cfg.m_t * cfg.n, cfg.m_t * cfg.n);
    CHECK_THROWS_AS(omega_value(q, bad), contract_error);
}
