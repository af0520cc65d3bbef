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

#ifndef FISAC_DETECTION_HPP
#define FISAC_DETECTION_HPP

#include "fisac/chi2.hpp"
#include "fisac/common.hpp"
#include "fisac/physics.hpp"
#include "fisac/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace fisac
{

// Two candidate scalings relate the generalized-likelihood statistic to the
// chi-square family: `paper` compares the raw statistic against the
// chi-square quantile, `half_scaled` doubles the statistic first (the raw
// value then follows half a chi-square law under pure noise, with twice the
// sensing metric as noncentrality otherwise).  Which one actually holds is
// decided empirically by calibrate_convention, never assumed.
enum class Convention
{
    paper,
    half_scaled,
};

inline const char *convention_name(Convention c)
{
    return c == Convention::paper ? "paper" : "half-scaled";
}

struct DetectorConfig
{
    int q = 1;            // complex coefficient count (dictionary columns)
    double p_fa = 0.05;   // false-alarm target
    double sigma2 = 1.0;  // receiver noise power
    Convention convention = Convention::half_scaled;

    int dof() const { return 2 * q; }
};

// Alarm threshold in the chi-square domain with 2q degrees of freedom.  The
// convention rescales the statistic, never the threshold, so both readings
// share this value.  A unit false-alarm target degenerates to zero: every
// observation raises an alarm.
inline double glr_threshold(const DetectorConfig &cfg)
{
    if (cfg.q < 1)
        throw config_error("detector: q must be at least 1");
    if (!(cfg.p_fa > 0.0))
        throw config_error("detector: the false-alarm target must be positive");
    if (cfg.p_fa >= 1.0)
        return 0.0;
    return chi2_quantile(1.0 - cfg.p_fa, cfg.dof());
}

// Closed-form detection probability from the sensing metric omega.  Zero
// metric collapses the alternative onto the null hypothesis, so the result
// equals the false-alarm target exactly rather than through the series.
inline double detection_probability(const DetectorConfig &cfg, double omega)
{
    if (!(omega >= 0.0))
        throw contract_error("detection_probability: omega must be nonnegative");
    if (omega == 0.0)
        return cfg.p_fa;
    double noncentrality = cfg.convention == Convention::half_scaled ? 2.0 * omega : omega;
    return 1.0 - nc_chi2_cdf(glr_threshold(cfg), cfg.dof(), noncentrality);
}

namespace detail
{

// Column-pivoted factorization with a relative rank tolerance; deficiency is
// a caller error and the message names the dependent columns so the broken
// dictionary can be traced back to its builder.
inline Eigen::ColPivHouseholderQR<Mat> dictionary_qr(const Mat &g)
{
    if (g.cols() < 1)
        throw contract_error("dictionary: need at least one column");
    if (g.rows() < g.cols())
        throw contract_error("dictionary: fewer observations than coefficients");
    Eigen::ColPivHouseholderQR<Mat> qr;
    qr.setThreshold(1e-10);
    qr.compute(g);
    if (qr.rank() < g.cols())
    {
        auto idx = qr.colsPermutation().indices();
        std::vector<int> dependent;
        for (Eigen::Index i = qr.rank(); i < g.cols(); ++i)
            dependent.push_back(int(idx(i)));
        std::sort(dependent.begin(), dependent.end());
        std::string msg = "dictionary is rank-deficient (rank " + std::to_string(qr.rank()) +
                          " of " + std::to_string(g.cols()) + "); dependent columns:";
        for (int c : dependent)
            msg += " " + std::to_string(c);
        throw contract_error(msg);
    }
    return qr;
}

} // namespace detail

// Raw generalized-likelihood statistic: energy of the observation inside the
// dictionary's column space over the noise power, computed through an
// orthonormal factorization rather than a normal-equation inverse.
inline double glr_statistic(const Vec &y, const Mat &g, double sigma2)
{
    if (!(sigma2 > 0.0))
        throw contract_error("glr_statistic: noise power must be positive");
    if (y.size() != g.rows())
        throw contract_error("glr_statistic: observation length does not match the dictionary");
    auto qr = detail::dictionary_qr(g);
    Mat thin = qr.householderQ() * Mat::Identity(g.rows(), g.cols());
    return (thin.adjoint() * y).squaredNorm() / sigma2;
}

// Statistic rescaled for comparison against glr_threshold under the given
// convention.
inline double scaled_statistic(double raw, Convention c)
{
    return c == Convention::half_scaled ? 2.0 * raw : raw;
}

// Least-squares coefficient estimate.
inline Vec mle_alpha(const Vec &y, const Mat &g)
{
    if (y.size() != g.rows())
        throw contract_error("mle_alpha: observation length does not match the dictionary");
    auto qr = detail::dictionary_qr(g);
    return qr.solve(y);
}

// Observation dictionary of the sensing receivers: one column per
// (receiver, transmitter) pair holding that receiver's steering scaled by
// the bistatic gain and the transmitter's projected signal sequence.  Rows
// stack receiver-major, then snapshot, then element; columns use the same
// receiver-major flattening as the sensing weights.
inline Mat sensing_dictionary(const std::vector<Vec> &rx_steer, const RMat &beta,
                              const Mat &tx_gain)
{
    int m_r = int(rx_steer.size());
    int m_t = int(beta.rows());
    int t_snapshots = int(tx_gain.cols());
    if (m_r < 1 || m_t < 1 || t_snapshots < 1)
        throw contract_error("sensing_dictionary: empty receiver, transmitter, or snapshot set");
    if (int(beta.cols()) != m_r)
        throw contract_error("sensing_dictionary: gain table does not match the receiver count");
    if (int(tx_gain.rows()) != m_t)
        throw contract_error("sensing_dictionary: gain sequences do not match the transmitter count");
    if (beta.minCoeff() < 0.0)
        throw contract_error("sensing_dictionary: bistatic gains must be nonnegative");
    int n = int(rx_steer.front().size());
    for (const Vec &b : rx_steer)
        if (int(b.size()) != n)
            throw contract_error("sensing_dictionary: receivers disagree on element count");

    Mat g = Mat::Zero(Eigen::Index(m_r) * t_snapshots * n, Eigen::Index(m_r) * m_t);
    for (int r = 0; r < m_r; ++r)
        for (int t = 0; t < m_t; ++t)
        {
            double amp = std::sqrt(beta(t, r));
            for (int tau = 0; tau < t_snapshots; ++tau)
                g.block(Eigen::Index(r) * t_snapshots * n + Eigen::Index(tau) * n,
                        Eigen::Index(r) * m_t + t, n, 1) =
                    amp * tx_gain(t, tau) * rx_steer[std::size_t(r)];
        }
    return g;
}

// Everything needed to draw sensing observations: a square-root factor of
// the transmit covariance, the steering at both ends, bistatic gains, and
// the noise level.  Pure data so the draw helpers stay deterministic per
// RNG stream.
struct SensingSimulator
{
    Mat r_sqrt;                 // (n m_t) x (n m_t) factor, x = r_sqrt z
    std::vector<Vec> tx_steer;  // per transmitter, toward the target
    std::vector<Vec> rx_steer;  // per receiver
    RMat beta;                  // m_t x m_r bistatic gains
    double noise = 1.0;         // receiver noise power
    int t_snapshots = 1;

    int m_t() const { return int(tx_steer.size()); }
    int m_r() const { return int(rx_steer.size()); }
    int n() const { return rx_steer.empty() ? 0 : int(rx_steer.front().size()); }
    int q() const { return m_t() * m_r(); }
    int obs_dim() const { return m_r() * t_snapshots * n(); }

    void validate() const
    {
        if (m_t() < 1 || m_r() < 1 || t_snapshots < 1)
            throw contract_error("sensing simulator: empty transmitter, receiver, or snapshot set");
        if (!(noise > 0.0))
            throw contract_error("sensing simulator: noise power must be positive");
        Eigen::Index dim = 0;
        for (const Vec &a : tx_steer)
            dim += a.size();
        if (r_sqrt.rows() != r_sqrt.cols() || r_sqrt.rows() != dim)
            throw contract_error("sensing simulator: covariance factor does not match the aperture");
        if (int(beta.rows()) != m_t() || int(beta.cols()) != m_r())
            throw contract_error("sensing simulator: gain table dimensions are inconsistent");
    }

    // Projected signal sequences: row t holds the transmit steering applied
    // to transmitter t's block of a fresh covariance draw, one column per
    // snapshot.
    Mat draw_tx_gain(Rng &rng) const
    {
        validate();
        Mat gain(m_t(), t_snapshots);
        Vec z(r_sqrt.rows());
        int stride = n();
        for (int tau = 0; tau < t_snapshots; ++tau)
        {
            for (Eigen::Index i = 0; i < z.size(); ++i)
                z(i) = rng.cnormal(1.0);
            Vec x = r_sqrt * z;
            for (int t = 0; t < m_t(); ++t)
                gain(t, tau) = tx_steer[std::size_t(t)].dot(x.segment(Eigen::Index(t) * stride, stride));
        }
        return gain;
    }

    Vec draw_noise(Rng &rng) const
    {
        Vec w(obs_dim());
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w(i) = rng.cnormal(noise);
        return w;
    }
};

// One pure-noise statistic draw: fresh signal dictionary (the detector knows
// the transmitted waveform), noise-only observation.  Signal first, noise
// second — the order is part of the deterministic stream contract.
inline double h0_statistic_draw(const SensingSimulator &sim, Rng &rng)
{
    Mat gain = sim.draw_tx_gain(rng);
    Mat g = sensing_dictionary(sim.rx_steer, sim.beta, gain);
    Vec y = sim.draw_noise(rng);
    return glr_statistic(y, g, sim.noise);
}

// Outcome of the empirical adjudication between the two scalings.  Both
// exceedance rates are always recorded; `ok` says whether at least one of
// them is statistically consistent with the false-alarm target.
struct CalibrationReport
{
    Convention selected = Convention::half_scaled;
    double rate_paper = 0.0;  // exceedance rate of the raw statistic
    double rate_half = 0.0;   // exceedance rate of the doubled statistic
    double band = 0.0;        // three-sigma binomial half-width around the target
    long draws = 0;
    bool paper_consistent = false;
    bool half_consistent = false;
    bool ok = false;
};

inline CalibrationReport calibrate_from_draws(const DetectorConfig &cfg,
                                              const std::vector<double> &raw)
{
    if (raw.empty())
        throw contract_error("calibrate_from_draws: need at least one draw");
    double thr = glr_threshold(cfg);
    long exceed_paper = 0;
    long exceed_half = 0;
    for (double v : raw)
    {
        if (v > thr)
            ++exceed_paper;
        if (2.0 * v > thr)
            ++exceed_half;
    }
    CalibrationReport rep;
    rep.draws = long(raw.size());
    rep.rate_paper = double(exceed_paper) / double(rep.draws);
    rep.rate_half = double(exceed_half) / double(rep.draws);
    rep.band = 3.0 * std::sqrt(cfg.p_fa * (1.0 - cfg.p_fa) / double(rep.draws));
    rep.paper_consistent = std::abs(rep.rate_paper - cfg.p_fa) <= rep.band;
    rep.half_consistent = std::abs(rep.rate_half - cfg.p_fa) <= rep.band;
    rep.ok = rep.paper_consistent || rep.half_consistent;
    if (rep.paper_consistent != rep.half_consistent)
        rep.selected = rep.half_consistent ? Convention::half_scaled : Convention::paper;
    else
        rep.selected = std::abs(rep.rate_half - cfg.p_fa) <= std::abs(rep.rate_paper - cfg.p_fa)
                           ? Convention::half_scaled
                           : Convention::paper;
    return rep;
}

// Monte Carlo adjudication over fresh pure-noise draws.  Each draw owns a
// seed substream indexed by its position, so the report is identical for any
// worker count.
inline CalibrationReport calibrate_convention(const DetectorConfig &cfg,
                                              const SensingSimulator &sim, long draws,
                                              std::uint64_t seed, unsigned threads = 0)
{
    if (draws < 1)
        throw contract_error("calibrate_convention: need at least one draw");
    sim.validate();
    std::vector<double> raw(static_cast<std::size_t>(draws), 0.0);
    parallel_for(
        std::size_t(draws),
        [&](std::size_t i)
        {
            Rng rng(substream_seed(seed, std::uint64_t(i)));
            raw[i] = h0_statistic_draw(sim, rng);
        },
        threads);
    return calibrate_from_draws(cfg, raw);
}

} // namespace fisac

#endif // FISAC_DETECTION_HPP
