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

#ifndef FISAC_PHYSICS_HPP
#define FISAC_PHYSICS_HPP

#include "common.hpp"
#include "scenario.hpp"

#include <vector>

namespace fisac
{

// Axis-aligned aperture rectangle centered at the local origin.  All element
// coordinates are in wavelengths, so phases are 2*pi * (wave vector . u).
struct Rect
{
    double half_x = 0.0;
    double half_y = 0.0;

    bool contains(const Vec2 &u, double tol = 1e-9) const
    {
        return std::abs(u.x()) <= half_x + tol && std::abs(u.y()) <= half_y + tol;
    }

    Vec2 clamp(const Vec2 &u) const
    {
        return {std::clamp(u.x(), -half_x, half_x), std::clamp(u.y(), -half_y, half_y)};
    }
};

// Current element placement: one 2 x N matrix per transmitter and one point
// per user (users carry a single movable element).
struct AntennaLayout
{
    std::vector<RMat> tx;
    std::vector<Vec2> ue;
    Rect tx_region;
    Rect ue_region;
};

// Field response of L plane waves observed at aperture position u.
inline Vec field_vector(const RMat &wv, const Vec2 &u)
{
    Vec a(wv.cols());
    for (Eigen::Index i = 0; i < wv.cols(); ++i)
    {
        double phase = -two_pi * (wv(0, i) * u.x() + wv(1, i) * u.y());
        a(i) = cplx(std::cos(phase), std::sin(phase));
    }
    return a;
}

// L x N field response matrix across N aperture positions.
inline Mat field_matrix(const RMat &wv, const RMat &pos)
{
    Mat a(wv.cols(), pos.cols());
    for (Eigen::Index c = 0; c < pos.cols(); ++c)
        a.col(c) = field_vector(wv, pos.col(c));
    return a;
}

// Single-direction steering vector across N aperture positions.
inline Vec steering_vector(const Vec2 &wv, const RMat &pos)
{
    Vec a(pos.cols());
    for (Eigen::Index c = 0; c < pos.cols(); ++c)
    {
        double phase = -two_pi * (wv.x() * pos(0, c) + wv.y() * pos(1, c));
        a(c) = cplx(std::cos(phase), std::sin(phase));
    }
    return a;
}

// Channel from one transmitter's aperture to one user: h = A^H Sigma^H b.
inline Vec link_channel(const LinkChannel &link, const RMat &tx_pos, const Vec2 &v)
{
    Mat a = field_matrix(link.aod, tx_pos);
    Vec b = field_vector(link.aoa, v);
    return a.adjoint() * (link.gains.conjugate().asDiagonal() * b);
}

// Stacked channel of user k across all transmitters (length N * M_t).
inline Vec user_channel(const ChannelSet &ch, const AntennaLayout &lay, int k)
{
    if (k < 0 || k >= ch.k)
        throw contract_error("user_channel: user index out of range");
    if (int(lay.tx.size()) != ch.m_t || int(lay.ue.size()) != ch.k)
        throw contract_error("user_channel: layout does not match the channel set");
    Vec h(ch.n * ch.m_t);
    for (int t = 0; t < ch.m_t; ++t)
    {
        if (lay.tx[std::size_t(t)].cols() != ch.n)
            throw contract_error("user_channel: wrong element count in layout");
        h.segment(t * ch.n, ch.n) =
            link_channel(ch.links[std::size_t(t)][std::size_t(k)], lay.tx[std::size_t(t)], lay.ue[std::size_t(k)]);
    }
    return h;
}

// N x N block (i, j) of a stacked matrix, i.e. E_i A E_j^H without forming
// the selection matrices.
inline auto block_of(const Mat &a, int i, int j, int n)
{
    if (n < 1 || i < 0 || j < 0 || (i + 1) * n > a.rows() || (j + 1) * n > a.cols())
        throw contract_error("block_of: block indices out of range");
    return a.block(i * n, j * n, n, n);
}

// Trace of diagonal block t: the power transmitter t radiates under
// covariance r.
inline double tx_power(const Mat &r, int t, int n)
{
    return block_of(r, t, t, n).trace().real();
}

// Transmit covariance family: per-user parts R_k plus the total R.  The
// residual R - sum_k R_k is the sensing-only component.
struct TransmitCovariances
{
    std::vector<Mat> per_user;
    Mat total;

    Mat residual() const
    {
        Mat r = total;
        for (const auto &m : per_user)
            r -= m;
        return r;
    }
};

// SINR of user k under the covariance family.  Interference is clamped at
// zero if rounding pushed it negative; `clamped` reports that.
inline double sinr_value(const Vec &h, const TransmitCovariances &cov, int k, double noise,
                         bool *clamped = nullptr)
{
    if (k < 0 || k >= int(cov.per_user.size()))
        throw contract_error("sinr_value: user index out of range");
    if (!(noise > 0.0))
        throw contract_error("sinr_value: noise power must be positive");
    double signal = std::max(0.0, std::real(h.dot(cov.per_user[std::size_t(k)] * h)));
    double interf = std::real(h.dot((cov.total - cov.per_user[std::size_t(k)]) * h));
    if (clamped)
        *clamped = interf < 0.0;
    interf = std::max(0.0, interf);
    return signal / (interf + noise);
}

// Shifted covariance (1 + gamma) R_k - gamma R entering the constraint margin.
inline Mat shifted_covariance(const TransmitCovariances &cov, int k, double gamma)
{
    if (k < 0 || k >= int(cov.per_user.size()))
        throw contract_error("shifted_covariance: user index out of range");
    return (1.0 + gamma) * cov.per_user[std::size_t(k)] - gamma * cov.total;
}

// Margin of the SINR constraint as a quadratic form: positive iff user k's
// SINR exceeds gamma.  Same units as signal power; divide by the noise power
// for the dimensionless version used in penalized objectives.
inline double zeta_value(const Vec &h, const TransmitCovariances &cov, int k, double gamma,
                         double noise)
{
    return std::real(h.dot(shifted_covariance(cov, k, gamma) * h)) - gamma * noise;
}

// Weighting of the sensing correlation form: reflection statistics over the
// receivers (block r of psi), bistatic gains, and the snapshot/aperture
// scale.  psi already folds in the 1/noise factor.
struct SensingWeights
{
    Mat psi;       // (m_r m_t) x (m_r m_t), Hermitian PSD
    RMat beta;     // m_t x m_r
    int t_snapshots = 1;
    int n = 1;
    double noise = 1.0;

    // coupling between transmitters i and j accumulated over receivers
    Mat coupling() const
    {
        int m_t = int(beta.rows());
        int m_r = int(beta.cols());
        Mat c = Mat::Zero(m_t, m_t);
        for (int r = 0; r < m_r; ++r)
            for (int i = 0; i < m_t; ++i)
                for (int j = 0; j < m_t; ++j)
                    c(i, j) += psi(r * m_t + i, r * m_t + j) * std::sqrt(beta(i, r) * beta(j, r));
        return c;
    }
};

namespace detail
{

inline void check_psd_weights(const Mat &psi)
{
    Mat h = hermitian_part(psi, 1e-9, "sensing weights");
    Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1e-300, h.norm()))
        throw contract_error("sensing weights: psi must be positive semidefinite");
}

} // namespace detail

// Expectation weighting: independent reflections make psi block-diagonal with
// per-transmitter reflection variances over the receiver noise.
inline SensingWeights expected_weights(const ChannelSet &ch, int t_snapshots)
{
    SensingWeights w;
    w.beta = ch.beta;
    w.t_snapshots = t_snapshots;
    w.n = ch.n;
    w.noise = ch.noise_rx;
    w.psi = Mat::Zero(ch.m_r * ch.m_t, ch.m_r * ch.m_t);
    for (int r = 0; r < ch.m_r; ++r)
        for (int t = 0; t < ch.m_t; ++t)
            w.psi(r * ch.m_t + t, r * ch.m_t + t) = ch.rcs(t, r) / ch.noise_rx;
    return w;
}

// Genie weighting: one realized reflection draw per hop pair, psi = a a^H / noise.
inline SensingWeights genie_weights(const ChannelSet &ch, int t_snapshots, Rng &rng)
{
    SensingWeights w;
    w.beta = ch.beta;
    w.t_snapshots = t_snapshots;
    w.n = ch.n;
    w.noise = ch.noise_rx;
    Vec alpha(ch.m_r * ch.m_t);
    for (int r = 0; r < ch.m_r; ++r)
        for (int t = 0; t < ch.m_t; ++t)
            alpha(r * ch.m_t + t) = rng.cnormal(ch.rcs(t, r));
    w.psi = (alpha * alpha.adjoint()) / ch.noise_rx;
    return w;
}

// Quadratic form Q of the sensing metric: omega = Re tr(Q R).  Q folds in the
// snapshot count, aperture size, coupling coefficients, and the transmit
// steering at the current layout; it is Hermitian PSD by construction.
inline Mat sensing_quadratic(const ChannelSet &ch, const AntennaLayout &lay,
                             const SensingWeights &wts)
{
    if (int(lay.tx.size()) != ch.m_t)
        throw contract_error("sensing_quadratic: layout does not match the channel set");
    detail::check_psd_weights(wts.psi);
    const int n = ch.n;
    const double scale = double(wts.t_snapshots) * double(wts.n);
    Mat c = wts.coupling();
    std::vector<Vec> a;
    a.reserve(std::size_t(ch.m_t));
    for (int t = 0; t < ch.m_t; ++t)
        a.push_back(steering_vector(ch.sensing_wv.col(t), lay.tx[std::size_t(t)]));
    Mat q = Mat::Zero(n * ch.m_t, n * ch.m_t);
    for (int i = 0; i < ch.m_t; ++i)
        for (int j = 0; j < ch.m_t; ++j)
            q.block(j * n, i * n, n, n).noalias() +=
                (scale * c(i, j)) * (a[std::size_t(j)] * a[std::size_t(i)].adjoint());
    return q;
}

// Sensing metric: Re tr(Q R).  The imaginary residue must vanish (both inputs
// Hermitian); a visible residue means a broken caller contract.
inline double omega_value(const Mat &q, const Mat &r)
{
    if (q.rows() != r.rows() || q.cols() != r.cols() || q.rows() != q.cols())
        throw contract_error("omega_value: dimension mismatch");
    cplx tr = (q * r).trace();
    double scale = std::max(std::abs(tr.real()), 1e-12 * (q.norm() * r.norm() + 1.0));
    if (std::abs(tr.imag()) > 1e-9 * scale)
        throw contract_error("omega_value: imaginary residue indicates non-Hermitian inputs");
    return tr.real();
}

} // namespace fisac

#endif // FISAC_PHYSICS_HPP
