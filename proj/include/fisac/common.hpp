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

#ifndef FISAC_COMMON_HPP
#define FISAC_COMMON_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fisac
{

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Error taxonomy: configuration/input problems, geometric impossibilities,
// broken caller contracts, and numerical failures are kept distinct so the
// CLI can map them to exit codes and tests can assert on the class.
struct config_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct geometry_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct contract_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

inline double linear_to_db(double lin)
{
    return 10.0 * std::log10(lin);
}

// dBm milliwatt reference; all internal powers are watts.
inline double dbm_to_watt(double dbm)
{
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

// Hermitian part (A + A^H)/2.  The skew part is tolerated up to `rel_tol`
// times the Hermitian part's norm; anything larger means the caller handed in
// a matrix that is not a covariance/quadratic form and gets rejected.
inline Mat hermitian_part(const Mat &a, double rel_tol = 1e-9, const char *what = "matrix")
{
    if (a.rows() != a.cols())
        throw contract_error(std::string(what) + ": expected a square matrix");
    Mat h = 0.5 * (a + a.adjoint());
    double skew = (a - a.adjoint()).norm() * 0.5;
    if (skew > rel_tol * std::max(1e-300, h.norm()))
        throw contract_error(std::string(what) + ": matrix is not Hermitian (relative skew " +
                             std::to_string(skew / std::max(1e-300, h.norm())) + ")");
    return h;
}

// Hermitian square root of a positive-semidefinite matrix.  Roundoff-level
// negative eigenvalues are clamped to zero; anything beyond the tolerance is
// a genuinely indefinite input and gets rejected.
inline Mat psd_sqrt(const Mat &a, double rel_tol = 1e-9, const char *what = "matrix")
{
    Mat h = hermitian_part(a, rel_tol, what);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success)
        throw numeric_error(std::string(what) + ": eigendecomposition failed");
    RVec lam = es.eigenvalues();
    double floor = -rel_tol * std::max(1e-300, h.norm());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
    {
        if (lam(i) < floor)
            throw contract_error(std::string(what) + ": matrix is not positive semidefinite");
        lam(i) = std::sqrt(std::max(0.0, lam(i)));
    }
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

// Shortest-form decimal that round-trips a double; used for all CSV output so
// repeated runs with the same seed produce byte-identical files.
inline std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer the shortest representation that still round-trips
    for (int prec = 1; prec <= 16; ++prec)
    {
        char cand[64];
        std::snprintf(cand, sizeof cand, "%.*g", prec, v);
        if (std::strtod(cand, nullptr) == v)
            return cand;
    }
    return buf;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.  Results must be
// written to caller-owned per-index slots; the schedule is static so output
// never depends on timing.
template <typename Fn>
inline void parallel_for(std::size_t n, Fn &&fn, unsigned threads = 0)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || n <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back(
            [&fn, n, w, threads]()
            {
                for (std::size_t i = w; i < n; i += threads)
                    fn(i);
            });
    for (auto &t : pool)
        t.join();
}

} // namespace fisac

#endif // FISAC_COMMON_HPP
