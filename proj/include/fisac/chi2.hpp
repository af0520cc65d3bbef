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

#ifndef FISAC_CHI2_HPP
#define FISAC_CHI2_HPP

#include "common.hpp"

#include <cmath>

namespace fisac
{

namespace detail
{

// Regularized lower incomplete gamma P(s, x), series branch (x < s + 1).
inline double gamma_p_series(double s, double x)
{
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 10000; ++n)
    {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16)
            break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Regularized upper incomplete gamma Q(s, x), continued fraction (modified
// Lentz), valid for x >= s + 1.
inline double gamma_q_cf(double s, double x)
{
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i)
    {
        double an = -double(i) * (double(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16)
            break;
    }
    return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

inline double gamma_p(double s, double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x < s + 1.0)
        return gamma_p_series(s, x);
    return 1.0 - gamma_q_cf(s, x);
}

} // namespace detail

// CDF of the central chi-squared distribution with `dof` degrees of freedom.
inline double chi2_cdf(double x, int dof)
{
    if (dof < 1)
        throw contract_error("chi2_cdf: dof must be >= 1");
    if (x <= 0.0)
        return 0.0;
    return detail::gamma_p(0.5 * dof, 0.5 * x);
}

// Quantile (inverse CDF) by bracketed bisection; |F(q) - p| <= ~1e-12.
inline double chi2_quantile(double p, int dof)
{
    if (dof < 1)
        throw contract_error("chi2_quantile: dof must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw contract_error("chi2_quantile: p must lie strictly in (0, 1)");
    double lo = 0.0;
    double hi = dof + 10.0;
    while (chi2_cdf(hi, dof) < p)
        hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, lo); ++it)
    {
        double mid = 0.5 * (lo + hi);
        (chi2_cdf(mid, dof) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// CDF of the noncentral chi-squared distribution: Poisson-weighted mixture of
// central CDFs, summed center-out from the modal Poisson index so far tails
// never swamp the accumulation.  Truncation stops once the remaining Poisson
// mass is below 1e-12 (the mixture factors are <= 1, so that bounds the
// truncation error).
inline double nc_chi2_cdf(double x, int dof, double nc)
{
    if (dof < 1)
        throw contract_error("nc_chi2_cdf: dof must be >= 1");
    if (nc < 0.0)
        throw contract_error("nc_chi2_cdf: noncentrality must be >= 0");
    if (nc > 1e6)
        throw numeric_error("nc_chi2_cdf: noncentrality above 1e6 overflows the series");
    if (x <= 0.0)
        return 0.0;
    if (nc == 0.0)
        return chi2_cdf(x, dof);

    const double half = 0.5 * nc;
    auto log_weight = [&](long j) { return -half + j * std::log(half) - std::lgamma(j + 1.0); };

    long j0 = long(half);
    double sum = 0.0;
    double mass = 0.0;

    double w = std::exp(log_weight(j0));
    sum += w * chi2_cdf(x, dof + 2 * int(j0));
    mass += w;

    // expand upward and downward; weights decay monotonically on both sides
    double wu = w;
    for (long j = j0 + 1; mass < 1.0 - 1e-12 && j < j0 + 100000; ++j)
    {
        wu *= half / double(j);
        if (wu == 0.0)
            break;
        sum += wu * chi2_cdf(x, dof + 2 * int(j));
        mass += wu;
        if (wu < 1e-18 && j > j0 + 2)
            break;
    }
    double wd = w;
    for (long j = j0; mass < 1.0 - 1e-12 && j >= 1; --j)
    {
        wd *= double(j) / half;
        if (wd == 0.0)
            break;
        sum += wd * chi2_cdf(x, dof + 2 * int(j - 1));
        mass += wd;
        if (wd < 1e-18 && j < j0 - 1)
            break;
    }
    return std::min(1.0, sum);
}

} // namespace fisac

#endif // FISAC_CHI2_HPP
