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

#ifndef FISAC_CONIC_HPP
#define FISAC_CONIC_HPP

#include "fisac/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

// Dense primal-dual interior-point solver for small conic programs
//
//   minimize    c'x   subject to   A x = b,   x in K,
//
// where K is a product of nonnegative orthants, second-order cones, and
// (svec-packed) positive-semidefinite cones.  The homogeneous self-dual
// model provides infeasibility certificates; Nesterov–Todd scalings keep the
// primal and dual symmetric; a predictor-corrector step drives the
// complementarity gap.  Everything is dense: the target problems have a few
// thousand variables and a handful of equality rows.

namespace fisac
{

enum class cone_kind
{
    nonneg,
    soc,
    psd, // dim is the matrix order; the variable segment is svec-packed
};

struct cone
{
    cone_kind kind = cone_kind::nonneg;
    int dim = 0;
};

inline Eigen::Index cone_length(const cone &c)
{
    if (c.kind == cone_kind::psd)
        return Eigen::Index(c.dim) * (c.dim + 1) / 2;
    return c.dim;
}

// Symmetric packing with sqrt(2) on the off-diagonal so that
// svec(a) . svec(b) = tr(a b).  Lower triangle, column major.
inline RVec svec(const RMat &s)
{
    if (s.rows() != s.cols())
        throw contract_error("svec: expected a square matrix");
    int m = int(s.rows());
    RVec v(Eigen::Index(m) * (m + 1) / 2);
    const double rt2 = std::sqrt(2.0);
    Eigen::Index at = 0;
    for (int j = 0; j < m; ++j)
    {
        v(at++) = s(j, j);
        for (int i = j + 1; i < m; ++i)
            v(at++) = rt2 * 0.5 * (s(i, j) + s(j, i));
    }
    return v;
}

inline int svec_order(Eigen::Index len)
{
    int m = int((std::sqrt(8.0 * double(len) + 1.0) - 1.0) / 2.0 + 0.5);
    if (Eigen::Index(m) * (m + 1) / 2 != len)
        throw contract_error("smat: length " + std::to_string(len) +
                             " is not a packed symmetric size");
    return m;
}

inline RMat smat(const RVec &v)
{
    int m = svec_order(v.size());
    RMat s(m, m);
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    Eigen::Index at = 0;
    for (int j = 0; j < m; ++j)
    {
        s(j, j) = v(at++);
        for (int i = j + 1; i < m; ++i)
        {
            double val = inv_rt2 * v(at++);
            s(i, j) = val;
            s(j, i) = val;
        }
    }
    return s;
}

// Real embedding of a complex matrix: [[Re, -Im], [Im, Re]].  Hermitian input
// gives a symmetric output whose eigenvalues are those of the input, each
// twice, and whose trace pairing doubles: tr(emb(a) emb(b)) = 2 Re tr(a b).
// Callers building objectives therefore apply a half factor.
inline RMat complex_embedding(const Mat &a)
{
    Eigen::Index n = a.rows();
    if (a.cols() != n)
        throw contract_error("complex_embedding: expected a square matrix");
    RMat e(2 * n, 2 * n);
    e.topLeftCorner(n, n) = a.real();
    e.bottomRightCorner(n, n) = a.real();
    e.topRightCorner(n, n) = -a.imag();
    e.bottomLeftCorner(n, n) = a.imag();
    return e;
}

inline Mat embedded_to_complex(const RMat &e)
{
    if (e.rows() != e.cols() || e.rows() % 2 != 0)
        throw contract_error("embedded_to_complex: expected an even square matrix");
    Eigen::Index n = e.rows() / 2;
    RMat re = 0.5 * (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n));
    RMat im = 0.5 * (e.bottomLeftCorner(n, n) - e.topRightCorner(n, n));
    return re.cast<cplx>() + cplx(0.0, 1.0) * im.cast<cplx>();
}

struct conic_problem
{
    RVec c;                  // objective
    RMat a;                  // equality constraint matrix
    RVec b;                  // right-hand side
    std::vector<cone> cones; // variable partition, in order

    Eigen::Index num_vars() const
    {
        Eigen::Index n = 0;
        for (const cone &c : cones)
            n += cone_length(c);
        return n;
    }

    void validate() const
    {
        if (cones.empty())
            throw config_error("conic problem: no cones");
        for (const cone &co : cones)
        {
            if (co.dim < 1)
                throw config_error("conic problem: cone dimension must be positive");
            if (co.kind == cone_kind::soc && co.dim < 2)
                throw config_error("conic problem: second-order cones need dimension >= 2");
            if (co.kind == cone_kind::psd && co.dim > 64)
                throw config_error("conic problem: semidefinite blocks are limited to order 64");
        }
        Eigen::Index n = num_vars();
        if (c.size() != n)
            throw config_error("conic problem: objective length does not match the cones");
        if (a.cols() != n)
            throw config_error("conic problem: constraint columns do not match the cones");
        if (a.rows() != b.size())
            throw config_error("conic problem: right-hand side length does not match the rows");
        if (a.rows() < 1)
            throw config_error("conic problem: need at least one equality row");
        if (!c.allFinite() || !a.allFinite() || !b.allFinite())
            throw config_error("conic problem: data must be finite");
    }
};

enum class solve_status
{
    optimal,
    primal_infeasible,
    dual_infeasible,
    max_iterations,
};

inline const char *status_name(solve_status s)
{
    switch (s)
    {
    case solve_status::optimal:
        return "optimal";
    case solve_status::primal_infeasible:
        return "primal-infeasible";
    case solve_status::dual_infeasible:
        return "dual-infeasible";
    default:
        return "max-iterations";
    }
}

struct solver_options
{
    double tol = 1e-7;           // relative residual and gap target
    int max_iter = 200;
    double step_fraction = 0.99; // fraction of the distance to the boundary
    bool equilibrate = true;     // row scaling plus objective normalization
};

struct conic_solution
{
    solve_status status = solve_status::max_iterations;
    RVec x, y, z;       // optimal: solution triple; infeasible: certificate
    double tau = 0.0;
    double kappa = 0.0;
    double primal_res = std::numeric_limits<double>::infinity();
    double dual_res = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    double primal_obj = std::numeric_limits<double>::quiet_NaN();
    double dual_obj = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
};

namespace conic_detail
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct cone_scaling
{
    // nonneg: elementwise scaling w = sqrt(x/z)
    RVec w;
    // soc: W = beta (2 wbar wbar' - J)
    RVec wbar;
    double beta = 1.0;
    // psd: scaling factor r with lambda = r' z_mat r = r^{-1} x_mat r^{-T}
    RMat r;
    RMat rinv;
};

struct scaling_state
{
    std::vector<cone_scaling> blocks;
    RVec lambda; // scaled variable, flat over all cones
};

inline double soc_residual(const Eigen::Ref<const RVec> &v)
{
    return v(0) * v(0) - v.tail(v.size() - 1).squaredNorm();
}

// J v for the hyperbolic reflection J = diag(1, -1, ..., -1).
inline RVec soc_reflect(const Eigen::Ref<const RVec> &v)
{
    RVec out = -v;
    out(0) = v(0);
    return out;
}

inline scaling_state compute_scalings(const std::vector<cone> &cones, const RVec &x, const RVec &z)
{
    scaling_state st;
    st.blocks.resize(cones.size());
    st.lambda = RVec::Zero(x.size());
    Eigen::Index at = 0;
    for (std::size_t ci = 0; ci < cones.size(); ++ci)
    {
        const cone &co = cones[ci];
        Eigen::Index len = cone_length(co);
        auto xs = x.segment(at, len);
        auto zs = z.segment(at, len);
        cone_scaling &sc = st.blocks[ci];
        switch (co.kind)
        {
        case cone_kind::nonneg:
        {
            if (xs.minCoeff() <= 0.0 || zs.minCoeff() <= 0.0)
                throw numeric_error("conic: iterate left the nonnegative cone");
            sc.w = (xs.array() / zs.array()).sqrt();
            st.lambda.segment(at, len) = (xs.array() * zs.array()).sqrt();
            break;
        }
        case cone_kind::soc:
        {
            double dx = soc_residual(xs);
            double dz = soc_residual(zs);
            if (dx <= 0.0 || dz <= 0.0 || xs(0) <= 0.0 || zs(0) <= 0.0)
                throw numeric_error("conic: iterate left the second-order cone");
            RVec xbar = xs / std::sqrt(dx);
            RVec zbar = zs / std::sqrt(dz);
            double gamma = std::sqrt(0.5 * (1.0 + xbar.dot(zbar)));
            // Scaling point wbar (unit hyperbolic norm), then its Jordan
            // square root q, so that W = beta (2 q q' - J) is the square
            // root of the quadratic representation at the scaling point.
            RVec wpt = (xbar + soc_reflect(zbar)) / (2.0 * gamma);
            RVec q = wpt;
            q(0) = std::sqrt(0.5 * (wpt(0) + 1.0));
            q.tail(len - 1) = wpt.tail(len - 1) / (2.0 * q(0));
            sc.wbar = q;
            sc.beta = std::pow(dx / dz, 0.25);
            // lambda = W z evaluated through the rank-one structure.
            double wz = sc.wbar.dot(zs);
            st.lambda.segment(at, len) = sc.beta * (2.0 * wz * sc.wbar - soc_reflect(zs));
            break;
        }
        case cone_kind::psd:
        {
            RMat xm = smat(RVec(xs));
            RMat zm = smat(RVec(zs));
            Eigen::LLT<RMat> lx(xm);
            Eigen::LLT<RMat> lz(zm);
            if (lx.info() != Eigen::Success || lz.info() != Eigen::Success)
                throw numeric_error("conic: iterate left the semidefinite cone");
            RMat lxm = lx.matrixL();
            RMat lzm = lz.matrixL();
            Eigen::JacobiSVD<RMat> svd(RMat(lzm.transpose() * lxm),
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
            RVec sig = svd.singularValues();
            if (sig.minCoeff() <= 0.0)
                throw numeric_error("conic: degenerate semidefinite scaling");
            RVec inv_sqrt = sig.array().sqrt().inverse();
            sc.r = lxm * svd.matrixV() * inv_sqrt.asDiagonal();
            sc.rinv = inv_sqrt.asDiagonal() * svd.matrixU().transpose() * lzm.transpose();
            st.lambda.segment(at, len) = svec(RMat(sig.asDiagonal()));
            break;
        }
        }
        at += len;
    }
    return st;
}

// Per-cone application of the scaling operators.  All of them act blockwise
// on flat vectors in cone order.
enum class scale_op
{
    w,     // W v
    winv,  // W^{-1} v
    wtinv, // W^{-T} v
    h,     // W^2 v (the elimination operator)
};

inline RVec apply_scaling(const std::vector<cone> &cones, const scaling_state &st, const RVec &v,
                          scale_op op)
{
    RVec out(v.size());
    Eigen::Index at = 0;
    for (std::size_t ci = 0; ci < cones.size(); ++ci)
    {
        const cone &co = cones[ci];
        Eigen::Index len = cone_length(co);
        auto vs = v.segment(at, len);
        const cone_scaling &sc = st.blocks[ci];
        switch (co.kind)
        {
        case cone_kind::nonneg:
        {
            RVec scale;
            switch (op)
            {
            case scale_op::w:
                scale = sc.w;
                break;
            case scale_op::winv:
            case scale_op::wtinv:
                scale = sc.w.array().inverse();
                break;
            case scale_op::h:
                scale = sc.w.array().square();
                break;
            }
            out.segment(at, len) = vs.array() * scale.array();
            break;
        }
        case cone_kind::soc:
        {
            // W   = beta (2 wbar wbar' - J)
            // W^-1 = (2 J wbar wbar' J - J) / beta, and W is symmetric.
            auto apply_w_once = [&sc](const RVec &u)
            { return RVec(sc.beta * (2.0 * sc.wbar.dot(u) * sc.wbar - soc_reflect(u))); };
            auto apply_winv_once = [&sc](const RVec &u)
            {
                RVec ju = soc_reflect(u);
                RVec jw = soc_reflect(sc.wbar);
                return RVec((2.0 * sc.wbar.dot(ju) * jw - ju) / sc.beta);
            };
            RVec u = vs;
            switch (op)
            {
            case scale_op::w:
                out.segment(at, len) = apply_w_once(u);
                break;
            case scale_op::winv:
            case scale_op::wtinv:
                out.segment(at, len) = apply_winv_once(u);
                break;
            case scale_op::h:
                out.segment(at, len) = apply_w_once(apply_w_once(u));
                break;
            }
            break;
        }
        case cone_kind::psd:
        {
            RMat m = smat(RVec(vs));
            RMat res;
            switch (op)
            {
            case scale_op::w:
                res = sc.r.transpose() * m * sc.r;
                break;
            case scale_op::winv:
                res = sc.rinv.transpose() * m * sc.rinv;
                break;
            case scale_op::wtinv:
                res = sc.rinv * m * sc.rinv.transpose();
                break;
            case scale_op::h:
            {
                RMat s = sc.r * sc.r.transpose();
                res = s * m * s;
                break;
            }
            }
            out.segment(at, len) = svec(RMat(0.5 * (res + res.transpose())));
            break;
        }
        }
        at += len;
    }
    return out;
}

inline RVec apply_w(const std::vector<cone> &cones, const scaling_state &st, const RVec &v)
{
    return apply_scaling(cones, st, v, scale_op::w);
}
inline RVec apply_winv(const std::vector<cone> &cones, const scaling_state &st, const RVec &v)
{
    return apply_scaling(cones, st, v, scale_op::winv);
}
inline RVec apply_wtinv(const std::vector<cone> &cones, const scaling_state &st, const RVec &v)
{
    return apply_scaling(cones, st, v, scale_op::wtinv);
}
inline RVec apply_h(const std::vector<cone> &cones, const scaling_state &st, const RVec &v)
{
    return apply_scaling(cones, st, v, scale_op::h);
}

// Symmetrized Jordan product blockwise: elementwise for the orthant,
// arrowhead for second-order cones, (AB + BA)/2 for semidefinite blocks.
inline RVec jordan_product(const std::vector<cone> &cones, const RVec &a, const RVec &b)
{
    RVec out(a.size());
    Eigen::Index at = 0;
    for (const cone &co : cones)
    {
        Eigen::Index len = cone_length(co);
        auto as = a.segment(at, len);
        auto bs = b.segment(at, len);
        switch (co.kind)
        {
        case cone_kind::nonneg:
            out.segment(at, len) = as.array() * bs.array();
            break;
        case cone_kind::soc:
        {
            out(at) = as.dot(bs);
            out.segment(at + 1, len - 1) =
                as(0) * bs.tail(len - 1) + bs(0) * as.tail(len - 1);
            break;
        }
        case cone_kind::psd:
        {
            RMat am = smat(RVec(as));
            RMat bm = smat(RVec(bs));
            out.segment(at, len) = svec(RMat(0.5 * (am * bm + bm * am)));
            break;
        }
        }
        at += len;
    }
    return out;
}

// Solve lambda o u = d blockwise for u, where lambda is the scaled variable.
inline RVec lambda_solve(const std::vector<cone> &cones, const scaling_state &st, const RVec &d)
{
    RVec out(d.size());
    Eigen::Index at = 0;
    for (const cone &co : cones)
    {
        Eigen::Index len = cone_length(co);
        auto ls = st.lambda.segment(at, len);
        auto ds = d.segment(at, len);
        switch (co.kind)
        {
        case cone_kind::nonneg:
            out.segment(at, len) = ds.array() / ls.array();
            break;
        case cone_kind::soc:
        {
            double delta = ls(0) * ls(0) - ls.tail(len - 1).squaredNorm();
            double u0 = (ls(0) * ds(0) - ls.tail(len - 1).dot(ds.tail(len - 1))) / delta;
            out(at) = u0;
            out.segment(at + 1, len - 1) = (ds.tail(len - 1) - u0 * ls.tail(len - 1)) / ls(0);
            break;
        }
        case cone_kind::psd:
        {
            // lambda is diagonal by construction, so the Sylvester solve is
            // the classic two-sided divided difference.
            RMat lm = smat(RVec(ls));
            RMat dm = smat(RVec(ds));
            RMat um(lm.rows(), lm.cols());
            for (Eigen::Index i = 0; i < lm.rows(); ++i)
                for (Eigen::Index j = 0; j < lm.cols(); ++j)
                    um(i, j) = 2.0 * dm(i, j) / (lm(i, i) + lm(j, j));
            out.segment(at, len) = svec(um);
            break;
        }
        }
        at += len;
    }
    return out;
}

inline RVec cone_identity(const std::vector<cone> &cones)
{
    Eigen::Index total = 0;
    for (const cone &c : cones)
        total += cone_length(c);
    RVec e = RVec::Zero(total);
    Eigen::Index at = 0;
    for (const cone &co : cones)
    {
        Eigen::Index len = cone_length(co);
        switch (co.kind)
        {
        case cone_kind::nonneg:
            e.segment(at, len).setOnes();
            break;
        case cone_kind::soc:
            e(at) = 1.0;
            break;
        case cone_kind::psd:
            e.segment(at, len) = svec(RMat::Identity(co.dim, co.dim));
            break;
        }
        at += len;
    }
    return e;
}

inline int cone_degree(const std::vector<cone> &cones)
{
    int deg = 0;
    for (const cone &co : cones)
    {
        switch (co.kind)
        {
        case cone_kind::nonneg:
            deg += co.dim;
            break;
        case cone_kind::soc:
            deg += 1;
            break;
        case cone_kind::psd:
            deg += co.dim;
            break;
        }
    }
    return deg;
}

// Smallest positive root of c2 a^2 + c1 a + c0 = 0 (c0 > 0), or infinity.
inline double smallest_positive_root(double c2, double c1, double c0)
{
    if (std::abs(c2) <= 1e-14 * (std::abs(c1) + std::abs(c0)))
    {
        if (c1 < 0.0)
            return -c0 / c1;
        return kInf;
    }
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0)
        return kInf;
    double root = std::sqrt(disc);
    double q = -0.5 * (c1 + std::copysign(root, c1));
    double best = kInf;
    if (c2 != 0.0)
    {
        double r = q / c2;
        if (r > 0.0)
            best = std::min(best, r);
    }
    if (q != 0.0)
    {
        double r = c0 / q;
        if (r > 0.0)
            best = std::min(best, r);
    }
    return best;
}

// Largest step a with v + a dv still inside the cone product (infinite when
// the direction never leaves it).
inline double boundary_step(const std::vector<cone> &cones, const RVec &v, const RVec &dv)
{
    double step = kInf;
    Eigen::Index at = 0;
    for (const cone &co : cones)
    {
        Eigen::Index len = cone_length(co);
        auto vs = v.segment(at, len);
        auto ds = dv.segment(at, len);
        switch (co.kind)
        {
        case cone_kind::nonneg:
        {
            for (Eigen::Index i = 0; i < len; ++i)
                if (ds(i) < 0.0)
                    step = std::min(step, -vs(i) / ds(i));
            break;
        }
        case cone_kind::soc:
        {
            double c2 = ds(0) * ds(0) - ds.tail(len - 1).squaredNorm();
            double c1 = 2.0 * (vs(0) * ds(0) - vs.tail(len - 1).dot(ds.tail(len - 1)));
            double c0 = soc_residual(vs);
            step = std::min(step, smallest_positive_root(c2, c1, c0));
            if (ds(0) < 0.0)
                step = std::min(step, -vs(0) / ds(0));
            break;
        }
        case cone_kind::psd:
        {
            RMat vm = smat(RVec(vs));
            RMat dm = smat(RVec(ds));
            Eigen::LLT<RMat> llt(vm);
            if (llt.info() != Eigen::Success)
                return 0.0;
            RMat l = llt.matrixL();
            RMat t = l.triangularView<Eigen::Lower>().solve(dm);
            RMat s = l.triangularView<Eigen::Lower>().solve(RMat(t.transpose()));
            Eigen::SelfAdjointEigenSolver<RMat> es(RMat(0.5 * (s + s.transpose())),
                                                   Eigen::EigenvaluesOnly);
            double emin = es.eigenvalues().minCoeff();
            if (emin < 0.0)
                step = std::min(step, -1.0 / emin);
            break;
        }
        }
        at += len;
    }
    return step;
}

} // namespace conic_detail

inline conic_solution solve(const conic_problem &prob, const solver_options &opts = {})
{
    using namespace conic_detail;
    prob.validate();

    const Eigen::Index n = prob.num_vars();
    const Eigen::Index p = prob.a.rows();

    // Working copy with row equilibration and uniform objective/rhs scales.
    RMat a = prob.a;
    RVec b = prob.b;
    RVec c = prob.c;
    RVec row_scale = RVec::Ones(p);
    double c_scale = 1.0;
    double b_scale = 1.0;
    if (opts.equilibrate)
    {
        for (Eigen::Index i = 0; i < p; ++i)
        {
            double s = a.row(i).cwiseAbs().maxCoeff();
            if (s > 1e-12)
            {
                row_scale(i) = 1.0 / s;
                a.row(i) *= row_scale(i);
                b(i) *= row_scale(i);
            }
        }
        c_scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        c /= c_scale;
        b_scale = std::max(1.0, b.cwiseAbs().maxCoeff());
        b /= b_scale;
    }

    const double a_norm = prob.a.norm();
    const double b_norm = prob.b.norm();
    const double c_norm = prob.c.norm();
    const int deg = cone_degree(prob.cones);

    RVec e = cone_identity(prob.cones);
    RVec x = e;
    RVec z = e;
    RVec y = RVec::Zero(p);
    double tau = 1.0;
    double kappa = 1.0;

    conic_solution best;
    best.x = RVec::Zero(n);
    best.y = RVec::Zero(p);
    best.z = RVec::Zero(n);
    double best_err = kInf;

    // Map a scaled iterate back to the original problem's coordinates.
    auto original_triple = [&](const RVec &xs, const RVec &ys, const RVec &zs, double scale)
    {
        RVec xo = (b_scale / scale) * xs;
        RVec yo = (c_scale / scale) * (row_scale.asDiagonal() * ys);
        RVec zo = (c_scale / scale) * zs;
        return std::make_tuple(xo, yo, zo);
    };

    conic_solution sol;
    sol.x = RVec::Zero(n);
    sol.y = RVec::Zero(p);
    sol.z = RVec::Zero(n);

    int iter = 0;
    for (; iter < opts.max_iter; ++iter)
    {
        // Residuals of the homogeneous model.
        RVec rp = a * x - b * tau;
        RVec rd = a.transpose() * y + z - c * tau;
        double rg = b.dot(y) - c.dot(x) - kappa;
        double mu = (x.dot(z) + tau * kappa) / double(deg + 1);

        // Convergence is judged against the original, unscaled data.
        if (tau > 1e-12)
        {
            auto [xo, yo, zo] = original_triple(x, y, z, tau);
            double pres = (prob.a * xo - prob.b).norm() / (1.0 + b_norm);
            double dres = (prob.a.transpose() * yo + zo - prob.c).norm() / (1.0 + c_norm);
            double pobj = prob.c.dot(xo);
            double dobj = prob.b.dot(yo);
            double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            double err = std::max({pres, dres, gap});
            if (err < best_err)
            {
                best_err = err;
                best.x = xo;
                best.y = yo;
                best.z = zo;
                best.tau = tau;
                best.kappa = kappa;
                best.primal_res = pres;
                best.dual_res = dres;
                best.gap = gap;
                best.primal_obj = pobj;
                best.dual_obj = dobj;
            }
            if (pres <= opts.tol && dres <= opts.tol && gap <= opts.tol)
            {
                sol = best;
                sol.status = solve_status::optimal;
                sol.iterations = iter;
                return sol;
            }
        }

        // Infeasibility certificates, also on original data.  A genuine
        // certificate ray drives tau to zero while kappa stays bounded away
        // from it, so the residual test is gated on that ratio; otherwise a
        // feasible problem whose solution is merely huge (tau small but not
        // vanishing) could be misread as infeasible.
        if (tau <= 1e-6 * kappa)
        {
            RVec y_cert = c_scale * (row_scale.asDiagonal() * y);
            RVec z_cert = c_scale * z;
            double by = prob.b.dot(y_cert);
            if (by > 0.0)
            {
                RVec yn = y_cert / by;
                RVec zn = z_cert / by;
                double res = (prob.a.transpose() * yn + zn).norm();
                if (res <= opts.tol * (1.0 + a_norm * yn.norm() + zn.norm()))
                {
                    sol.status = solve_status::primal_infeasible;
                    sol.x = RVec::Zero(n);
                    sol.y = yn;
                    sol.z = zn;
                    sol.tau = tau;
                    sol.kappa = kappa;
                    sol.primal_res = best.primal_res;
                    sol.dual_res = best.dual_res;
                    sol.gap = best.gap;
                    sol.iterations = iter;
                    return sol;
                }
            }
            RVec x_cert = b_scale * x;
            double cx = prob.c.dot(x_cert);
            if (cx < 0.0)
            {
                RVec xn = x_cert / (-cx);
                double res = (prob.a * xn).norm();
                if (res <= opts.tol * (1.0 + a_norm * xn.norm()))
                {
                    sol.status = solve_status::dual_infeasible;
                    sol.x = xn;
                    sol.y = RVec::Zero(p);
                    sol.z = RVec::Zero(n);
                    sol.tau = tau;
                    sol.kappa = kappa;
                    sol.primal_res = best.primal_res;
                    sol.dual_res = best.dual_res;
                    sol.gap = best.gap;
                    sol.iterations = iter;
                    return sol;
                }
            }
        }

        if (!(mu > 0.0) || !std::isfinite(mu))
            break;

        scaling_state st;
        try
        {
            st = compute_scalings(prob.cones, x, z);
        }
        catch (const numeric_error &)
        {
            break;
        }

        // Normal-equations matrix M = A W^2 A'.
        RMat hat(n, p);
        for (Eigen::Index i = 0; i < p; ++i)
            hat.col(i) = apply_h(prob.cones, st, RVec(a.row(i).transpose()));
        RMat m = a * hat;
        m = 0.5 * (m + m.transpose());
        Eigen::LLT<RMat> llt(m);
        if (llt.info() != Eigen::Success)
        {
            m += (1e-12 * (1.0 + m.trace() / double(p))) * RMat::Identity(p, p);
            llt.compute(m);
            if (llt.info() != Eigen::Success)
                break;
        }

        RVec h_c = apply_h(prob.cones, st, c);
        RVec y_c = llt.solve(a * h_c + b);
        RVec x_c = apply_h(prob.cones, st, RVec(a.transpose() * y_c - c));
        double denom = b.dot(y_c) - c.dot(x_c) + kappa / tau;
        if (!(std::abs(denom) > 0.0) || !std::isfinite(denom))
            break;

        // Newton solve for the linearized homogeneous system with general
        // right-hand sides:
        //   A dx - b dtau            = g1
        //   A'dy + dz - c dtau       = g2
        //   b.dy - c.dx - dkappa     = g3
        //   lambda o (W^{-T}dx + Wdz) = g4
        //   kappa dtau + tau dkappa  = g5
        auto newton_rhs = [&](const RVec &g1, const RVec &g2, double g3, const RVec &g4,
                              double g5, RVec &dx, RVec &dy, RVec &dz, double &dtau,
                              double &dkappa)
        {
            RVec u_s = lambda_solve(prob.cones, st, g4);
            RVec r1 = -g2 + apply_winv(prob.cones, st, u_s);
            RVec y_r = llt.solve(g1 - a * apply_h(prob.cones, st, r1));
            RVec x_r = apply_h(prob.cones, st, RVec(a.transpose() * y_r + r1));
            dtau = (g3 - b.dot(y_r) + c.dot(x_r) + g5 / tau) / denom;
            dy = dtau * y_c + y_r;
            dx = dtau * x_c + x_r;
            dz = g2 + c * dtau - a.transpose() * dy;
            dkappa = (g5 - kappa * dtau) / tau;
        };

        // One direct solve plus two rounds of iterative refinement; the
        // elimination through the normal equations loses digits once the
        // barrier parameter is tiny, and refinement restores them.
        auto newton = [&](const RVec &ds, double dkap_rhs, RVec &dx, RVec &dy, RVec &dz,
                          double &dtau, double &dkappa)
        {
            RVec g1 = -rp;
            RVec g2 = -rd;
            double g3 = -rg;
            newton_rhs(g1, g2, g3, ds, dkap_rhs, dx, dy, dz, dtau, dkappa);
            for (int pass = 0; pass < 2; ++pass)
            {
                RVec e1 = g1 - (a * dx - b * dtau);
                RVec e2 = g2 - (a.transpose() * dy + dz - c * dtau);
                double e3 = g3 - (b.dot(dy) - c.dot(dx) - dkappa);
                RVec scaled = apply_wtinv(prob.cones, st, dx) + apply_w(prob.cones, st, dz);
                RVec e4 = ds - jordan_product(prob.cones, st.lambda, scaled);
                double e5 = dkap_rhs - (kappa * dtau + tau * dkappa);
                RVec cx(n), cy(p), cz(n);
                double ctau = 0.0;
                double ckappa = 0.0;
                newton_rhs(e1, e2, e3, e4, e5, cx, cy, cz, ctau, ckappa);
                dx += cx;
                dy += cy;
                dz += cz;
                dtau += ctau;
                dkappa += ckappa;
            }
        };

        // Predictor: pure Newton step toward zero complementarity.
        RVec ds_aff = -jordan_product(prob.cones, st.lambda, st.lambda);
        RVec dx_a(n), dy_a(p), dz_a(n);
        double dtau_a = 0.0;
        double dkappa_a = 0.0;
        newton(ds_aff, -tau * kappa, dx_a, dy_a, dz_a, dtau_a, dkappa_a);

        double alpha_a = std::min(
            {1.0, boundary_step(prob.cones, x, dx_a), boundary_step(prob.cones, z, dz_a),
             dtau_a < 0.0 ? -tau / dtau_a : kInf, dkappa_a < 0.0 ? -kappa / dkappa_a : kInf});
        double mu_aff = ((x + alpha_a * dx_a).dot(z + alpha_a * dz_a) +
                         (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkappa_a)) /
                        double(deg + 1);
        double sigma = std::clamp(std::pow(std::max(0.0, mu_aff / mu), 3.0), 0.0, 1.0);

        // Corrector: recenter and cancel the second-order error.
        RVec cross = jordan_product(prob.cones, apply_wtinv(prob.cones, st, dx_a),
                                    apply_w(prob.cones, st, dz_a));
        RVec ds_comb = ds_aff - cross + sigma * mu * e;
        double dkap_comb = -tau * kappa - dtau_a * dkappa_a + sigma * mu;
        RVec dx(n), dy(p), dz(n);
        double dtau = 0.0;
        double dkappa = 0.0;
        newton(ds_comb, dkap_comb, dx, dy, dz, dtau, dkappa);

        double alpha_max = std::min(
            {boundary_step(prob.cones, x, dx), boundary_step(prob.cones, z, dz),
             dtau < 0.0 ? -tau / dtau : kInf, dkappa < 0.0 ? -kappa / dkappa : kInf});
        double alpha = std::min(1.0, opts.step_fraction * alpha_max);
        if (!(alpha > 1e-10) || !std::isfinite(alpha))
            break;

        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    sol = best;
    sol.status = solve_status::max_iterations;
    sol.iterations = iter;
    return sol;
}

} // namespace fisac

#endif // FISAC_CONIC_HPP
