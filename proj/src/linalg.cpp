// SPDX-License-Identifier: Apache-2.0
//
// raindoa - array simulation and multi-task DoA / rain-rate estimation toolkit
// Copyright (C) 2026 raindoa developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "raindoa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace raindoa::linalg
{
    ComplexMatrix multiply(const ComplexMatrix &a, const ComplexMatrix &b)
    {
        if (a.cols() != b.rows())
            throw InvalidArgument("multiply: inner dimensions mismatch");
        ComplexMatrix c(a.rows(), b.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t k = 0; k < a.cols(); ++k)
            {
                const cplx aik = a(i, k);
                for (std::size_t j = 0; j < b.cols(); ++j)
                    c(i, j) += aik * b(k, j);
            }
        return c;
    }

    double frobenius(const ComplexMatrix &a)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
            s += std::norm(a.data()[i]);
        return std::sqrt(s);
    }

    double frobenius(const RealMatrix &a)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
            s += a.data()[i] * a.data()[i];
        return std::sqrt(s);
    }

    double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b)
    {
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw InvalidArgument("max_abs_diff: shape mismatch");
        double m = 0.0;
        for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
            m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
        return m;
    }

    double max_abs_diff(const RealMatrix &a, const RealMatrix &b)
    {
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw InvalidArgument("max_abs_diff: shape mismatch");
        double m = 0.0;
        for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
            m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
        return m;
    }

    double max_hermitian_defect(const ComplexMatrix &a)
    {
        if (a.rows() != a.cols())
            throw InvalidArgument("max_hermitian_defect: matrix must be square");
        double m = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = i; j < a.cols(); ++j)
                m = std::max(m, std::abs(a(i, j) - std::conj(a(j, i))));
        return m;
    }

    namespace
    {
        double off_diagonal_norm(const ComplexMatrix &a)
        {
            double s = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < a.cols(); ++j)
                    if (i != j)
                        s += std::norm(a(i, j));
            return std::sqrt(s);
        }
    }

    HermitianEig hermitian_eig(const ComplexMatrix &input)
    {
        const std::size_t n = input.rows();
        if (n == 0 || input.cols() != n)
            throw InvalidArgument("hermitian_eig: matrix must be square and non-empty");

        // Work on the Hermitian average so tiny asymmetries cannot bias rotations.
        ComplexMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a(i, j) = 0.5 * (input(i, j) + std::conj(input(j, i)));

        ComplexMatrix v = ComplexMatrix::identity(n);
        const double scale = std::max(frobenius(a), std::numeric_limits<double>::min());
        const double tol = 1e-15 * scale;

        const int max_sweeps = 60;
        int sweep = 0;
        for (; sweep < max_sweeps; ++sweep)
        {
            if (off_diagonal_norm(a) <= tol * n)
                break;
            for (std::size_t p = 0; p + 1 < n; ++p)
                for (std::size_t q = p + 1; q < n; ++q)
                {
                    const cplx apq = a(p, q);
                    const double r = std::abs(apq);
                    if (r <= tol)
                    {
                        a(p, q) = 0.0;
                        a(q, p) = 0.0;
                        continue;
                    }
                    const double app = a(p, p).real();
                    const double aqq = a(q, q).real();
                    const cplx w = apq / r; // unit phase of the pivot

                    // tan(theta) for the phase-reduced real 2x2 problem.
                    const double tau = (aqq - app) / (2.0 * r);
                    double t;
                    if (tau >= 0.0)
                        t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                    else
                        t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;

                    a(p, p) = app - t * r;
                    a(q, q) = aqq + t * r;
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;

                    const cplx wc = std::conj(w);
                    for (std::size_t k = 0; k < n; ++k)
                    {
                        if (k == p || k == q)
                            continue;
                        const cplx akp = a(k, p);
                        const cplx akq = a(k, q) * wc;
                        a(k, p) = c * akp - s * akq;
                        a(k, q) = (s * akp + c * akq) * w;
                        a(p, k) = std::conj(a(k, p));
                        a(q, k) = std::conj(a(k, q));
                    }
                    for (std::size_t k = 0; k < n; ++k)
                    {
                        const cplx vkp = v(k, p);
                        const cplx vkq = v(k, q) * wc;
                        v(k, p) = c * vkp - s * vkq;
                        v(k, q) = (s * vkp + c * vkq) * w;
                    }
                }
        }
        if (sweep == max_sweeps && off_diagonal_norm(a) > 1e-10 * scale * n)
            throw NumericalError("hermitian_eig: Jacobi sweeps did not converge");

        HermitianEig out;
        out.values.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            out.values[i] = a(i, i).real();

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return out.values[x] > out.values[y]; });

        HermitianEig sorted;
        sorted.values.resize(n);
        sorted.vectors = ComplexMatrix(n, n);
        for (std::size_t j = 0; j < n; ++j)
        {
            const std::size_t src = order[j];
            sorted.values[j] = out.values[src];

            // Phase convention: rotate so the first significant component is
            // real nonnegative, making the decomposition deterministic.
            cplx anchor = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (std::abs(v(i, src)) > 1e-12)
                {
                    anchor = v(i, src);
                    break;
                }
            cplx phase = 1.0;
            if (std::abs(anchor) > 0.0)
                phase = std::conj(anchor) / std::abs(anchor);
            for (std::size_t i = 0; i < n; ++i)
                sorted.vectors(i, j) = v(i, src) * phase;
        }
        return sorted;
    }

    SymmetricEig symmetric_eig(const RealMatrix &a)
    {
        const std::size_t n = a.rows();
        ComplexMatrix c(n, a.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < a.cols(); ++j)
                c(i, j) = a(i, j);
        HermitianEig h = hermitian_eig(c);
        SymmetricEig out;
        out.values = std::move(h.values);
        out.vectors = RealMatrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out.vectors(i, j) = h.vectors(i, j).real();
        return out;
    }

    RealMatrix psd_cholesky_factor(const RealMatrix &input, double rel_floor)
    {
        const std::size_t n = input.rows();
        if (n == 0 || input.cols() != n)
            throw InvalidArgument("psd_cholesky_factor: matrix must be square and non-empty");

        RealMatrix a = input;
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);

        const double trace = std::max(std::abs(a.trace()), std::numeric_limits<double>::min());
        const double zero_floor = rel_floor * trace;

        RealMatrix l(n, n); // pivoted lower factor, trimmed to rank below
        std::size_t rank = n;
        for (std::size_t k = 0; k < n; ++k)
        {
            // Largest remaining diagonal becomes the pivot.
            std::size_t best = k;
            for (std::size_t j = k + 1; j < n; ++j)
                if (a(j, j) > a(best, best))
                    best = j;

            const double pivot = a(best, best);
            if (pivot < -zero_floor)
                throw ModelError("psd_cholesky_factor: matrix is not positive semidefinite "
                                 "(pivot " + std::to_string(pivot) + ")");
            if (pivot <= zero_floor)
            {
                // Remaining block is numerically zero; verify and stop.
                for (std::size_t j = k; j < n; ++j)
                    if (a(j, j) < -zero_floor)
                        throw ModelError("psd_cholesky_factor: negative diagonal beyond tolerance");
                rank = k;
                break;
            }

            if (best != k)
            {
                std::swap(perm[k], perm[best]);
                for (std::size_t j = 0; j < n; ++j)
                    std::swap(a(k, j), a(best, j));
                for (std::size_t i = 0; i < n; ++i)
                    std::swap(a(i, k), a(i, best));
                for (std::size_t j = 0; j < k; ++j)
                    std::swap(l(k, j), l(best, j));
            }

            const double lkk = std::sqrt(a(k, k));
            l(k, k) = lkk;
            for (std::size_t i = k + 1; i < n; ++i)
                l(i, k) = a(i, k) / lkk;
            for (std::size_t i = k + 1; i < n; ++i)
                for (std::size_t j = k + 1; j <= i; ++j)
                {
                    a(i, j) -= l(i, k) * l(j, k);
                    a(j, i) = a(i, j);
                }
        }

        // Undo the permutation: factor(orig_row, col) = l(pivoted_row, col).
        RealMatrix factor(n, std::max<std::size_t>(rank, 1));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < rank; ++j)
                factor(perm[i], j) = l(i, j);
        return factor;
    }

    ComplexMatrix hpd_cholesky(const ComplexMatrix &a)
    {
        const std::size_t n = a.rows();
        if (n == 0 || a.cols() != n)
            throw InvalidArgument("hpd_cholesky: matrix must be square and non-empty");
        ComplexMatrix l(n, n);
        for (std::size_t j = 0; j < n; ++j)
        {
            double d = a(j, j).real();
            for (std::size_t k = 0; k < j; ++k)
                d -= std::norm(l(j, k));
            if (!(d > 0.0))
                throw NumericalError("hpd_cholesky: matrix is not positive definite");
            const double ljj = std::sqrt(d);
            l(j, j) = ljj;
            for (std::size_t i = j + 1; i < n; ++i)
            {
                cplx s = a(i, j);
                for (std::size_t k = 0; k < j; ++k)
                    s -= l(i, k) * std::conj(l(j, k));
                l(i, j) = s / ljj;
            }
        }
        return l;
    }

    std::vector<cplx> hpd_solve(const ComplexMatrix &l, const std::vector<cplx> &b)
    {
        const std::size_t n = l.rows();
        if (b.size() != n)
            throw InvalidArgument("hpd_solve: dimension mismatch");
        std::vector<cplx> y(n), x(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            cplx s = b[i];
            for (std::size_t k = 0; k < i; ++k)
                s -= l(i, k) * y[k];
            y[i] = s / l(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;)
        {
            cplx s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k)
                s -= std::conj(l(k, ii)) * x[k];
            x[ii] = s / l(ii, ii);
        }
        return x;
    }

    namespace
    {
        // One Laguerre iteration sequence toward a root of the degree-m
        // polynomial with ascending coefficients a[0..m].
        cplx laguerre(const std::vector<cplx> &a, cplx x)
        {
            const int m = int(a.size()) - 1;
            constexpr int MR = 8, MT = 10, MAXIT = MT * MR;
            static const double frac[MR + 1] = {0.0, 0.5, 0.25, 0.75, 0.13, 0.38, 0.62, 0.88, 1.0};
            const double eps = std::numeric_limits<double>::epsilon();

            for (int iter = 1; iter <= MAXIT; ++iter)
            {
                cplx b = a[m];
                cplx d = 0.0, f = 0.0;
                double err = std::abs(b);
                const double ax = std::abs(x);
                for (int j = m - 1; j >= 0; --j)
                {
                    f = x * f + d;
                    d = x * d + b;
                    b = x * b + a[j];
                    err = std::abs(b) + ax * err;
                }
                err *= eps;
                if (std::abs(b) <= err)
                    return x; // on the root within roundoff

                const cplx g = d / b;
                const cplx g2 = g * g;
                const cplx h = g2 - 2.0 * (f / b);
                const cplx sq = std::sqrt(double(m - 1) * (double(m) * h - g2));
                cplx gp = g + sq;
                cplx gm = g - sq;
                const double abp = std::abs(gp);
                const double abm = std::abs(gm);
                if (abp < abm)
                    gp = gm;
                cplx dx = (std::max(abp, abm) > 0.0)
                              ? double(m) / gp
                              : std::polar(1.0 + ax, double(iter));
                const cplx x1 = x - dx;
                if (x == x1)
                    return x;
                if (iter % MT != 0)
                    x = x1;
                else
                    x = x - frac[iter / MT] * dx; // break limit cycles
            }
            throw NumericalError("poly_roots: Laguerre iteration exceeded the iteration limit");
        }
    }

    std::vector<cplx> poly_roots(const std::vector<cplx> &coeffs)
    {
        std::vector<cplx> a = coeffs;
        while (a.size() > 1 && std::abs(a.back()) == 0.0)
            a.pop_back();
        const int m = int(a.size()) - 1;
        if (m < 1)
            return {};

        std::vector<cplx> roots;
        roots.reserve(m);
        std::vector<cplx> deflated = a;
        for (int j = m; j >= 1; --j)
        {
            cplx x = laguerre(deflated, cplx(0.0, 0.0));
            roots.push_back(x);
            // Synthetic division by (z - x).
            cplx rem = deflated[j];
            for (int k = j - 1; k >= 0; --k)
            {
                const cplx save = deflated[k];
                deflated[k] = rem;
                rem = save + rem * x;
            }
            deflated.resize(j);
        }

        // Polish each root against the undeflated polynomial.
        for (cplx &r : roots)
            r = laguerre(a, r);

        std::sort(roots.begin(), roots.end(), [](const cplx &x, const cplx &y) {
            if (x.real() != y.real())
                return x.real() < y.real();
            return x.imag() < y.imag();
        });
        return roots;
    }
}
