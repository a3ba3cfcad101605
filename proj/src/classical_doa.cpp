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

#include "raindoa/classical_doa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace raindoa::doa
{
    AngularGrid AngularGrid::make(double theta_max_deg, double resolution_deg)
    {
        if (!(theta_max_deg > 0.0) || theta_max_deg >= 90.0)
            throw InvalidArgument("AngularGrid: theta_max must lie in (0, 90) degrees");
        if (!(resolution_deg > 0.0))
            throw InvalidArgument("AngularGrid: resolution must be positive");

        const double steps = 2.0 * theta_max_deg / resolution_deg;
        const long long half = std::llround(theta_max_deg / resolution_deg);
        if (std::abs(steps - 2.0 * double(half)) > 1e-9)
            throw InvalidArgument("AngularGrid: 2*theta_max must be an integer multiple of the resolution");

        AngularGrid g;
        g.theta_max_deg = theta_max_deg;
        g.resolution_deg = resolution_deg;
        g.points_deg.resize(std::size_t(2 * half + 1));
        for (long long i = -half; i <= half; ++i)
            g.points_deg[std::size_t(i + half)] = double(i) * resolution_deg;
        return g;
    }

    std::size_t AngularGrid::index_of_deg(double angle_deg) const
    {
        const double pos = (angle_deg + theta_max_deg) / resolution_deg;
        const long long i = std::llround(pos);
        if (i < 0 || std::size_t(i) >= points_deg.size() || std::abs(pos - double(i)) > 1e-6)
            throw InvalidArgument("AngularGrid: angle " + std::to_string(angle_deg) + " deg is off-grid");
        return std::size_t(i);
    }

    std::string method_name(Method m)
    {
        switch (m)
        {
        case Method::MUSIC: return "music";
        case Method::ROOT_MUSIC: return "root-music";
        case Method::ESPRIT: return "esprit";
        case Method::MVDR: return "mvdr";
        case Method::CNN: return "cnn";
        }
        return "?";
    }

    Method method_from_name(const std::string &name)
    {
        if (name == "music") return Method::MUSIC;
        if (name == "root-music" || name == "root_music") return Method::ROOT_MUSIC;
        if (name == "esprit") return Method::ESPRIT;
        if (name == "mvdr") return Method::MVDR;
        if (name == "cnn") return Method::CNN;
        throw ConfigError("unknown method '" + name + "'");
    }

    namespace
    {
        void check_estimator_inputs(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                                    const sim::ArrayGeometry &geom)
        {
            geom.validate();
            if (rhat.rows() != geom.sensors || rhat.cols() != geom.sensors)
                throw InvalidArgument("estimator: covariance size disagrees with the geometry");
            if (num_sources == 0 || num_sources >= geom.sensors)
                throw InvalidArgument("estimator: need 0 < N < M");
        }

        // Columns [first, last) of the eigenvector matrix.
        linalg::ComplexMatrix eig_columns(const linalg::ComplexMatrix &vectors,
                                          std::size_t first, std::size_t last)
        {
            linalg::ComplexMatrix out(vectors.rows(), last - first);
            for (std::size_t i = 0; i < vectors.rows(); ++i)
                for (std::size_t j = first; j < last; ++j)
                    out(i, j - first) = vectors(i, j);
            return out;
        }

        std::vector<double> sorted_ascending(std::vector<double> v)
        {
            std::sort(v.begin(), v.end());
            return v;
        }

        double wavenumber_to_angle(double unit_frequency)
        {
            // unit_frequency = d0 * sin(theta) expressed in cycles per element.
            return std::asin(unit_frequency);
        }
    }

    std::vector<double> music_spectrum(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                                       const AngularGrid &grid, const sim::ArrayGeometry &geom)
    {
        check_estimator_inputs(rhat, num_sources, geom);
        const std::size_t M = geom.sensors;
        const auto eig = linalg::hermitian_eig(rhat);
        const linalg::ComplexMatrix noise = eig_columns(eig.vectors, num_sources, M);

        std::vector<double> spectrum(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g)
        {
            const std::vector<cplx> a = sim::steering(grid.point_rad(g), geom);
            double denom = 0.0;
            for (std::size_t j = 0; j < noise.cols(); ++j)
            {
                cplx proj = 0.0;
                for (std::size_t m = 0; m < M; ++m)
                    proj += std::conj(noise(m, j)) * a[m];
                denom += std::norm(proj);
            }
            spectrum[g] = 1.0 / std::max(denom, 1e-300);
        }
        return spectrum;
    }

    std::vector<double> mvdr_spectrum(const linalg::ComplexMatrix &rhat,
                                      const AngularGrid &grid, const sim::ArrayGeometry &geom)
    {
        geom.validate();
        const std::size_t M = geom.sensors;
        if (rhat.rows() != M || rhat.cols() != M)
            throw InvalidArgument("mvdr_spectrum: covariance size disagrees with the geometry");

        // Diagonal loading keeps the solve well-posed for snapshot-starved
        // covariances (T < M).
        const double loading = 1e-6 * rhat.trace().real() / double(M);
        linalg::ComplexMatrix loaded = rhat;
        for (std::size_t m = 0; m < M; ++m)
            loaded(m, m) += loading;
        const linalg::ComplexMatrix chol = linalg::hpd_cholesky(loaded);

        std::vector<double> spectrum(grid.size());
        std::vector<cplx> a(M);
        for (std::size_t g = 0; g < grid.size(); ++g)
        {
            a = sim::steering(grid.point_rad(g), geom);
            const std::vector<cplx> x = linalg::hpd_solve(chol, a);
            cplx quad = 0.0;
            for (std::size_t m = 0; m < M; ++m)
                quad += std::conj(a[m]) * x[m];
            spectrum[g] = 1.0 / std::max(quad.real(), 1e-300);
        }
        return spectrum;
    }

    std::vector<std::size_t> pick_peaks(const std::vector<double> &spectrum, std::size_t count)
    {
        const std::size_t n = spectrum.size();
        if (count > n)
            throw InvalidArgument("pick_peaks: more peaks requested than grid points");

        std::vector<std::size_t> peaks;
        for (std::size_t i = 0; i < n; ++i)
        {
            const bool left_ok = (i == 0) || spectrum[i] > spectrum[i - 1];
            const bool right_ok = (i + 1 == n) || spectrum[i] > spectrum[i + 1];
            if (left_ok && right_ok)
                peaks.push_back(i);
        }
        auto by_height = [&](std::size_t x, std::size_t y) {
            if (spectrum[x] != spectrum[y])
                return spectrum[x] > spectrum[y];
            return x < y;
        };
        std::sort(peaks.begin(), peaks.end(), by_height);
        if (peaks.size() > count)
            peaks.resize(count);

        if (peaks.size() < count)
        {
            // Not enough strict maxima; fill from the largest remaining bins.
            std::vector<char> used(n, 0);
            for (std::size_t p : peaks)
                used[p] = 1;
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i)
                if (!used[i])
                    rest.push_back(i);
            std::sort(rest.begin(), rest.end(), by_height);
            for (std::size_t i = 0; peaks.size() < count; ++i)
                peaks.push_back(rest[i]);
        }
        return peaks;
    }

    namespace
    {
        DoaEstimate estimate_from_spectrum(const std::vector<double> &spectrum, std::size_t num_sources,
                                           const AngularGrid &grid, Method method)
        {
            const std::vector<std::size_t> peaks = pick_peaks(spectrum, num_sources);
            DoaEstimate est;
            est.method = method;
            for (std::size_t p : peaks)
                est.angles_rad.push_back(grid.point_rad(p));
            est.angles_rad = sorted_ascending(est.angles_rad);
            return est;
        }
    }

    DoaEstimate music(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                      const AngularGrid &grid, const sim::ArrayGeometry &geom)
    {
        return estimate_from_spectrum(music_spectrum(rhat, num_sources, grid, geom),
                                      num_sources, grid, Method::MUSIC);
    }

    DoaEstimate mvdr(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                     const AngularGrid &grid, const sim::ArrayGeometry &geom)
    {
        check_estimator_inputs(rhat, num_sources, geom);
        return estimate_from_spectrum(mvdr_spectrum(rhat, grid, geom),
                                      num_sources, grid, Method::MVDR);
    }

    DoaEstimate root_music(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                           const sim::ArrayGeometry &geom)
    {
        check_estimator_inputs(rhat, num_sources, geom);
        const std::size_t M = geom.sensors;
        const auto eig = linalg::hermitian_eig(rhat);
        const linalg::ComplexMatrix noise = eig_columns(eig.vectors, num_sources, M);

        // Noise-subspace projector and its diagonal sums, i.e. the
        // coefficients of p(z) = a(1/z)^T C a(z), degree 2(M-1).
        linalg::ComplexMatrix proj(M, M);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t l = 0; l < M; ++l)
            {
                cplx s = 0.0;
                for (std::size_t j = 0; j < noise.cols(); ++j)
                    s += noise(m, j) * std::conj(noise(l, j));
                proj(m, l) = s;
            }

        std::vector<cplx> coeffs(2 * M - 1, cplx(0.0, 0.0));
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t l = 0; l < M; ++l)
                coeffs[l - m + (M - 1)] += proj(m, l);

        const std::vector<cplx> roots = linalg::poly_roots(coeffs);

        // Keep roots strictly inside the unit circle, ordered by closeness to it.
        std::vector<cplx> inside;
        for (const cplx &z : roots)
            if (std::abs(z) < 1.0)
                inside.push_back(z);
        std::sort(inside.begin(), inside.end(), [](const cplx &x, const cplx &y) {
            const double dx = 1.0 - std::abs(x);
            const double dy = 1.0 - std::abs(y);
            if (dx != dy)
                return dx < dy;
            return std::arg(x) < std::arg(y);
        });

        DoaEstimate est;
        est.method = Method::ROOT_MUSIC;
        for (const cplx &z : inside)
        {
            if (est.angles_rad.size() == num_sources)
                break;
            const double u = std::arg(z) / (2.0 * pi * geom.spacing_wl);
            if (std::abs(u) > 1.0)
                continue; // no physical angle maps to this root
            est.angles_rad.push_back(wavenumber_to_angle(u));
        }
        if (est.angles_rad.size() < num_sources)
            throw NumericalError("root_music: fewer admissible roots than sources");
        est.angles_rad = sorted_ascending(est.angles_rad);
        return est;
    }

    namespace
    {
        // Characteristic polynomial of a small complex matrix
        // (Faddeev-LeVerrier), ascending coefficients.
        std::vector<cplx> characteristic_polynomial(const linalg::ComplexMatrix &a)
        {
            const std::size_t n = a.rows();
            std::vector<cplx> c(n + 1, cplx(0.0, 0.0));
            c[n] = 1.0;
            linalg::ComplexMatrix m(n, n); // running auxiliary matrix
            for (std::size_t k = 1; k <= n; ++k)
            {
                // M <- A*M + c[n-k+1] * I
                linalg::ComplexMatrix am = linalg::multiply(a, m);
                for (std::size_t i = 0; i < n; ++i)
                    am(i, i) += c[n - k + 1];
                m = std::move(am);
                cplx tr = 0.0;
                const linalg::ComplexMatrix prod = linalg::multiply(a, m);
                for (std::size_t i = 0; i < n; ++i)
                    tr += prod(i, i);
                c[n - k] = -tr / double(k);
            }
            return c;
        }
    }

    DoaEstimate esprit(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                       const sim::ArrayGeometry &geom)
    {
        check_estimator_inputs(rhat, num_sources, geom);
        const std::size_t M = geom.sensors;
        const std::size_t N = num_sources;
        const auto eig = linalg::hermitian_eig(rhat);
        const linalg::ComplexMatrix signal = eig_columns(eig.vectors, 0, N);

        // Maximally overlapping subarrays of size M-1.
        linalg::ComplexMatrix e1(M - 1, N), e2(M - 1, N);
        for (std::size_t i = 0; i + 1 < M; ++i)
            for (std::size_t j = 0; j < N; ++j)
            {
                e1(i, j) = signal(i, j);
                e2(i, j) = signal(i + 1, j);
            }

        // Least-squares rotation Psi = (E1^H E1)^{-1} E1^H E2.
        const linalg::ComplexMatrix gram = linalg::multiply(e1.adjoint(), e1);
        const linalg::ComplexMatrix rhs = linalg::multiply(e1.adjoint(), e2);
        linalg::ComplexMatrix chol;
        try
        {
            chol = linalg::hpd_cholesky(gram);
        }
        catch (const NumericalError &)
        {
            throw NumericalError("esprit: subarray signal subspace is rank deficient");
        }
        linalg::ComplexMatrix psi(N, N);
        std::vector<cplx> col(N);
        for (std::size_t j = 0; j < N; ++j)
        {
            for (std::size_t i = 0; i < N; ++i)
                col[i] = rhs(i, j);
            const std::vector<cplx> x = linalg::hpd_solve(chol, col);
            for (std::size_t i = 0; i < N; ++i)
                psi(i, j) = x[i];
        }

        const std::vector<cplx> eigenvalues = linalg::poly_roots(characteristic_polynomial(psi));
        if (eigenvalues.size() != N)
            throw NumericalError("esprit: could not extract all rotation eigenvalues");

        DoaEstimate est;
        est.method = Method::ESPRIT;
        for (const cplx &lambda : eigenvalues)
        {
            const double u = std::arg(lambda) / (2.0 * pi * geom.spacing_wl);
            if (std::abs(u) > 1.0)
                throw NumericalError("esprit: rotation eigenvalue maps outside the visible region");
            est.angles_rad.push_back(wavenumber_to_angle(u));
        }
        est.angles_rad = sorted_ascending(est.angles_rad);
        return est;
    }

    double rmse_deg(const std::vector<DoaEstimate> &estimates,
                    const std::vector<std::vector<double>> &truth_angles_rad)
    {
        if (estimates.size() != truth_angles_rad.size() || estimates.empty())
            throw InvalidArgument("rmse_deg: need matching non-empty estimate/truth lists");

        double total_mse = 0.0;
        for (std::size_t trial = 0; trial < estimates.size(); ++trial)
        {
            const std::vector<double> &est = estimates[trial].angles_rad;
            const std::vector<double> &truth = truth_angles_rad[trial];
            const std::size_t n = truth.size();
            if (est.size() != n || n == 0)
                throw InvalidArgument("rmse_deg: estimate/truth cardinality mismatch in trial " +
                                      std::to_string(trial));
            if (n > 8)
                throw InvalidArgument("rmse_deg: permutation matching supports at most 8 sources");

            std::vector<std::size_t> assign(n);
            std::iota(assign.begin(), assign.end(), 0);
            double best = std::numeric_limits<double>::infinity();
            do
            {
                double mse = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                {
                    const double err = rad2deg(est[i]) - rad2deg(truth[assign[i]]);
                    mse += err * err;
                }
                best = std::min(best, mse / double(n));
            } while (std::next_permutation(assign.begin(), assign.end()));
            total_mse += best;
        }
        return std::sqrt(total_mse / double(estimates.size()));
    }
}
