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

#include "raindoa/array_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raindoa::sim
{
    void ArrayGeometry::validate() const
    {
        if (sensors < 2)
            throw InvalidArgument("ArrayGeometry: need at least two sensors");
        if (!(spacing_wl > 0.0) || !std::isfinite(spacing_wl))
            throw InvalidArgument("ArrayGeometry: spacing must be positive and finite");
        // Keep the full aperture inside the fitted region of the rain model.
        if (aperture_wl() > 8.0)
            throw InvalidArgument("ArrayGeometry: aperture (M-1)*d0 exceeds 8 wavelengths");
    }

    void ScenarioConfig::validate() const
    {
        if (angles_rad.empty())
            throw InvalidArgument("ScenarioConfig: need at least one source");
        if (snapshots < 1)
            throw InvalidArgument("ScenarioConfig: need at least one snapshot");
        if (!(source_power > 0.0))
            throw InvalidArgument("ScenarioConfig: source power must be positive");
        if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
            throw InvalidArgument("ScenarioConfig: SNR must be finite or +inf");
        for (double th : angles_rad)
            if (!(std::abs(th) < pi / 2.0))
                throw InvalidArgument("ScenarioConfig: source angle outside the field of view");
        for (std::size_t i = 0; i < angles_rad.size(); ++i)
            for (std::size_t j = i + 1; j < angles_rad.size(); ++j)
                if (angles_rad[i] == angles_rad[j])
                    throw InvalidArgument("ScenarioConfig: source angles must be distinct");
        rain.validate();
    }

    std::vector<cplx> steering(double theta_rad, const ArrayGeometry &geom)
    {
        geom.validate();
        std::vector<cplx> a(geom.sensors);
        const double phase_step = 2.0 * pi * geom.spacing_wl * std::sin(theta_rad);
        for (std::size_t m = 0; m < geom.sensors; ++m)
            a[m] = std::polar(1.0, phase_step * double(m));
        return a;
    }

    double noise_power(double source_power, double snr_db)
    {
        if (snr_db == std::numeric_limits<double>::infinity())
            return 0.0;
        return source_power * std::pow(10.0, -snr_db / 10.0);
    }

    SnapshotBatch simulate(const ScenarioConfig &cfg, const ArrayGeometry &geom,
                           const rain::FluctuationModel &fm, RandomStream &rng)
    {
        cfg.validate();
        geom.validate();

        const std::size_t M = geom.sensors;
        const std::size_t N = cfg.angles_rad.size();
        const std::size_t T = cfg.snapshots;
        const double sigma_s = std::sqrt(cfg.source_power);
        const double sigma_n = std::sqrt(noise_power(cfg.source_power, cfg.snr_db));

        // Independent substreams so the signal part of a batch is unchanged
        // when only the noise level differs.
        RandomStream rng_signal = rng.fork(0);
        RandomStream rng_noise = rng.fork(1);
        std::vector<RandomStream> rng_dist;
        rng_dist.reserve(N);
        for (std::size_t n = 0; n < N; ++n)
            rng_dist.push_back(rng.fork(2 + n));

        std::vector<std::vector<cplx>> steer(N);
        std::vector<rain::DistortionSampler> samplers;
        samplers.reserve(N);
        for (std::size_t n = 0; n < N; ++n)
        {
            steer[n] = steering(cfg.angles_rad[n], geom);
            samplers.emplace_back(rain::build_rb(cfg.angles_rad[n], M, geom.spacing_wl, fm, cfg.rain));
        }

        SnapshotBatch batch;
        batch.data = linalg::ComplexMatrix(T, M);
        batch.truth_angles_rad = cfg.angles_rad;
        batch.rain = cfg.rain;
        batch.snr_db = cfg.snr_db;

        std::vector<cplx> b(M);
        for (std::size_t t = 0; t < T; ++t)
        {
            cplx *y = batch.data.data() + t * M;
            for (std::size_t n = 0; n < N; ++n)
            {
                const cplx s = sigma_s * rng_signal.complex_normal();
                samplers[n].draw(rng_dist[n], b.data());
                const cplx *a = steer[n].data();
                for (std::size_t m = 0; m < M; ++m)
                    y[m] += a[m] * b[m] * s;
            }
            if (sigma_n > 0.0)
                for (std::size_t m = 0; m < M; ++m)
                    y[m] += sigma_n * rng_noise.complex_normal();
        }
        return batch;
    }

    linalg::ComplexMatrix theoretical_covariance(const std::vector<double> &angles_rad,
                                                 const ArrayGeometry &geom,
                                                 const rain::FluctuationModel &fm,
                                                 const rain::RainClass &rain,
                                                 double snr_db, double source_power)
    {
        geom.validate();
        const std::size_t M = geom.sensors;
        linalg::ComplexMatrix r(M, M);
        for (double theta : angles_rad)
        {
            const std::vector<cplx> a = steering(theta, geom);
            const rain::DistortionCovariance rb = rain::build_rb(theta, M, geom.spacing_wl, fm, rain);
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t l = 0; l < M; ++l)
                    r(m, l) += source_power * a[m] * std::conj(a[l]) * rb.matrix(m, l);
        }
        const double sigma_n2 = noise_power(source_power, snr_db);
        for (std::size_t m = 0; m < M; ++m)
            r(m, m) += sigma_n2;
        return r;
    }

    linalg::ComplexMatrix sample_covariance(const SnapshotBatch &batch)
    {
        const std::size_t T = batch.data.rows();
        const std::size_t M = batch.data.cols();
        if (T < 1)
            throw InvalidArgument("sample_covariance: need at least one snapshot");

        // Accumulate the upper triangle, then mirror so the result is
        // Hermitian to the last bit.
        linalg::ComplexMatrix r(M, M);
        for (std::size_t t = 0; t < T; ++t)
        {
            const cplx *y = batch.data.data() + t * M;
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t l = m; l < M; ++l)
                    r(m, l) += y[m] * std::conj(y[l]);
        }
        const double inv_t = 1.0 / double(T);
        for (std::size_t m = 0; m < M; ++m)
        {
            r(m, m) = cplx(r(m, m).real() * inv_t, 0.0);
            for (std::size_t l = m + 1; l < M; ++l)
            {
                r(m, l) *= inv_t;
                r(l, m) = std::conj(r(m, l));
            }
        }
        return r;
    }

    linalg::ComplexMatrix CovarianceTensor::reconstruct() const
    {
        linalg::ComplexMatrix r(M, M);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t l = 0; l < M; ++l)
                r(m, l) = cplx(at(0, m, l), at(1, m, l));
        return r;
    }

    CovarianceTensor to_tensor(const linalg::ComplexMatrix &rhat)
    {
        const std::size_t M = rhat.rows();
        if (M == 0 || rhat.cols() != M)
            throw InvalidArgument("to_tensor: matrix must be square and non-empty");

        const double trace = rhat.trace().real();
        if (!(std::abs(trace) > 0.0))
            throw InvalidArgument("to_tensor: covariance trace is zero");
        if (linalg::max_hermitian_defect(rhat) > 1e-9 * std::abs(trace))
            throw InvalidArgument("to_tensor: input is not Hermitian");

        const double scale = double(M) / trace;

        CovarianceTensor x;
        x.M = M;
        x.values.assign(3 * M * M, 0.0);
        for (std::size_t m = 0; m < M; ++m)
        {
            x.at(0, m, m) = scale * rhat(m, m).real();
            for (std::size_t l = m + 1; l < M; ++l)
            {
                const cplx v = scale * rhat(m, l);
                x.at(0, m, l) = v.real();
                x.at(0, l, m) = v.real();
                x.at(1, m, l) = v.imag();
                x.at(1, l, m) = -v.imag();
                double phase = std::atan2(v.imag(), v.real());
                if (phase <= -pi)
                    phase = pi;
                x.at(2, m, l) = phase;
                double mirrored = -phase;
                if (mirrored <= -pi)
                    mirrored = pi;
                x.at(2, l, m) = mirrored;
            }
        }
        return x;
    }
}
