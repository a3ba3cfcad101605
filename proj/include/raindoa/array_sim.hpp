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

#ifndef raindoa_array_sim_H
#define raindoa_array_sim_H

// ULA steering model, rain-distorted snapshot generation, sample and
// ensemble covariance, and the three-channel network input tensor.

#include <cstddef>
#include <vector>

#include "raindoa/common.hpp"
#include "raindoa/linalg.hpp"
#include "raindoa/rain_channel.hpp"
#include "raindoa/rng.hpp"

namespace raindoa::sim
{
    struct ArrayGeometry
    {
        std::size_t sensors = 10;      // M
        double spacing_wl = 0.5;       // d0, inter-element spacing in wavelengths

        double aperture_wl() const { return double(sensors - 1) * spacing_wl; }
        void validate() const;
    };

    // Everything that determines one synthetic example (geometry and
    // fluctuation model are passed alongside).
    struct ScenarioConfig
    {
        std::vector<double> angles_rad; // N distinct source angles
        rain::RainClass rain;
        double snr_db = 10.0;           // per source per sensor; +inf = noiseless
        std::size_t snapshots = 100;    // T
        double source_power = 1.0;      // sigma_s^2, equal across sources

        void validate() const;
    };

    struct SnapshotBatch
    {
        linalg::ComplexMatrix data; // T x M, one snapshot per row
        std::vector<double> truth_angles_rad;
        rain::RainClass rain;
        double snr_db = 0.0;
    };

    // M x M x 3 real tensor (Re, Im, phase) of the trace-normalized sample
    // covariance; channel-major storage, each channel row-major.
    struct CovarianceTensor
    {
        std::size_t M = 0;
        std::vector<double> values;

        double &at(std::size_t channel, std::size_t row, std::size_t col)
        {
            return values[(channel * M + row) * M + col];
        }
        double at(std::size_t channel, std::size_t row, std::size_t col) const
        {
            return values[(channel * M + row) * M + col];
        }

        // Complex covariance from the Re/Im channels (still trace-normalized).
        linalg::ComplexMatrix reconstruct() const;
    };

    // Distortion-free steering vector, phase reference at element 0.
    std::vector<cplx> steering(double theta_rad, const ArrayGeometry &geom);

    // Noise power sigma_n^2 implied by the per-source-per-sensor SNR contract.
    double noise_power(double source_power, double snr_db);

    SnapshotBatch simulate(const ScenarioConfig &cfg, const ArrayGeometry &geom,
                           const rain::FluctuationModel &fm, RandomStream &rng);

    // Ensemble covariance: sum_n sigma_s^2 (a a^H) o R_b(theta_n) + sigma_n^2 I.
    linalg::ComplexMatrix theoretical_covariance(const std::vector<double> &angles_rad,
                                                 const ArrayGeometry &geom,
                                                 const rain::FluctuationModel &fm,
                                                 const rain::RainClass &rain,
                                                 double snr_db, double source_power = 1.0);

    // (1/T) sum_t y(t) y(t)^H, exactly Hermitian.
    linalg::ComplexMatrix sample_covariance(const SnapshotBatch &batch);

    CovarianceTensor to_tensor(const linalg::ComplexMatrix &rhat);
}

#endif
