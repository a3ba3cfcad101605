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

#ifndef raindoa_rain_channel_H
#define raindoa_rain_channel_H

// Rain-induced wavefront correlation model: the empirical spatial
// correlation coefficient alpha(range, separation), the angle-dependent
// distortion covariance R_b(theta) of a ULA, and a sampler producing
// correlated multiplicative distortion vectors b = 1 + L z.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "raindoa/common.hpp"
#include "raindoa/linalg.hpp"
#include "raindoa/rng.hpp"

namespace raindoa::rain
{
    // Empirical correlation parameters for one rain rate.
    struct AlphaParams
    {
        double a1 = 0.0; // dimensionless, >= 0; a1 == 0 makes alpha identically 1
        double a2 = 0.0; // per meter, >= 0
        double a3 = 0.0; // dimensionless, >= 0

        void validate() const;
    };

    // One of the discrete rain-rate classes. Index 0 is the distortion-free
    // class (rate 0, no parameters).
    struct RainClass
    {
        int index = 0;
        double rate_mm_per_h = 0.0;
        std::optional<AlphaParams> params;

        bool distortion_free() const { return index == 0; }
        void validate() const;
    };

    // Fluctuation power and propagation range of the wavefront model.
    struct FluctuationModel
    {
        double lambda11 = 0.05;
        double range_m = 200.0;

        void validate() const;
    };

    // Class table plus fluctuation defaults, normally loaded from
    // alpha_params.toml. Classes are ordered by index (= by rain rate).
    struct RainTable
    {
        std::vector<RainClass> classes;
        FluctuationModel fluctuation;

        std::size_t num_classes() const { return classes.size(); }
        const RainClass &by_index(int index) const;
        const RainClass &by_rate(double rate_mm_per_h) const;

        // Parses the external parameter file; rejects unknown keys.
        static RainTable load(const std::string &toml_path);

        // Built-in copy of the shipped placeholder table.
        static RainTable placeholder();
    };

    struct AlphaResult
    {
        double value = 1.0;           // in (0, 1]
        bool within_validity = true;  // false when range/separation leaves the fitted region
    };

    // Spatial correlation between two wavefront points separated by
    // d_over_lambda wavelengths after propagating range_m meters of rain.
    AlphaResult alpha(double range_m, double d_over_lambda, const AlphaParams &p);

    // Effective inter-element spacing on the incident wavefront.
    double wavefront_spacing(double theta_rad, double d0_wavelengths);

    // Angle-dependent distortion covariance R_b(theta).
    struct DistortionCovariance
    {
        linalg::RealMatrix matrix; // M x M, symmetric PSD
        double theta_rad = 0.0;
        RainClass rain;
        bool within_validity = true;
    };

    DistortionCovariance build_rb(double theta_rad, std::size_t M, double d0_wavelengths,
                                  const FluctuationModel &fm, const RainClass &rain);

    // Draws correlated multiplicative distortion vectors; reusable across
    // snapshots once the Cholesky factor is in place.
    class DistortionSampler
    {
    public:
        explicit DistortionSampler(const DistortionCovariance &rb);

        std::size_t dim() const { return dim_; }

        // One distortion vector b with E{b} = 1 and E{b b^H} = rb.matrix.
        void draw(RandomStream &rng, cplx *out) const;

    private:
        std::size_t dim_ = 0;
        std::size_t rank_ = 0;
        linalg::RealMatrix factor_; // dim x rank, F F^T = rb.matrix - ones
    };

    // `count` rows of i.i.d. distortion vectors (count x M).
    linalg::ComplexMatrix sample_distortions(const DistortionCovariance &rb,
                                             const FluctuationModel &fm,
                                             std::size_t count, RandomStream &rng);
}

#endif
