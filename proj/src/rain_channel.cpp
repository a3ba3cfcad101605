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

#include "raindoa/rain_channel.hpp"
#include "raindoa/toml.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace raindoa::rain
{
    namespace
    {
        constexpr double k_max_range_m = 500.0;
        constexpr double k_min_sep = 0.1; // fitted region of the correlation model, in wavelengths
        constexpr double k_max_sep = 8.0;
        constexpr double k_psd_floor = 1e-10;

        bool all_finite(double a, double b, double c)
        {
            return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
        }
    }

    void AlphaParams::validate() const
    {
        if (!all_finite(a1, a2, a3))
            throw InvalidArgument("AlphaParams: parameters must be finite");
        if (a1 < 0.0 || a2 < 0.0 || a3 < 0.0)
            throw InvalidArgument("AlphaParams: parameters must be nonnegative");
    }

    void RainClass::validate() const
    {
        if (index < 0)
            throw InvalidArgument("RainClass: index must be nonnegative");
        if ((index == 0) != (rate_mm_per_h == 0.0))
            throw InvalidArgument("RainClass: index 0 must carry rate 0 and vice versa");
        if ((index == 0) != !params.has_value())
            throw InvalidArgument("RainClass: exactly the no-rain class has no parameters");
        if (params)
            params->validate();
    }

    void FluctuationModel::validate() const
    {
        if (!(lambda11 > 0.0) || !std::isfinite(lambda11))
            throw InvalidArgument("FluctuationModel: lambda11 must be positive and finite");
        if (!(range_m > 0.0) || range_m > k_max_range_m)
            throw InvalidArgument("FluctuationModel: range_m must lie in (0, 500] m");
    }

    const RainClass &RainTable::by_index(int index) const
    {
        for (const RainClass &c : classes)
            if (c.index == index)
                return c;
        throw InvalidArgument("RainTable: no class with index " + std::to_string(index));
    }

    const RainClass &RainTable::by_rate(double rate_mm_per_h) const
    {
        for (const RainClass &c : classes)
            if (c.rate_mm_per_h == rate_mm_per_h)
                return c;
        throw InvalidArgument("RainTable: no class with rate " + std::to_string(rate_mm_per_h));
    }

    RainTable RainTable::placeholder()
    {
        // Placeholder values, NOT fitted to measurements: a1 grows with the
        // rain rate so heavier rain decorrelates the wavefront faster, with
        // a2, a3 held at moderate saturation constants. Users holding the
        // reference parameter table should substitute it via alpha_params.toml.
        RainTable t;
        t.fluctuation = FluctuationModel{0.05, 200.0};
        t.classes = {
            {0, 0.0, std::nullopt},
            {1, 2.0, AlphaParams{0.0016, 0.010, 0.10}},
            {2, 5.0, AlphaParams{0.0044, 0.010, 0.10}},
            {3, 10.0, AlphaParams{0.0123, 0.010, 0.10}},
            {4, 25.0, AlphaParams{0.0342, 0.010, 0.10}},
            {5, 50.0, AlphaParams{0.0950, 0.010, 0.10}},
        };
        return t;
    }

    RainTable RainTable::load(const std::string &toml_path)
    {
        const toml::Table doc = toml::Table::parse_file(toml_path);

        RainTable t;
        t.fluctuation.lambda11 = doc.number_or("lambda11", 0.05);
        t.fluctuation.range_m = doc.number_or("range_m", 200.0);
        t.fluctuation.validate();

        std::set<double> rates;
        for (const std::string &key : doc.keys_with_prefix("rain."))
        {
            // rain.<rate>.<param>
            const std::size_t second_dot = key.find('.', 5);
            if (second_dot == std::string::npos)
                throw ConfigError(toml_path + ": malformed rain entry '" + key + "'");
            rates.insert(std::stod(key.substr(5, second_dot - 5)));
        }
        if (rates.empty())
            throw ConfigError(toml_path + ": no [rain.<rate>] sections found");

        t.classes.push_back(RainClass{0, 0.0, std::nullopt});
        int index = 1;
        for (double rate : rates)
        {
            if (!(rate > 0.0))
                throw ConfigError(toml_path + ": rain rate sections must be positive (rate 0 is implicit)");
            const std::string prefix = "rain." + [&] {
                // Reconstruct the section token exactly as written.
                for (const std::string &key : doc.keys_with_prefix("rain."))
                {
                    const std::size_t second_dot = key.find('.', 5);
                    const std::string tok = key.substr(5, second_dot - 5);
                    if (std::stod(tok) == rate)
                        return tok;
                }
                return std::to_string(rate);
            }();
            AlphaParams p;
            p.a1 = doc.number(prefix + ".a1");
            p.a2 = doc.number(prefix + ".a2");
            p.a3 = doc.number(prefix + ".a3");
            RainClass c{index++, rate, p};
            c.validate();
            t.classes.push_back(c);
        }

        // Reject unknown keys so typos cannot silently fall back to defaults.
        for (const std::string &key : doc.keys())
        {
            if (key == "lambda11" || key == "range_m")
                continue;
            if (key.rfind("rain.", 0) == 0)
            {
                const std::string leaf = key.substr(key.rfind('.') + 1);
                if (leaf == "a1" || leaf == "a2" || leaf == "a3")
                    continue;
            }
            throw ConfigError(toml_path + ":" + std::to_string(doc.line_of(key)) +
                              ": unknown key '" + key + "'");
        }
        return t;
    }

    AlphaResult alpha(double range_m, double d_over_lambda, const AlphaParams &p)
    {
        if (!std::isfinite(range_m) || !std::isfinite(d_over_lambda))
            throw InvalidArgument("alpha: inputs must be finite");
        if (!(range_m > 0.0))
            throw InvalidArgument("alpha: range_m must be positive");
        if (d_over_lambda < 0.0)
            throw InvalidArgument("alpha: separation must be nonnegative");
        p.validate();

        AlphaResult out;
        out.within_validity =
            range_m <= k_max_range_m &&
            (d_over_lambda == 0.0 ||
             (d_over_lambda >= k_min_sep && d_over_lambda <= k_max_sep));

        const double range_term = range_m / (p.a2 * range_m + 1.0);
        const double sep_term = d_over_lambda / (p.a3 * d_over_lambda + 1.0);
        out.value = std::exp(-p.a1 * range_term * sep_term);
        return out;
    }

    double wavefront_spacing(double theta_rad, double d0_wavelengths)
    {
        if (!(std::abs(theta_rad) < pi / 2.0))
            throw InvalidArgument("wavefront_spacing: |theta| must be below pi/2");
        if (!(d0_wavelengths > 0.0))
            throw InvalidArgument("wavefront_spacing: spacing must be positive");
        return d0_wavelengths * std::cos(theta_rad);
    }

    DistortionCovariance build_rb(double theta_rad, std::size_t M, double d0_wavelengths,
                                  const FluctuationModel &fm, const RainClass &rain)
    {
        if (M < 2)
            throw InvalidArgument("build_rb: need at least two sensors");
        fm.validate();
        rain.validate();

        DistortionCovariance rb;
        rb.theta_rad = theta_rad;
        rb.rain = rain;

        if (rain.distortion_free())
        {
            rb.matrix = linalg::RealMatrix::ones(M, M);
            return rb;
        }

        const double spacing = wavefront_spacing(theta_rad, d0_wavelengths);
        const double diag = 1.0 + 2.0 * fm.lambda11;
        rb.matrix = linalg::RealMatrix(M, M);
        for (std::size_t m = 0; m < M; ++m)
        {
            rb.matrix(m, m) = diag;
            for (std::size_t l = m + 1; l < M; ++l)
            {
                const AlphaResult a = alpha(fm.range_m, double(l - m) * spacing, *rain.params);
                rb.within_validity = rb.within_validity && a.within_validity;
                const double value = 1.0 + 2.0 * fm.lambda11 * a.value;
                rb.matrix(m, l) = value;
                rb.matrix(l, m) = value;
            }
        }

        // By construction R_b is PSD; a violation means the model itself is
        // inconsistent, so check the spectrum rather than trusting it.
        const auto eig = linalg::symmetric_eig(rb.matrix);
        if (eig.values.back() < -k_psd_floor * rb.matrix.trace())
            throw ModelError("build_rb: R_b lost positive semidefiniteness");
        return rb;
    }

    DistortionSampler::DistortionSampler(const DistortionCovariance &rb)
    {
        dim_ = rb.matrix.rows();
        if (rb.rain.distortion_free())
        {
            rank_ = 0;
            return;
        }
        // Fluctuation covariance: R_b minus the all-ones mean contribution.
        linalg::RealMatrix c = rb.matrix;
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                c(i, j) -= 1.0;
        factor_ = linalg::psd_cholesky_factor(c, k_psd_floor);
        rank_ = factor_.cols();
        // A fully zero fluctuation block degenerates to the all-ones case.
        if (linalg::frobenius(factor_) == 0.0)
            rank_ = 0;
    }

    void DistortionSampler::draw(RandomStream &rng, cplx *out) const
    {
        for (std::size_t m = 0; m < dim_; ++m)
            out[m] = 1.0;
        if (rank_ == 0)
            return;
        // b = 1 + F z with z ~ CN(0, I_rank).
        cplx z[64];
        std::vector<cplx> z_heap;
        cplx *zp = z;
        if (rank_ > 64)
        {
            z_heap.resize(rank_);
            zp = z_heap.data();
        }
        for (std::size_t k = 0; k < rank_; ++k)
            zp[k] = rng.complex_normal();
        for (std::size_t m = 0; m < dim_; ++m)
        {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < rank_; ++k)
                acc += factor_(m, k) * zp[k];
            out[m] += acc;
        }
    }

    linalg::ComplexMatrix sample_distortions(const DistortionCovariance &rb,
                                             const FluctuationModel &fm,
                                             std::size_t count, RandomStream &rng)
    {
        fm.validate();
        const std::size_t M = rb.matrix.rows();
        const double expected_diag = rb.rain.distortion_free() ? 1.0 : 1.0 + 2.0 * fm.lambda11;
        for (std::size_t m = 0; m < M; ++m)
            if (std::abs(rb.matrix(m, m) - expected_diag) > 1e-12 * expected_diag)
                throw ModelError("sample_distortions: R_b diagonal disagrees with the fluctuation model");

        DistortionSampler sampler(rb);
        linalg::ComplexMatrix draws(count, M);
        for (std::size_t t = 0; t < count; ++t)
            sampler.draw(rng, draws.data() + t * M);
        return draws;
    }
}
