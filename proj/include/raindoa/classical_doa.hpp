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

#ifndef raindoa_classical_doa_H
#define raindoa_classical_doa_H

// Classical subspace and beamforming DoA estimators plus the
// permutation-matched angular RMSE metric used to score them.

#include <cstddef>
#include <string>
#include <vector>

#include "raindoa/array_sim.hpp"
#include "raindoa/common.hpp"
#include "raindoa/linalg.hpp"

namespace raindoa::doa
{
    // Uniform angular search grid, symmetric about broadside.
    struct AngularGrid
    {
        double theta_max_deg = 30.0;
        double resolution_deg = 1.0;
        std::vector<double> points_deg;

        static AngularGrid make(double theta_max_deg, double resolution_deg);

        std::size_t size() const { return points_deg.size(); }
        double point_rad(std::size_t i) const { return deg2rad(points_deg[i]); }

        // Grid index of an on-grid angle; throws when the angle is off-grid.
        std::size_t index_of_deg(double angle_deg) const;
    };

    enum class Method
    {
        MUSIC,
        ROOT_MUSIC,
        ESPRIT,
        MVDR,
        CNN
    };
    std::string method_name(Method m);
    Method method_from_name(const std::string &name);

    struct DoaEstimate
    {
        std::vector<double> angles_rad; // sorted ascending
        Method method = Method::MUSIC;
    };

    // Pseudospectra over the grid (exposed for diagnostics and tests).
    std::vector<double> music_spectrum(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                                       const AngularGrid &grid, const sim::ArrayGeometry &geom);
    std::vector<double> mvdr_spectrum(const linalg::ComplexMatrix &rhat,
                                      const AngularGrid &grid, const sim::ArrayGeometry &geom);

    DoaEstimate music(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                      const AngularGrid &grid, const sim::ArrayGeometry &geom);
    DoaEstimate root_music(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                           const sim::ArrayGeometry &geom);
    DoaEstimate esprit(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                       const sim::ArrayGeometry &geom);
    DoaEstimate mvdr(const linalg::ComplexMatrix &rhat, std::size_t num_sources,
                     const AngularGrid &grid, const sim::ArrayGeometry &geom);

    // Strict 1-neighbor local maxima, padded with the largest remaining
    // values when fewer than `count` peaks exist; returns grid indices.
    std::vector<std::size_t> pick_peaks(const std::vector<double> &spectrum, std::size_t count);

    // Root-mean-square angular error in degrees with the best truth/estimate
    // assignment per trial (minimum over permutations of squared error).
    double rmse_deg(const std::vector<DoaEstimate> &estimates,
                    const std::vector<std::vector<double>> &truth_angles_rad);
}

#endif
