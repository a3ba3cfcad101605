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

#ifndef raindoa_run_config_H
#define raindoa_run_config_H

// The TOML run configuration shared by all CLI subcommands. Loading is
// strict: unknown keys are rejected with a file/line diagnostic.

#include <cstdint>
#include <string>
#include <vector>

#include "raindoa/dataset.hpp"
#include "raindoa/mtl_net.hpp"

namespace raindoa::cli
{
    struct RunConfig
    {
        // [paths]
        std::string alpha_params_path = "alpha_params.toml";

        // [array] / [grid]
        sim::ArrayGeometry geometry;
        double theta_max_deg = 30.0;
        double resolution_deg = 1.0;

        // [scenario]
        std::size_t num_sources = 2;
        std::size_t snapshots = 100;
        double min_separation_deg = 3.0;
        std::vector<double> snr_set_db = {0.0, 5.0, 10.0, 15.0, 20.0};
        double source_power = 1.0;

        // [dataset]
        std::uint64_t train_records = 20000;
        std::uint64_t test_records = 2000;
        double val_fraction = 0.1;
        std::uint64_t data_seed = 1;
        std::uint64_t test_seed = 2;

        // [network]
        std::size_t width = 64;
        std::size_t blocks = 4;
        std::size_t hidden = 256;
        bool shared_fc1 = false;

        // [train]
        std::size_t epochs = 15;
        std::size_t batch_size = 256;
        double learning_rate = 1e-3;
        std::string mode = "uncertainty";
        double fixed_alpha = 1.0;
        std::uint64_t train_seed = 7;

        // loaded from alpha_params_path
        rain::RainTable rain_table;

        static RunConfig load(const std::string &path);

        doa::AngularGrid make_grid() const;
        data::GenerationSpec make_generation_spec(std::uint64_t count, std::uint64_t seed) const;
        net::NetConfig make_net_config() const;
    };
}

#endif
