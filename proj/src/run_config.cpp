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

#include "raindoa/run_config.hpp"
#include "raindoa/toml.hpp"

#include <filesystem>
#include <set>

namespace raindoa::cli
{
    RunConfig RunConfig::load(const std::string &path)
    {
        const toml::Table doc = toml::Table::parse_file(path);

        static const std::set<std::string> known = {
            "paths.alpha_params",
            "array.sensors", "array.spacing_wl",
            "grid.theta_max_deg", "grid.resolution_deg",
            "scenario.num_sources", "scenario.snapshots", "scenario.min_separation_deg",
            "scenario.snr_set_db", "scenario.source_power",
            "dataset.train_records", "dataset.test_records", "dataset.val_fraction",
            "dataset.seed", "dataset.test_seed",
            "network.width", "network.blocks", "network.hidden", "network.shared_fc1",
            "train.epochs", "train.batch", "train.learning_rate", "train.mode",
            "train.alpha", "train.seed",
        };
        for (const std::string &key : doc.keys())
            if (!known.count(key))
                throw ConfigError(path + ":" + std::to_string(doc.line_of(key)) +
                                  ": unknown key '" + key + "'");

        auto positive_int = [&](const std::string &key, std::int64_t fallback) {
            const std::int64_t v = doc.integer_or(key, fallback);
            if (v <= 0)
                throw ConfigError(path + ": key '" + key + "' must be positive");
            return v;
        };

        RunConfig cfg;
        cfg.alpha_params_path = doc.string_or("paths.alpha_params", cfg.alpha_params_path);
        cfg.geometry.sensors = std::size_t(positive_int("array.sensors", 10));
        cfg.geometry.spacing_wl = doc.number_or("array.spacing_wl", 0.5);
        cfg.theta_max_deg = doc.number_or("grid.theta_max_deg", 30.0);
        cfg.resolution_deg = doc.number_or("grid.resolution_deg", 1.0);
        cfg.num_sources = std::size_t(positive_int("scenario.num_sources", 2));
        cfg.snapshots = std::size_t(positive_int("scenario.snapshots", 100));
        cfg.min_separation_deg = doc.number_or("scenario.min_separation_deg", 3.0);
        if (doc.contains("scenario.snr_set_db"))
            cfg.snr_set_db = doc.number_array("scenario.snr_set_db");
        cfg.source_power = doc.number_or("scenario.source_power", 1.0);
        cfg.train_records = std::uint64_t(positive_int("dataset.train_records", 20000));
        cfg.test_records = std::uint64_t(positive_int("dataset.test_records", 2000));
        cfg.val_fraction = doc.number_or("dataset.val_fraction", 0.1);
        cfg.data_seed = std::uint64_t(doc.integer_or("dataset.seed", 1));
        cfg.test_seed = std::uint64_t(doc.integer_or("dataset.test_seed",
                                                     std::int64_t(cfg.data_seed + 1)));
        cfg.width = std::size_t(positive_int("network.width", 64));
        cfg.blocks = std::size_t(positive_int("network.blocks", 4));
        cfg.hidden = std::size_t(positive_int("network.hidden", 256));
        cfg.shared_fc1 = doc.boolean_or("network.shared_fc1", false);
        cfg.epochs = std::size_t(positive_int("train.epochs", 15));
        cfg.batch_size = std::size_t(positive_int("train.batch", 256));
        cfg.learning_rate = doc.number_or("train.learning_rate", 1e-3);
        cfg.mode = doc.string_or("train.mode", "uncertainty");
        cfg.fixed_alpha = doc.number_or("train.alpha", 1.0);
        cfg.train_seed = std::uint64_t(doc.integer_or("train.seed", 7));

        if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0))
            throw ConfigError(path + ": dataset.val_fraction must lie in [0, 1)");
        if (!(cfg.learning_rate > 0.0))
            throw ConfigError(path + ": train.learning_rate must be positive");
        net::weighting_from_name(cfg.mode); // validates the mode string

        // The alpha-parameter table path is resolved against the config file.
        std::filesystem::path ap(cfg.alpha_params_path);
        if (ap.is_relative())
            ap = std::filesystem::path(path).parent_path() / ap;
        cfg.alpha_params_path = ap.string();
        cfg.rain_table = rain::RainTable::load(cfg.alpha_params_path);
        return cfg;
    }

    doa::AngularGrid RunConfig::make_grid() const
    {
        return doa::AngularGrid::make(theta_max_deg, resolution_deg);
    }

    data::GenerationSpec RunConfig::make_generation_spec(std::uint64_t count,
                                                         std::uint64_t seed) const
    {
        data::GenerationSpec spec;
        spec.geometry = geometry;
        spec.grid = make_grid();
        spec.rain_table = rain_table;
        spec.num_sources = num_sources;
        spec.snapshots = snapshots;
        spec.snr_set_db = snr_set_db;
        spec.min_separation_deg = min_separation_deg;
        spec.count = count;
        spec.seed = seed;
        spec.source_power = source_power;
        spec.validate();
        return spec;
    }

    net::NetConfig RunConfig::make_net_config() const
    {
        net::NetConfig cfg;
        cfg.input_size = geometry.sensors;
        cfg.in_channels = 3;
        cfg.width = width;
        cfg.blocks = blocks;
        cfg.hidden = hidden;
        cfg.shared_fc1 = shared_fc1;
        cfg.grid_size = make_grid().size();
        cfg.rain_classes = rain_table.classes.size();
        cfg.validate();
        return cfg;
    }
}
