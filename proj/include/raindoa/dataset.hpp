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

#ifndef raindoa_dataset_H
#define raindoa_dataset_H

// Reproducible corpus generation and the .rdoa container format.
//
// File layout (little-endian):
//   header, 64 bytes: magic "RDOA", u32 version, u32 M, u32 G, u32 R_classes,
//                     u32 N, u64 record_count, u64 global_seed, zero padding
//   records, each:    tensor  f32[3*M*M]  (channel-major, row-major channels)
//                     doa_mask u8[G]
//                     rain_index u8
//                     angles_deg f32[N]
//                     snr_db f32
//                     record_seed u64
// Every record is a pure function of (global_seed, record index), so the
// bytes are identical for any worker count and record k can be regenerated
// alone.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "raindoa/array_sim.hpp"
#include "raindoa/classical_doa.hpp"
#include "raindoa/common.hpp"
#include "raindoa/rain_channel.hpp"

namespace raindoa::data
{
    struct LabelPair
    {
        std::vector<std::uint8_t> doa_mask; // G entries, exactly N ones
        std::uint8_t rain_index = 0;
    };

    struct DatasetHeader
    {
        static constexpr std::uint32_t k_version = 1;

        std::uint32_t version = k_version;
        std::uint32_t sensors = 0;     // M
        std::uint32_t grid_size = 0;   // G
        std::uint32_t rain_classes = 0;
        std::uint32_t num_sources = 0; // N
        std::uint64_t record_count = 0;
        std::uint64_t global_seed = 0;
    };

    struct Record
    {
        std::vector<float> tensor;          // 3 * M * M
        std::vector<std::uint8_t> doa_mask; // G
        std::uint8_t rain_index = 0;
        std::vector<float> angles_deg;      // N, ascending
        float snr_db = 0.0f;
        std::uint64_t seed = 0;

        sim::CovarianceTensor tensor_view(std::size_t M) const;
    };

    struct Dataset
    {
        DatasetHeader header;
        std::vector<Record> records;
    };

    // Everything the generator needs; one spec fully determines a corpus.
    struct GenerationSpec
    {
        sim::ArrayGeometry geometry;
        doa::AngularGrid grid;
        rain::RainTable rain_table;
        std::size_t num_sources = 2;
        std::size_t snapshots = 100;
        std::vector<double> snr_set_db = {0.0, 5.0, 10.0, 15.0, 20.0};
        double min_separation_deg = 3.0;
        std::uint64_t count = 0;
        std::uint64_t seed = 0;
        double source_power = 1.0;

        void validate() const;
    };

    LabelPair encode_labels(const std::vector<double> &angles_rad, const doa::AngularGrid &grid,
                            const rain::RainClass &rain);
    std::vector<double> decode_label_angles(const std::vector<std::uint8_t> &doa_mask,
                                            const doa::AngularGrid &grid);

    // Record index k of the corpus described by `spec`.
    Record generate_record(const GenerationSpec &spec, std::uint64_t index);

    // Whole corpus, parallel across records.
    Dataset generate_dataset(const GenerationSpec &spec);

    void write_dataset(const Dataset &ds, const std::string &path);
    Dataset read_dataset(const std::string &path);

    // Sidecar manifest (JSON): spec echo, seed, class table, file checksum.
    void write_manifest(const Dataset &ds, const GenerationSpec &spec,
                        const std::string &dataset_path, const std::string &manifest_path);

    // Seed-deterministic disjoint split into (train, val).
    std::pair<Dataset, Dataset> split(const Dataset &ds, double train_fraction, std::uint64_t seed);

    std::uint64_t fnv1a64_file(const std::string &path);
}

#endif
