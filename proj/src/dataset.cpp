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

#include "raindoa/dataset.hpp"
#include "raindoa/parallel.hpp"
#include "raindoa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace raindoa::data
{
    namespace
    {
        constexpr char k_magic[4] = {'R', 'D', 'O', 'A'};
        constexpr std::size_t k_header_bytes = 64;

        void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v)
        {
            for (int i = 0; i < 4; ++i)
                out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
        }
        void put_u64(std::vector<std::uint8_t> &out, std::uint64_t v)
        {
            for (int i = 0; i < 8; ++i)
                out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
        }
        void put_f32(std::vector<std::uint8_t> &out, float v)
        {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(out, bits);
        }

        struct ByteReader
        {
            const std::uint8_t *p;
            const std::uint8_t *end;
            const std::string &path;

            void need(std::size_t n) const
            {
                if (std::size_t(end - p) < n)
                    throw IoError(path + ": truncated dataset file");
            }
            std::uint32_t u32()
            {
                need(4);
                std::uint32_t v = 0;
                for (int i = 0; i < 4; ++i)
                    v |= std::uint32_t(p[i]) << (8 * i);
                p += 4;
                return v;
            }
            std::uint64_t u64()
            {
                need(8);
                std::uint64_t v = 0;
                for (int i = 0; i < 8; ++i)
                    v |= std::uint64_t(p[i]) << (8 * i);
                p += 8;
                return v;
            }
            float f32()
            {
                const std::uint32_t bits = u32();
                float v;
                std::memcpy(&v, &bits, 4);
                return v;
            }
            std::uint8_t u8()
            {
                need(1);
                return *p++;
            }
        };

        std::size_t record_bytes(const DatasetHeader &h)
        {
            return 4 * (3 * std::size_t(h.sensors) * h.sensors) // tensor
                   + h.grid_size                                 // mask
                   + 1                                           // rain index
                   + 4 * h.num_sources                           // angles
                   + 4                                           // snr
                   + 8;                                          // record seed
        }
    }

    sim::CovarianceTensor Record::tensor_view(std::size_t M) const
    {
        if (tensor.size() != 3 * M * M)
            throw InvalidArgument("Record: tensor size disagrees with M");
        sim::CovarianceTensor x;
        x.M = M;
        x.values.assign(tensor.begin(), tensor.end());
        return x;
    }

    void GenerationSpec::validate() const
    {
        geometry.validate();
        if (grid.size() < 2)
            throw ConfigError("GenerationSpec: angular grid is empty");
        if (rain_table.classes.empty())
            throw ConfigError("GenerationSpec: rain table is empty");
        rain_table.fluctuation.validate();
        for (const auto &c : rain_table.classes)
            c.validate();
        if (num_sources == 0 || num_sources >= geometry.sensors)
            throw ConfigError("GenerationSpec: need 0 < N < M");
        if (snapshots == 0)
            throw ConfigError("GenerationSpec: need at least one snapshot");
        if (snr_set_db.empty())
            throw ConfigError("GenerationSpec: SNR set is empty");
        if (min_separation_deg < 0.0)
            throw ConfigError("GenerationSpec: negative minimum separation");
        if (!(source_power > 0.0))
            throw ConfigError("GenerationSpec: source power must be positive");
        // Make sure the separation constraint is satisfiable on the grid.
        if (min_separation_deg * double(num_sources - 1) >= 2.0 * grid.theta_max_deg)
            throw ConfigError("GenerationSpec: minimum separation cannot be met on the grid");
    }

    LabelPair encode_labels(const std::vector<double> &angles_rad, const doa::AngularGrid &grid,
                            const rain::RainClass &rain)
    {
        rain.validate();
        LabelPair label;
        label.doa_mask.assign(grid.size(), 0);
        label.rain_index = std::uint8_t(rain.index);
        for (double theta : angles_rad)
        {
            const std::size_t idx = grid.index_of_deg(rad2deg(theta));
            if (label.doa_mask[idx])
                throw InvalidArgument("encode_labels: duplicate source angle");
            label.doa_mask[idx] = 1;
        }
        return label;
    }

    std::vector<double> decode_label_angles(const std::vector<std::uint8_t> &doa_mask,
                                            const doa::AngularGrid &grid)
    {
        if (doa_mask.size() != grid.size())
            throw InvalidArgument("decode_label_angles: mask length disagrees with the grid");
        std::vector<double> angles;
        for (std::size_t i = 0; i < doa_mask.size(); ++i)
            if (doa_mask[i])
                angles.push_back(grid.point_rad(i));
        return angles;
    }

    Record generate_record(const GenerationSpec &spec, std::uint64_t index)
    {
        RandomStream rng(derive_seed(spec.seed, index));
        RandomStream rng_scenario = rng.fork(0);
        RandomStream rng_sim = rng.fork(1);

        const std::size_t G = spec.grid.size();
        const std::size_t N = spec.num_sources;

        const std::size_t rain_idx = rng_scenario.uniform_index(spec.rain_table.classes.size());
        const rain::RainClass &rain_class = spec.rain_table.classes[rain_idx];
        const double snr_db = spec.snr_set_db[rng_scenario.uniform_index(spec.snr_set_db.size())];

        // Distinct on-grid angles with pairwise separation >= min_separation.
        std::vector<std::size_t> picks;
        while (picks.size() < N)
        {
            const std::size_t candidate = rng_scenario.uniform_index(G);
            bool ok = true;
            for (std::size_t p : picks)
            {
                const double sep = std::abs(spec.grid.points_deg[candidate] - spec.grid.points_deg[p]);
                if (candidate == p || sep < spec.min_separation_deg)
                {
                    ok = false;
                    break;
                }
            }
            if (ok)
                picks.push_back(candidate);
        }
        std::sort(picks.begin(), picks.end());

        sim::ScenarioConfig cfg;
        for (std::size_t p : picks)
            cfg.angles_rad.push_back(spec.grid.point_rad(p));
        cfg.rain = rain_class;
        cfg.snr_db = snr_db;
        cfg.snapshots = spec.snapshots;
        cfg.source_power = spec.source_power;

        const sim::SnapshotBatch batch = sim::simulate(cfg, spec.geometry, spec.rain_table.fluctuation, rng_sim);
        const sim::CovarianceTensor x = sim::to_tensor(sim::sample_covariance(batch));
        const LabelPair label = encode_labels(cfg.angles_rad, spec.grid, rain_class);

        Record rec;
        rec.tensor.assign(x.values.begin(), x.values.end());
        rec.doa_mask = label.doa_mask;
        rec.rain_index = label.rain_index;
        for (std::size_t p : picks)
            rec.angles_deg.push_back(float(spec.grid.points_deg[p]));
        rec.snr_db = float(snr_db);
        rec.seed = derive_seed(spec.seed, index);
        return rec;
    }

    Dataset generate_dataset(const GenerationSpec &spec)
    {
        spec.validate();

        Dataset ds;
        ds.header.sensors = std::uint32_t(spec.geometry.sensors);
        ds.header.grid_size = std::uint32_t(spec.grid.size());
        ds.header.rain_classes = std::uint32_t(spec.rain_table.classes.size());
        ds.header.num_sources = std::uint32_t(spec.num_sources);
        ds.header.record_count = spec.count;
        ds.header.global_seed = spec.seed;

        ds.records.resize(spec.count);
        parallel_for(spec.count, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k)
                ds.records[k] = generate_record(spec, k);
        });
        return ds;
    }

    void write_dataset(const Dataset &ds, const std::string &path)
    {
        const DatasetHeader &h = ds.header;
        if (ds.records.size() != h.record_count)
            throw InvalidArgument("write_dataset: header count disagrees with records");

        std::vector<std::uint8_t> bytes;
        bytes.reserve(k_header_bytes + ds.records.size() * record_bytes(h));

        bytes.insert(bytes.end(), k_magic, k_magic + 4);
        put_u32(bytes, h.version);
        put_u32(bytes, h.sensors);
        put_u32(bytes, h.grid_size);
        put_u32(bytes, h.rain_classes);
        put_u32(bytes, h.num_sources);
        put_u64(bytes, h.record_count);
        put_u64(bytes, h.global_seed);
        bytes.resize(k_header_bytes, 0);

        for (const Record &rec : ds.records)
        {
            if (rec.tensor.size() != 3 * std::size_t(h.sensors) * h.sensors ||
                rec.doa_mask.size() != h.grid_size || rec.angles_deg.size() != h.num_sources)
                throw InvalidArgument("write_dataset: record shape disagrees with the header");
            for (float v : rec.tensor)
                put_f32(bytes, v);
            bytes.insert(bytes.end(), rec.doa_mask.begin(), rec.doa_mask.end());
            bytes.push_back(rec.rain_index);
            for (float v : rec.angles_deg)
                put_f32(bytes, v);
            put_f32(bytes, rec.snr_db);
            put_u64(bytes, rec.seed);
        }

        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError(path + ": cannot open for writing");
        out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
        if (!out)
            throw IoError(path + ": write failed");
    }

    Dataset read_dataset(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError(path + ": cannot open");
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());

        if (bytes.size() < k_header_bytes)
            throw IoError(path + ": file is smaller than the header");
        if (std::memcmp(bytes.data(), k_magic, 4) != 0)
            throw IoError(path + ": bad magic, not a .rdoa file");

        ByteReader r{bytes.data() + 4, bytes.data() + bytes.size(), path};
        Dataset ds;
        ds.header.version = r.u32();
        if (ds.header.version != DatasetHeader::k_version)
            throw IoError(path + ": unsupported format version " + std::to_string(ds.header.version));
        ds.header.sensors = r.u32();
        ds.header.grid_size = r.u32();
        ds.header.rain_classes = r.u32();
        ds.header.num_sources = r.u32();
        ds.header.record_count = r.u64();
        ds.header.global_seed = r.u64();
        if (ds.header.sensors < 2 || ds.header.grid_size == 0 || ds.header.rain_classes == 0 ||
            ds.header.num_sources == 0)
            throw IoError(path + ": implausible header fields");

        const std::size_t expect = k_header_bytes + ds.header.record_count * record_bytes(ds.header);
        if (bytes.size() != expect)
            throw IoError(path + ": size " + std::to_string(bytes.size()) +
                          " disagrees with header (expected " + std::to_string(expect) + ")");

        r.p = bytes.data() + k_header_bytes;
        ds.records.resize(ds.header.record_count);
        const std::size_t tensor_n = 3 * std::size_t(ds.header.sensors) * ds.header.sensors;
        for (Record &rec : ds.records)
        {
            rec.tensor.resize(tensor_n);
            for (float &v : rec.tensor)
                v = r.f32();
            rec.doa_mask.resize(ds.header.grid_size);
            for (auto &m : rec.doa_mask)
                m = r.u8();
            rec.rain_index = r.u8();
            if (rec.rain_index >= ds.header.rain_classes)
                throw IoError(path + ": rain index out of range");
            rec.angles_deg.resize(ds.header.num_sources);
            for (float &v : rec.angles_deg)
                v = r.f32();
            rec.snr_db = r.f32();
            rec.seed = r.u64();
        }
        return ds;
    }

    void write_manifest(const Dataset &ds, const GenerationSpec &spec,
                        const std::string &dataset_path, const std::string &manifest_path)
    {
        nlohmann::json j;
        j["format"] = "rdoa";
        j["format_version"] = DatasetHeader::k_version;
        j["dataset_file"] = dataset_path;
        j["checksum_fnv1a64"] = fnv1a64_file(dataset_path);
        j["seed"] = ds.header.global_seed;
        j["record_count"] = ds.header.record_count;
        j["sensors"] = ds.header.sensors;
        j["spacing_wl"] = spec.geometry.spacing_wl;
        j["grid_size"] = ds.header.grid_size;
        j["theta_max_deg"] = spec.grid.theta_max_deg;
        j["resolution_deg"] = spec.grid.resolution_deg;
        j["num_sources"] = ds.header.num_sources;
        j["snapshots"] = spec.snapshots;
        j["snr_set_db"] = spec.snr_set_db;
        j["min_separation_deg"] = spec.min_separation_deg;
        j["source_power"] = spec.source_power;
        j["lambda11"] = spec.rain_table.fluctuation.lambda11;
        j["range_m"] = spec.rain_table.fluctuation.range_m;
        nlohmann::json classes = nlohmann::json::array();
        for (const auto &c : spec.rain_table.classes)
        {
            nlohmann::json entry;
            entry["index"] = c.index;
            entry["rate_mm_per_h"] = c.rate_mm_per_h;
            if (c.params)
            {
                entry["a1"] = c.params->a1;
                entry["a2"] = c.params->a2;
                entry["a3"] = c.params->a3;
            }
            classes.push_back(entry);
        }
        j["rain_classes"] = classes;

        std::ofstream out(manifest_path, std::ios::trunc);
        if (!out)
            throw IoError(manifest_path + ": cannot open for writing");
        out << j.dump(2) << "\n";
    }

    std::pair<Dataset, Dataset> split(const Dataset &ds, double train_fraction, std::uint64_t seed)
    {
        if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
            throw InvalidArgument("split: fraction must lie in [0, 1]");

        const std::size_t n = ds.records.size();
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        RandomStream rng(derive_seed(seed, 0x5174));
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.uniform_index(i)]);

        const std::size_t n_train = std::size_t(std::llround(train_fraction * double(n)));
        Dataset train, val;
        train.header = ds.header;
        val.header = ds.header;
        for (std::size_t i = 0; i < n; ++i)
            (i < n_train ? train : val).records.push_back(ds.records[perm[i]]);
        train.header.record_count = train.records.size();
        val.header.record_count = val.records.size();
        return {std::move(train), std::move(val)};
    }

    std::uint64_t fnv1a64_file(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError(path + ": cannot open");
        std::uint64_t hash = 0xcbf29ce484222325ULL;
        char buf[65536];
        while (in)
        {
            in.read(buf, sizeof(buf));
            const std::streamsize got = in.gcount();
            for (std::streamsize i = 0; i < got; ++i)
                hash = (hash ^ std::uint8_t(buf[i])) * 0x100000001b3ULL;
        }
        return hash;
    }
}
