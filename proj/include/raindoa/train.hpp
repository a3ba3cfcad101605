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

#ifndef raindoa_train_H
#define raindoa_train_H

// Mini-batch training with Adam-style adaptive moments, per-epoch metrics,
// best-validation checkpointing and full-state resume. Single-worker runs
// are bit-reproducible; multi-worker runs are too, because every parallel
// kernel assigns each output element to exactly one worker.

#include <cstdint>
#include <string>
#include <vector>

#include "raindoa/dataset.hpp"
#include "raindoa/mtl_net.hpp"

namespace raindoa::net
{
    struct TrainOptions
    {
        std::size_t epochs = 15;
        std::size_t batch_size = 256;
        double learning_rate = 1e-3;
        WeightingMode mode = WeightingMode::Uncertainty;
        double fixed_alpha = 1.0;
        std::uint64_t seed = 7;

        std::string best_checkpoint_path; // optional: best-validation parameters
        std::string resume_checkpoint_path; // optional: full optimizer state, per epoch
        std::string metrics_csv_path;     // optional: per-epoch CSV log
    };

    struct TrainResult
    {
        std::vector<std::string> metric_lines; // one CSV data line per epoch
        double best_val_total = 0.0;
        std::size_t best_epoch = 0; // 1-based
        std::size_t epochs_run = 0;

        static const char *csv_header();
    };

    // Optimizer state carried across a resume.
    struct ResumeState
    {
        std::vector<NamedTensor<float>> adam_m, adam_v;
        std::uint64_t steps_done = 0;
        std::uint64_t epochs_done = 0;
    };

    TrainResult train(Network<float> &net, const data::Dataset &train_set,
                      const data::Dataset &val_set, const doa::AngularGrid &grid,
                      const TrainOptions &opt, const ResumeState *resume = nullptr);

    // Eval-mode logits for every record (row-major, n x G and n x R).
    void infer_dataset(Network<float> &net, const data::Dataset &ds, std::size_t batch_size,
                       std::vector<float> &doa_logits, std::vector<float> &rain_logits);
}

#endif
