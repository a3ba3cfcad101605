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

#ifndef raindoa_eval_harness_H
#define raindoa_eval_harness_H

// Benchmark harness: per-SNR DoA RMSE for the network and the classical
// baselines on a shared test set, rain accuracy per weighting mode, and
// per-class confusion matrices, exported as fixed-schema CSV files.

#include <cstdint>
#include <string>
#include <vector>

#include "raindoa/classical_doa.hpp"
#include "raindoa/dataset.hpp"
#include "raindoa/mtl_net.hpp"

namespace raindoa::eval
{
    struct EvalConfig
    {
        sim::ArrayGeometry geometry;
        doa::AngularGrid grid;
        std::size_t num_sources = 2;
        std::size_t batch_size = 256;
        std::vector<doa::Method> baselines = {doa::Method::MUSIC, doa::Method::ROOT_MUSIC,
                                              doa::Method::ESPRIT, doa::Method::MVDR};
    };

    // A trained network plus the label used in report rows
    // (e.g. "uncertainty", "fixed-1", "fixed-0.05").
    struct LabeledNet
    {
        std::string label;
        net::Network<float> *network = nullptr;
    };

    struct EvalReport
    {
        struct RmseRow
        {
            double snr_db = 0.0;
            std::string method;
            double rmse_deg = 0.0;
        };
        struct AccRow
        {
            double snr_db = 0.0;
            std::string mode;
            double accuracy_pct = 0.0;
        };
        struct Confusion
        {
            std::string mode;
            std::size_t classes = 0;
            std::vector<std::uint64_t> counts; // row-major, rows = true class
        };

        std::vector<double> snr_buckets_db; // ascending
        std::vector<RmseRow> rmse_rows;
        std::vector<AccRow> acc_rows;
        std::vector<Confusion> confusions;
        std::vector<std::string> warnings; // soft-check findings
        std::uint64_t test_seed = 0;
        std::uint64_t test_records = 0;
    };

    // Classical estimates for every record, computed from the covariance
    // reconstructed out of the stored Re/Im channels (still trace-normalized;
    // the estimators are scale invariant so no denormalization is needed).
    std::vector<doa::DoaEstimate> baseline_estimates(const data::Dataset &test_set,
                                                     doa::Method method, const EvalConfig &cfg);

    // Network estimates plus predicted rain class for every record.
    struct CnnPredictions
    {
        std::vector<doa::DoaEstimate> estimates;
        std::vector<std::uint8_t> rain_argmax;
    };
    CnnPredictions cnn_predictions(net::Network<float> &network, const data::Dataset &test_set,
                                   const EvalConfig &cfg);

    EvalReport evaluate(const data::Dataset &test_set, const std::vector<LabeledNet> &networks,
                        const EvalConfig &cfg);

    // Writes rmse_vs_snr.csv, rain_acc.csv and confusion.csv under out_dir.
    void export_report(const EvalReport &report, const std::string &out_dir);
}

#endif
