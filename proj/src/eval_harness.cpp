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

#include "raindoa/eval_harness.hpp"
#include "raindoa/parallel.hpp"
#include "raindoa/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace raindoa::eval
{
    namespace
    {
        std::vector<std::vector<double>> truth_angles(const data::Dataset &ds)
        {
            std::vector<std::vector<double>> out;
            out.reserve(ds.records.size());
            for (const auto &rec : ds.records)
            {
                std::vector<double> t;
                for (float a : rec.angles_deg)
                    t.push_back(deg2rad(double(a)));
                out.push_back(std::move(t));
            }
            return out;
        }

        // snr bucket -> record indices, ascending by snr
        std::map<double, std::vector<std::size_t>> bucket_by_snr(const data::Dataset &ds)
        {
            std::map<double, std::vector<std::size_t>> buckets;
            for (std::size_t i = 0; i < ds.records.size(); ++i)
                buckets[double(ds.records[i].snr_db)].push_back(i);
            return buckets;
        }

        template <typename V>
        std::vector<V> gather(const std::vector<V> &all, const std::vector<std::size_t> &idx)
        {
            std::vector<V> out;
            out.reserve(idx.size());
            for (std::size_t i : idx)
                out.push_back(all[i]);
            return out;
        }
    }

    std::vector<doa::DoaEstimate> baseline_estimates(const data::Dataset &test_set,
                                                     doa::Method method, const EvalConfig &cfg)
    {
        const std::size_t n = test_set.records.size();
        const std::size_t M = cfg.geometry.sensors;
        if (test_set.header.sensors != M)
            throw InvalidArgument("baseline_estimates: sensor count disagrees with the geometry");

        std::vector<doa::DoaEstimate> out(n);
        parallel_for(n, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i)
            {
                const linalg::ComplexMatrix rhat = test_set.records[i].tensor_view(M).reconstruct();
                switch (method)
                {
                case doa::Method::MUSIC:
                    out[i] = doa::music(rhat, cfg.num_sources, cfg.grid, cfg.geometry);
                    break;
                case doa::Method::ROOT_MUSIC:
                    out[i] = doa::root_music(rhat, cfg.num_sources, cfg.geometry);
                    break;
                case doa::Method::ESPRIT:
                    out[i] = doa::esprit(rhat, cfg.num_sources, cfg.geometry);
                    break;
                case doa::Method::MVDR:
                    out[i] = doa::mvdr(rhat, cfg.num_sources, cfg.grid, cfg.geometry);
                    break;
                case doa::Method::CNN:
                    throw InvalidArgument("baseline_estimates: CNN is not a classical baseline");
                }
            }
        });
        return out;
    }

    CnnPredictions cnn_predictions(net::Network<float> &network, const data::Dataset &test_set,
                                   const EvalConfig &cfg)
    {
        const std::size_t n = test_set.records.size();
        const std::size_t G = network.config().grid_size;
        const std::size_t R = network.config().rain_classes;
        if (G != cfg.grid.size())
            throw InvalidArgument("cnn_predictions: checkpoint grid size disagrees with the grid");

        std::vector<float> doa_logits, rain_logits;
        net::infer_dataset(network, test_set, cfg.batch_size, doa_logits, rain_logits);

        CnnPredictions pred;
        pred.estimates.resize(n);
        pred.rain_argmax.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            std::vector<float> dl(doa_logits.begin() + i * G, doa_logits.begin() + (i + 1) * G);
            pred.estimates[i] = net::decode_doa(dl, cfg.num_sources, cfg.grid);
            std::size_t argmax = 0;
            for (std::size_t r = 1; r < R; ++r)
                if (rain_logits[i * R + r] > rain_logits[i * R + argmax])
                    argmax = r;
            pred.rain_argmax[i] = std::uint8_t(argmax);
        }
        return pred;
    }

    EvalReport evaluate(const data::Dataset &test_set, const std::vector<LabeledNet> &networks,
                        const EvalConfig &cfg)
    {
        if (test_set.records.empty())
            throw InvalidArgument("evaluate: empty test set");
        for (const LabeledNet &ln : networks)
            if (!ln.network)
                throw InvalidArgument("evaluate: null network for label '" + ln.label + "'");

        EvalReport report;
        report.test_seed = test_set.header.global_seed;
        report.test_records = test_set.records.size();

        const auto truths = truth_angles(test_set);
        const auto buckets = bucket_by_snr(test_set);
        for (const auto &kv : buckets)
            report.snr_buckets_db.push_back(kv.first);

        // Classical baselines.
        for (doa::Method method : cfg.baselines)
        {
            const auto estimates = baseline_estimates(test_set, method, cfg);
            for (const auto &kv : buckets)
                report.rmse_rows.push_back({kv.first, doa::method_name(method),
                                            doa::rmse_deg(gather(estimates, kv.second),
                                                          gather(truths, kv.second))});
        }

        // Networks: DoA RMSE rows plus rain accuracy and confusion.
        const std::size_t R = test_set.header.rain_classes;
        for (const LabeledNet &ln : networks)
        {
            const CnnPredictions pred = cnn_predictions(*ln.network, test_set, cfg);
            for (const auto &kv : buckets)
                report.rmse_rows.push_back({kv.first, "cnn-" + ln.label,
                                            doa::rmse_deg(gather(pred.estimates, kv.second),
                                                          gather(truths, kv.second))});
            for (const auto &kv : buckets)
            {
                std::size_t correct = 0;
                for (std::size_t i : kv.second)
                    correct += (pred.rain_argmax[i] == test_set.records[i].rain_index) ? 1 : 0;
                report.acc_rows.push_back(
                    {kv.first, ln.label, 100.0 * double(correct) / double(kv.second.size())});
            }
            EvalReport::Confusion confusion;
            confusion.mode = ln.label;
            confusion.classes = R;
            confusion.counts.assign(R * R, 0);
            for (std::size_t i = 0; i < test_set.records.size(); ++i)
                ++confusion.counts[std::size_t(test_set.records[i].rain_index) * R +
                                   pred.rain_argmax[i]];
            report.confusions.push_back(std::move(confusion));
        }

        // Soft trend check: RMSE should not get worse as SNR improves.
        std::map<std::string, std::vector<std::pair<double, double>>> per_method;
        for (const auto &row : report.rmse_rows)
            per_method[row.method].push_back({row.snr_db, row.rmse_deg});
        for (auto &kv : per_method)
        {
            auto &series = kv.second;
            std::sort(series.begin(), series.end());
            std::size_t inversions = 0;
            double worst = 0.0;
            for (std::size_t i = 1; i < series.size(); ++i)
                if (series[i].second > series[i - 1].second + 1e-12)
                {
                    ++inversions;
                    worst = std::max(worst, series[i].second - series[i - 1].second);
                }
            if (inversions > 1 || worst > 0.05)
            {
                char buf[256];
                std::snprintf(buf, sizeof(buf),
                              "method %s: RMSE not monotone in SNR (%zu inversions, worst +%.4f deg)",
                              kv.first.c_str(), inversions, worst);
                report.warnings.push_back(buf);
            }
        }
        return report;
    }

    void export_report(const EvalReport &report, const std::string &out_dir)
    {
        std::filesystem::create_directories(out_dir);
        char buf[256];

        {
            std::ofstream out(out_dir + "/rmse_vs_snr.csv", std::ios::trunc);
            if (!out)
                throw IoError(out_dir + "/rmse_vs_snr.csv: cannot open for writing");
            out << "snr_db,method,rmse_deg\n";
            for (const auto &row : report.rmse_rows)
            {
                std::snprintf(buf, sizeof(buf), "%.9g,%s,%.9g\n", row.snr_db,
                              row.method.c_str(), row.rmse_deg);
                out << buf;
            }
        }
        {
            std::ofstream out(out_dir + "/rain_acc.csv", std::ios::trunc);
            if (!out)
                throw IoError(out_dir + "/rain_acc.csv: cannot open for writing");
            out << "snr_db,mode,accuracy_pct\n";
            for (const auto &row : report.acc_rows)
            {
                std::snprintf(buf, sizeof(buf), "%.9g,%s,%.9g\n", row.snr_db,
                              row.mode.c_str(), row.accuracy_pct);
                out << buf;
            }
        }
        {
            std::ofstream out(out_dir + "/confusion.csv", std::ios::trunc);
            if (!out)
                throw IoError(out_dir + "/confusion.csv: cannot open for writing");
            out << "mode,true_class,predicted_class,count\n";
            for (const auto &confusion : report.confusions)
                for (std::size_t t = 0; t < confusion.classes; ++t)
                    for (std::size_t p = 0; p < confusion.classes; ++p)
                    {
                        std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%llu\n", confusion.mode.c_str(),
                                      t, p,
                                      (unsigned long long)confusion.counts[t * confusion.classes + p]);
                        out << buf;
                    }
        }
    }
}
