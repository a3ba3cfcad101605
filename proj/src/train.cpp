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

#include "raindoa/train.hpp"
#include "raindoa/parallel.hpp"
#include "raindoa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace raindoa::net
{
    namespace
    {
        constexpr double k_adam_beta1 = 0.9;
        constexpr double k_adam_beta2 = 0.999;
        constexpr double k_adam_eps = 1e-8;

        struct Adam
        {
            std::vector<NamedTensor<float>> m, v;
            std::uint64_t step = 0;

            void init_like(const std::vector<NamedTensor<float>> &params)
            {
                m = params;
                v = params;
                for (auto &t : m)
                    std::fill(t.v.begin(), t.v.end(), 0.0f);
                for (auto &t : v)
                    std::fill(t.v.begin(), t.v.end(), 0.0f);
            }

            void update(std::vector<NamedTensor<float>> &params,
                        const std::vector<NamedTensor<float>> &grads, double lr)
            {
                ++step;
                const double bias1 = 1.0 - std::pow(k_adam_beta1, double(step));
                const double bias2 = 1.0 - std::pow(k_adam_beta2, double(step));
                for (std::size_t t = 0; t < params.size(); ++t)
                {
                    float *p = params[t].v.data();
                    const float *g = grads[t].v.data();
                    float *mt = m[t].v.data();
                    float *vt = v[t].v.data();
                    const std::size_t n = params[t].v.size();
                    parallel_for(n, [&](std::size_t i0, std::size_t i1) {
                        for (std::size_t i = i0; i < i1; ++i)
                        {
                            mt[i] = float(k_adam_beta1 * mt[i] + (1.0 - k_adam_beta1) * g[i]);
                            vt[i] = float(k_adam_beta2 * vt[i] +
                                          (1.0 - k_adam_beta2) * double(g[i]) * double(g[i]));
                            const double mhat = mt[i] / bias1;
                            const double vhat = vt[i] / bias2;
                            p[i] = float(p[i] - lr * mhat / (std::sqrt(vhat) + k_adam_eps));
                        }
                    });
                }
            }
        };

        struct BatchBuffers
        {
            std::vector<float> x;
            std::vector<std::uint8_t> masks;
            std::vector<std::uint8_t> labels;
        };

        void assemble(const data::Dataset &ds, const std::vector<std::size_t> &order,
                      std::size_t begin, std::size_t end, BatchBuffers &buf)
        {
            const std::size_t n_tensor = 3 * std::size_t(ds.header.sensors) * ds.header.sensors;
            const std::size_t g = ds.header.grid_size;
            const std::size_t b_count = end - begin;
            buf.x.resize(b_count * n_tensor);
            buf.masks.resize(b_count * g);
            buf.labels.resize(b_count);
            for (std::size_t i = 0; i < b_count; ++i)
            {
                const data::Record &rec = ds.records[order[begin + i]];
                std::copy(rec.tensor.begin(), rec.tensor.end(), buf.x.begin() + i * n_tensor);
                std::copy(rec.doa_mask.begin(), rec.doa_mask.end(), buf.masks.begin() + i * g);
                buf.labels[i] = rec.rain_index;
            }
        }

        std::string format_line(std::size_t epoch, double train_total, double train_doa,
                                double train_rain, double val_total, double val_doa,
                                double val_rain, double s_doa, double s_rain,
                                double acc_pct, double rmse)
        {
            char buf[512];
            std::snprintf(buf, sizeof(buf),
                          "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                          epoch, train_total, train_doa, train_rain, val_total, val_doa,
                          val_rain, s_doa, s_rain, acc_pct, rmse);
            return buf;
        }

        struct ValMetrics
        {
            double total = 0.0, doa_bce = 0.0, rain_ce = 0.0;
            double rain_acc_pct = 0.0, doa_rmse_deg = 0.0;
        };

        ValMetrics validate(Network<float> &net, const data::Dataset &val_set,
                            const doa::AngularGrid &grid, std::size_t batch_size,
                            WeightingMode mode, double fixed_alpha)
        {
            const std::size_t n = val_set.records.size();
            const std::size_t G = net.config().grid_size;
            const std::size_t R = net.config().rain_classes;
            const std::size_t N = val_set.header.num_sources;

            BatchBuffers buf;
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::vector<float> doa_logits, rain_logits;

            double doa_sum = 0.0, rain_sum = 0.0;
            std::size_t correct = 0;
            std::vector<doa::DoaEstimate> estimates;
            std::vector<std::vector<double>> truths;
            estimates.reserve(n);
            truths.reserve(n);

            for (std::size_t begin = 0; begin < n; begin += batch_size)
            {
                const std::size_t end = std::min(n, begin + batch_size);
                assemble(val_set, order, begin, end, buf);
                const std::size_t b_count = end - begin;
                doa_logits.resize(b_count * G);
                rain_logits.resize(b_count * R);
                net.forward(buf.x.data(), b_count, false, doa_logits.data(), rain_logits.data());

                for (std::size_t i = 0; i < b_count; ++i)
                {
                    const data::Record &rec = val_set.records[order[begin + i]];
                    std::vector<float> dl(doa_logits.begin() + i * G, doa_logits.begin() + (i + 1) * G);
                    std::vector<float> rl(rain_logits.begin() + i * R, rain_logits.begin() + (i + 1) * R);

                    float bce = 0.0f;
                    for (std::size_t gidx = 0; gidx < G; ++gidx)
                        bce += bce_with_logits(dl[gidx], float(rec.doa_mask[gidx]));
                    doa_sum += bce;
                    rain_sum += cross_entropy(rl, rec.rain_index);

                    std::size_t argmax = 0;
                    for (std::size_t r = 1; r < R; ++r)
                        if (rl[r] > rl[argmax])
                            argmax = r;
                    correct += (argmax == rec.rain_index) ? 1 : 0;

                    estimates.push_back(decode_doa(dl, N, grid));
                    std::vector<double> truth;
                    for (float a : rec.angles_deg)
                        truth.push_back(deg2rad(double(a)));
                    truths.push_back(std::move(truth));
                }
            }

            ValMetrics vm;
            vm.doa_bce = doa_sum / double(n);
            vm.rain_ce = rain_sum / double(n);
            if (mode == WeightingMode::Uncertainty)
            {
                const double sd = net.s_doa(), sr = net.s_rain();
                vm.total = std::exp(-sd) * vm.doa_bce + 0.5 * double(G) * sd +
                           std::exp(-sr) * vm.rain_ce + 0.5 * sr;
            }
            else
                vm.total = vm.doa_bce + fixed_alpha * vm.rain_ce;
            vm.rain_acc_pct = 100.0 * double(correct) / double(n);
            vm.doa_rmse_deg = doa::rmse_deg(estimates, truths);
            return vm;
        }
    }

    const char *TrainResult::csv_header()
    {
        return "epoch,train_total,train_doa_bce,train_rain_ce,val_total,val_doa_bce,"
               "val_rain_ce,s_doa,s_rain,val_rain_acc_pct,val_doa_rmse_deg";
    }

    TrainResult train(Network<float> &net, const data::Dataset &train_set,
                      const data::Dataset &val_set, const doa::AngularGrid &grid,
                      const TrainOptions &opt, const ResumeState *resume)
    {
        const NetConfig &cfg = net.config();
        if (train_set.records.empty() || val_set.records.empty())
            throw InvalidArgument("train: empty train or validation set");
        if (train_set.header.grid_size != cfg.grid_size || grid.size() != cfg.grid_size)
            throw InvalidArgument("train: grid size disagrees between data, grid and network");
        if (train_set.header.sensors != cfg.input_size)
            throw InvalidArgument("train: sensor count disagrees with the network input");
        if (train_set.header.rain_classes != cfg.rain_classes)
            throw InvalidArgument("train: rain class count disagrees with the network");
        if (opt.batch_size == 0 || opt.epochs == 0)
            throw InvalidArgument("train: batch size and epochs must be positive");

        Adam adam;
        std::size_t start_epoch = 0;
        if (resume)
        {
            adam.m = resume->adam_m;
            adam.v = resume->adam_v;
            adam.step = resume->steps_done;
            start_epoch = std::size_t(resume->epochs_done);
            if (adam.m.size() != net.parameters().size() || adam.v.size() != adam.m.size())
                throw InvalidArgument("train: resume state does not match the network");
        }
        else
            adam.init_like(net.parameters());

        std::vector<NamedTensor<float>> grads = net.make_gradient_buffers();
        const std::size_t n_train = train_set.records.size();
        std::vector<std::size_t> order(n_train);

        TrainResult result;
        result.best_val_total = std::numeric_limits<double>::infinity();

        BatchBuffers buf;
        for (std::size_t epoch = start_epoch; epoch < opt.epochs; ++epoch)
        {
            // Epoch shuffle is a pure function of (seed, epoch) so a resumed
            // run walks the identical batch sequence.
            std::iota(order.begin(), order.end(), 0);
            RandomStream shuffle_rng(derive_seed(opt.seed, 0xE70C + epoch));
            for (std::size_t i = n_train; i > 1; --i)
                std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

            double total_sum = 0.0, doa_sum = 0.0, rain_sum = 0.0;
            for (std::size_t begin = 0; begin < n_train; begin += opt.batch_size)
            {
                const std::size_t end = std::min(n_train, begin + opt.batch_size);
                assemble(train_set, order, begin, end, buf);
                const auto losses = net.forward_backward(
                    buf.x.data(), end - begin, buf.masks.data(), buf.labels.data(),
                    opt.mode, float(opt.fixed_alpha), grads);
                if (!std::isfinite(losses.total))
                    throw NumericalError(
                        "train: loss diverged (epoch " + std::to_string(epoch + 1) + ", step " +
                        std::to_string(adam.step + 1) + ", loss " + std::to_string(losses.total) + ")");
                adam.update(net.parameters(), grads, opt.learning_rate);
                const double w = double(end - begin);
                total_sum += double(losses.total) * w;
                doa_sum += double(losses.doa_bce) * w;
                rain_sum += double(losses.rain_ce) * w;
            }

            const ValMetrics vm = validate(net, val_set, grid, opt.batch_size,
                                           opt.mode, opt.fixed_alpha);

            result.metric_lines.push_back(format_line(
                epoch + 1, total_sum / double(n_train), doa_sum / double(n_train),
                rain_sum / double(n_train), vm.total, vm.doa_bce, vm.rain_ce,
                double(net.s_doa()), double(net.s_rain()), vm.rain_acc_pct, vm.doa_rmse_deg));

            CheckpointMeta meta;
            meta.mode = opt.mode;
            meta.fixed_alpha = opt.fixed_alpha;
            meta.epochs_done = epoch + 1;
            meta.steps_done = adam.step;

            if (vm.total < result.best_val_total)
            {
                result.best_val_total = vm.total;
                result.best_epoch = epoch + 1;
                if (!opt.best_checkpoint_path.empty())
                    save_checkpoint(opt.best_checkpoint_path, net, meta);
            }
            if (!opt.resume_checkpoint_path.empty())
                save_checkpoint(opt.resume_checkpoint_path, net, meta, &adam.m, &adam.v);

            ++result.epochs_run;
        }

        if (!opt.metrics_csv_path.empty())
        {
            std::ofstream out(opt.metrics_csv_path, std::ios::trunc);
            if (!out)
                throw IoError(opt.metrics_csv_path + ": cannot open for writing");
            out << TrainResult::csv_header() << "\n";
            for (const std::string &line : result.metric_lines)
                out << line << "\n";
        }
        return result;
    }

    void infer_dataset(Network<float> &net, const data::Dataset &ds, std::size_t batch_size,
                       std::vector<float> &doa_logits, std::vector<float> &rain_logits)
    {
        const std::size_t n = ds.records.size();
        const std::size_t G = net.config().grid_size;
        const std::size_t R = net.config().rain_classes;
        if (ds.header.grid_size != G || ds.header.sensors != net.config().input_size ||
            ds.header.rain_classes != R)
            throw InvalidArgument("infer_dataset: dataset header disagrees with the network");

        doa_logits.resize(n * G);
        rain_logits.resize(n * R);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        BatchBuffers buf;
        for (std::size_t begin = 0; begin < n; begin += batch_size)
        {
            const std::size_t end = std::min(n, begin + batch_size);
            assemble(ds, order, begin, end, buf);
            net.forward(buf.x.data(), end - begin, false,
                        doa_logits.data() + begin * G, rain_logits.data() + begin * R);
        }
    }
}
