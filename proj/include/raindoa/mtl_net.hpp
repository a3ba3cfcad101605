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

#ifndef raindoa_mtl_net_H
#define raindoa_mtl_net_H

// From-scratch multi-task CNN: a shared convolutional encoder with two
// classification heads (grid DoA mask, rain class), trained with either an
// uncertainty-weighted objective carrying learnable per-task log-variances
// or a fixed weighting L_doa + alpha * L_rain. Convolutions run as
// im2col + blocked GEMM; all loops are deterministic for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "raindoa/classical_doa.hpp"
#include "raindoa/common.hpp"

namespace raindoa::net
{
    struct NetConfig
    {
        std::size_t input_size = 10;   // M: input is (3, M, M)
        std::size_t in_channels = 3;
        std::size_t width = 64;        // filters per conv block
        std::size_t blocks = 4;        // 2 or 4 conv blocks (2 = reduced test variant)
        std::size_t hidden = 256;      // dense hidden units per head
        bool shared_fc1 = false;       // insert a shared dense layer before the heads
        std::size_t grid_size = 61;    // G
        std::size_t rain_classes = 6;  // R

        std::size_t pooled_size() const { return input_size / 2; }
        std::size_t flat_features() const { return width * pooled_size() * pooled_size(); }
        void validate() const;
    };

    enum class WeightingMode
    {
        Uncertainty, // learnable log-variances s_doa, s_rain
        Fixed        // L_doa + alpha * L_rain
    };
    std::string weighting_name(WeightingMode m);
    WeightingMode weighting_from_name(const std::string &name);

    template <typename T>
    struct NamedTensor
    {
        std::string name;
        std::vector<std::size_t> shape;
        std::vector<T> v;

        std::size_t size() const { return v.size(); }
    };

    // --- per-sample losses ----------------------------------------------

    // Numerically stable binary cross-entropy with logits.
    template <typename T>
    T bce_with_logits(T logit, T target)
    {
        const T neg_abs = logit < T(0) ? logit : -logit;
        return std::max(logit, T(0)) - logit * target + std::log1p(std::exp(neg_abs));
    }

    // Uncertainty-weighted multi-label DoA loss:
    //   exp(-s) * sum_g BCE(logit_g, mask_g) + (G/2) * s.
    template <typename T>
    T doa_loss(const std::vector<T> &logits, const std::vector<std::uint8_t> &mask, T s_doa)
    {
        if (logits.size() != mask.size())
            throw InvalidArgument("doa_loss: logits/mask size mismatch");
        T bce = T(0);
        for (std::size_t g = 0; g < logits.size(); ++g)
            bce += bce_with_logits(logits[g], T(mask[g]));
        return std::exp(-s_doa) * bce + T(0.5) * T(logits.size()) * s_doa;
    }

    // Exact Bernoulli negative log-likelihood with temperature-scaled logits
    // (sigmoid of logits / sigma^2); kept separate so the compact weighted
    // form above can be tested as the approximation it is.
    template <typename T>
    T doa_scaled_logit_nll(const std::vector<T> &logits, const std::vector<std::uint8_t> &mask, T s_doa)
    {
        if (logits.size() != mask.size())
            throw InvalidArgument("doa_scaled_logit_nll: logits/mask size mismatch");
        const T inv_sigma2 = std::exp(-s_doa);
        T nll = T(0);
        for (std::size_t g = 0; g < logits.size(); ++g)
            nll += bce_with_logits(logits[g] * inv_sigma2, T(mask[g]));
        return nll;
    }

    // Softmax cross-entropy via log-sum-exp.
    template <typename T>
    T cross_entropy(const std::vector<T> &logits, std::size_t class_index)
    {
        if (class_index >= logits.size())
            throw InvalidArgument("cross_entropy: class index out of range");
        T peak = logits[0];
        for (T v : logits)
            peak = std::max(peak, v);
        T sum = T(0);
        for (T v : logits)
            sum += std::exp(v - peak);
        return std::log(sum) + peak - logits[class_index];
    }

    // Uncertainty-weighted rain loss: exp(-s) * CE + s / 2.
    template <typename T>
    T rain_loss(const std::vector<T> &logits, std::size_t class_index, T s_rain)
    {
        return std::exp(-s_rain) * cross_entropy(logits, class_index) + T(0.5) * s_rain;
    }

    // Combined objective on precomputed unscaled losses.
    template <typename T>
    T total_loss(T doa_bce_sum, T rain_ce, std::size_t grid_size, T s_doa, T s_rain)
    {
        return std::exp(-s_doa) * doa_bce_sum + T(0.5) * T(grid_size) * s_doa +
               std::exp(-s_rain) * rain_ce + T(0.5) * s_rain;
    }

    // --- network ----------------------------------------------------------

    template <typename T>
    class Network
    {
    public:
        explicit Network(const NetConfig &cfg);
        Network(Network &&) noexcept;
        Network &operator=(Network &&) noexcept;
        ~Network();

        const NetConfig &config() const;

        // Fan-in-scaled uniform init for weights, identity batch norm, s = 0.
        void init_params(std::uint64_t seed);

        // Trainable parameters in a fixed order (s_doa and s_rain are the
        // trailing size-1 tensors); `state()` holds batch-norm running moments.
        std::vector<NamedTensor<T>> &parameters();
        const std::vector<NamedTensor<T>> &parameters() const;
        std::vector<NamedTensor<T>> &state();
        const std::vector<NamedTensor<T>> &state() const;
        NamedTensor<T> *find_parameter(const std::string &name);

        T s_doa() const;
        T s_rain() const;

        // Zero-filled gradient buffers shaped like parameters().
        std::vector<NamedTensor<T>> make_gradient_buffers() const;

        struct Losses
        {
            T total = T(0);
            T doa_bce = T(0); // mean over batch of the per-sample BCE sum
            T rain_ce = T(0); // mean over batch of the cross-entropy
        };

        // Logits for a batch; x is (batch, 3, M, M) row-major, outputs are
        // (batch, G) and (batch, R) row-major. Train mode uses batch
        // statistics without touching the running moments; eval mode is a
        // pure function of the parameters.
        void forward(const T *x, std::size_t batch, bool train_mode,
                     T *doa_logits, T *rain_logits);

        // Loss under the given weighting; no gradients, no state updates.
        Losses compute_loss(const T *x, std::size_t batch,
                            const std::uint8_t *masks, const std::uint8_t *rain_labels,
                            WeightingMode mode, T fixed_alpha);

        // Training step computation: loss, parameter gradients, and a
        // running-moment update. Gradients are overwritten, not accumulated.
        Losses forward_backward(const T *x, std::size_t batch,
                                const std::uint8_t *masks, const std::uint8_t *rain_labels,
                                WeightingMode mode, T fixed_alpha,
                                std::vector<NamedTensor<T>> &grads);

    private:
        struct Impl;
        std::unique_ptr<Impl> impl_;
    };

    // Top-N local maxima of the (monotone) logit scores over the grid,
    // padded with the largest remaining bins; returned as grid angles.
    template <typename T>
    doa::DoaEstimate decode_doa(const std::vector<T> &doa_logits, std::size_t num_sources,
                                const doa::AngularGrid &grid)
    {
        if (doa_logits.size() != grid.size())
            throw InvalidArgument("decode_doa: logits length disagrees with the grid");
        std::vector<double> scores(doa_logits.begin(), doa_logits.end());
        const std::vector<std::size_t> peaks = doa::pick_peaks(scores, num_sources);
        doa::DoaEstimate est;
        est.method = doa::Method::CNN;
        for (std::size_t p : peaks)
            est.angles_rad.push_back(grid.point_rad(p));
        std::sort(est.angles_rad.begin(), est.angles_rad.end());
        return est;
    }

    // --- checkpoints --------------------------------------------------------

    struct CheckpointMeta
    {
        WeightingMode mode = WeightingMode::Uncertainty;
        double fixed_alpha = 1.0;
        std::uint64_t epochs_done = 0;
        std::uint64_t steps_done = 0;
    };

    // Named-blob binary with a shape header; optimizer blobs are optional and
    // present only in resume checkpoints.
    void save_checkpoint(const std::string &path, const Network<float> &net,
                         const CheckpointMeta &meta,
                         const std::vector<NamedTensor<float>> *adam_m = nullptr,
                         const std::vector<NamedTensor<float>> *adam_v = nullptr);

    struct LoadedCheckpoint
    {
        NetConfig cfg;
        CheckpointMeta meta;
        Network<float> net;
        std::vector<NamedTensor<float>> adam_m, adam_v; // empty unless stored

        explicit LoadedCheckpoint(const NetConfig &c) : cfg(c), net(c) {}
    };
    LoadedCheckpoint load_checkpoint(const std::string &path);
}

#endif
