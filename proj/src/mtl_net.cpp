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

#include "raindoa/mtl_net.hpp"
#include "raindoa/gemm.hpp"
#include "raindoa/parallel.hpp"
#include "raindoa/rng.hpp"

#include <cstring>
#include <fstream>

namespace raindoa::net
{
    void NetConfig::validate() const
    {
        if (input_size < 4)
            throw InvalidArgument("NetConfig: input size must be at least 4");
        if (in_channels == 0 || width == 0 || hidden == 0 || grid_size == 0 || rain_classes == 0)
            throw InvalidArgument("NetConfig: zero-sized dimension");
        if (blocks != 2 && blocks != 4)
            throw InvalidArgument("NetConfig: blocks must be 2 or 4");
    }

    std::string weighting_name(WeightingMode m)
    {
        return m == WeightingMode::Uncertainty ? "uncertainty" : "fixed";
    }

    WeightingMode weighting_from_name(const std::string &name)
    {
        if (name == "uncertainty")
            return WeightingMode::Uncertainty;
        if (name == "fixed")
            return WeightingMode::Fixed;
        throw ConfigError("unknown weighting mode '" + name + "' (use uncertainty or fixed)");
    }

    namespace
    {
        constexpr double k_bn_eps = 1e-5;
        constexpr double k_bn_momentum = 0.1;

        // ---- spatial kernels on the (C, B, H, W) activation layout ----

        template <typename T>
        void im2col_3x3(const T *in, std::size_t C, std::size_t B, std::size_t H, std::size_t W, T *col)
        {
            const std::size_t n = B * H * W;
            parallel_for(C * 9, [&](std::size_t r0, std::size_t r1) {
                for (std::size_t r = r0; r < r1; ++r)
                {
                    const std::size_t c = r / 9;
                    const int ky = int(r % 9) / 3 - 1;
                    const int kx = int(r % 9) % 3 - 1;
                    const T *src = in + c * n;
                    T *dst = col + r * n;
                    for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t y = 0; y < H; ++y)
                        {
                            T *row = dst + (b * H + y) * W;
                            const int sy = int(y) + ky;
                            if (sy < 0 || sy >= int(H))
                            {
                                std::fill(row, row + W, T(0));
                                continue;
                            }
                            const T *srow = src + (b * H + std::size_t(sy)) * W;
                            // valid x range given the horizontal shift
                            const std::size_t x_begin = kx < 0 ? std::size_t(-kx) : 0;
                            const std::size_t x_end = kx > 0 ? W - std::size_t(kx) : W;
                            for (std::size_t x = 0; x < x_begin; ++x)
                                row[x] = T(0);
                            for (std::size_t x = x_begin; x < x_end; ++x)
                                row[x] = srow[std::size_t(int(x) + kx)];
                            for (std::size_t x = x_end; x < W; ++x)
                                row[x] = T(0);
                        }
                }
            });
        }

        template <typename T>
        void col2im_3x3(const T *col, std::size_t C, std::size_t B, std::size_t H, std::size_t W, T *out)
        {
            const std::size_t n = B * H * W;
            parallel_for(C, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                {
                    T *dst = out + c * n;
                    std::fill(dst, dst + n, T(0));
                    for (std::size_t kk = 0; kk < 9; ++kk)
                    {
                        const int ky = int(kk) / 3 - 1;
                        const int kx = int(kk) % 3 - 1;
                        const T *src = col + (c * 9 + kk) * n;
                        for (std::size_t b = 0; b < B; ++b)
                            for (std::size_t y = 0; y < H; ++y)
                            {
                                const int sy = int(y) + ky;
                                if (sy < 0 || sy >= int(H))
                                    continue;
                                const T *srow = src + (b * H + y) * W;
                                T *drow = dst + (b * H + std::size_t(sy)) * W;
                                const std::size_t x_begin = kx < 0 ? std::size_t(-kx) : 0;
                                const std::size_t x_end = kx > 0 ? W - std::size_t(kx) : W;
                                for (std::size_t x = x_begin; x < x_end; ++x)
                                    drow[std::size_t(int(x) + kx)] += srow[x];
                            }
                    }
                }
            });
        }

        template <typename T>
        void maxpool_2x2(const T *in, std::size_t C, std::size_t B, std::size_t H, std::size_t W,
                         T *out, std::int32_t *argmax)
        {
            const std::size_t P = H / 2, Q = W / 2;
            const std::size_t n_in = B * H * W;
            const std::size_t n_out = B * P * Q;
            parallel_for(C, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                {
                    const T *src = in + c * n_in;
                    T *dst = out + c * n_out;
                    std::int32_t *arg = argmax + c * n_out;
                    for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t py = 0; py < P; ++py)
                            for (std::size_t px = 0; px < Q; ++px)
                            {
                                const std::size_t base = (b * H + 2 * py) * W + 2 * px;
                                std::size_t best = base;
                                T best_v = src[base];
                                const std::size_t cand[3] = {base + 1, base + W, base + W + 1};
                                for (std::size_t k = 0; k < 3; ++k)
                                    if (src[cand[k]] > best_v)
                                    {
                                        best_v = src[cand[k]];
                                        best = cand[k];
                                    }
                                const std::size_t o = (b * P + py) * Q + px;
                                dst[o] = best_v;
                                arg[o] = std::int32_t(best);
                            }
                }
            });
        }

        template <typename T>
        void maxpool_2x2_backward(const T *dout, const std::int32_t *argmax,
                                  std::size_t C, std::size_t B, std::size_t H, std::size_t W, T *din)
        {
            const std::size_t P = H / 2, Q = W / 2;
            const std::size_t n_in = B * H * W;
            const std::size_t n_out = B * P * Q;
            parallel_for(C, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                {
                    T *dst = din + c * n_in;
                    std::fill(dst, dst + n_in, T(0));
                    const T *src = dout + c * n_out;
                    const std::int32_t *arg = argmax + c * n_out;
                    for (std::size_t o = 0; o < n_out; ++o)
                        dst[std::size_t(arg[o])] += src[o];
                }
            });
        }

        template <typename T>
        void add_row_bias(T *rows, const T *bias, std::size_t m, std::size_t n)
        {
            parallel_for(m, [&](std::size_t r0, std::size_t r1) {
                for (std::size_t i = r0; i < r1; ++i)
                {
                    T *row = rows + i * n;
                    const T b = bias[i];
                    for (std::size_t j = 0; j < n; ++j)
                        row[j] += b;
                }
            });
        }

        template <typename T>
        void relu_inplace(T *v, std::size_t n)
        {
            parallel_for(n, [&](std::size_t i0, std::size_t i1) {
                for (std::size_t i = i0; i < i1; ++i)
                    v[i] = v[i] > T(0) ? v[i] : T(0);
            });
        }

        // Zeroes gradient lanes where the forward activation was clamped.
        template <typename T>
        void relu_backward_inplace(T *grad, const T *act, std::size_t n)
        {
            parallel_for(n, [&](std::size_t i0, std::size_t i1) {
                for (std::size_t i = i0; i < i1; ++i)
                    if (!(act[i] > T(0)))
                        grad[i] = T(0);
            });
        }
    }

    // ------------------------------------------------------------------

    template <typename T>
    struct Network<T>::Impl
    {
        NetConfig cfg;
        std::vector<NamedTensor<T>> params;
        std::vector<NamedTensor<T>> state;

        struct BlockIdx
        {
            int w = -1, gamma = -1, beta = -1;   // into params
            int run_mean = -1, run_var = -1;     // into state
            std::size_t c_in = 0, c_out = 0, hw = 0; // spatial side length in `hw`
        };
        std::vector<BlockIdx> block_idx;
        int fc_shared_w = -1, fc_shared_b = -1;
        int doa_hidden_w = -1, doa_hidden_b = -1, doa_out_w = -1, doa_out_b = -1;
        int rain_hidden_w = -1, rain_hidden_b = -1, rain_out_w = -1, rain_out_b = -1;
        int s_doa_i = -1, s_rain_i = -1;

        // forward caches (sized on first use, reused across batches)
        struct BlockCache
        {
            std::vector<T> col;    // (c_in*9, B*H*W)
            std::vector<T> xhat;   // (c_out, B*H*W)
            std::vector<T> act;    // (c_out, B*H*W) post-ReLU
            std::vector<T> dact;   // gradient buffer, same shape as act
            std::vector<double> mean, invstd; // per channel (train mode)
        };
        std::vector<BlockCache> bc;
        std::vector<T> x_chw;        // (in_channels, B*M*M)
        std::vector<T> pool_out, pool_grad;
        std::vector<std::int32_t> pool_arg;
        std::vector<T> feat, dfeat;              // (F, B)
        std::vector<T> shared_act, dshared;      // (hidden, B)
        std::vector<T> doa_hidden_act, rain_hidden_act, dhid; // (hidden, B)
        std::vector<T> doa_logits_t, rain_logits_t, d_doa_logits, d_rain_logits;
        std::vector<T> dcol, wt_scratch, head_in_grad;
        std::size_t batch = 0;

        explicit Impl(const NetConfig &c) : cfg(c)
        {
            cfg.validate();
            build_tensors();
        }

        NamedTensor<T> &param(int i) { return params[std::size_t(i)]; }
        NamedTensor<T> &st(int i) { return state[std::size_t(i)]; }

        int add_param(const std::string &name, std::vector<std::size_t> shape)
        {
            NamedTensor<T> t;
            t.name = name;
            t.shape = std::move(shape);
            std::size_t n = 1;
            for (std::size_t d : t.shape)
                n *= d;
            t.v.assign(n, T(0));
            params.push_back(std::move(t));
            return int(params.size()) - 1;
        }

        int add_state(const std::string &name, std::size_t n, T fill)
        {
            NamedTensor<T> t;
            t.name = name;
            t.shape = {n};
            t.v.assign(n, fill);
            state.push_back(std::move(t));
            return int(state.size()) - 1;
        }

        void build_tensors()
        {
            const std::size_t M = cfg.input_size;
            const std::size_t P = cfg.pooled_size();
            block_idx.resize(cfg.blocks);
            for (std::size_t k = 0; k < cfg.blocks; ++k)
            {
                BlockIdx &b = block_idx[k];
                b.c_in = k == 0 ? cfg.in_channels : cfg.width;
                b.c_out = cfg.width;
                b.hw = k < 2 ? M : P;
                const std::string base = "conv" + std::to_string(k + 1);
                b.w = add_param(base + ".weight", {b.c_out, b.c_in, 3, 3});
                b.gamma = add_param(base + ".bn_gamma", {b.c_out});
                b.beta = add_param(base + ".bn_beta", {b.c_out});
                b.run_mean = add_state(base + ".bn_running_mean", b.c_out, T(0));
                b.run_var = add_state(base + ".bn_running_var", b.c_out, T(1));
            }

            const std::size_t F = cfg.flat_features();
            const std::size_t head_in = cfg.shared_fc1 ? cfg.hidden : F;
            if (cfg.shared_fc1)
            {
                fc_shared_w = add_param("fc_shared.weight", {cfg.hidden, F});
                fc_shared_b = add_param("fc_shared.bias", {cfg.hidden});
            }
            doa_hidden_w = add_param("doa_hidden.weight", {cfg.hidden, head_in});
            doa_hidden_b = add_param("doa_hidden.bias", {cfg.hidden});
            doa_out_w = add_param("doa_out.weight", {cfg.grid_size, cfg.hidden});
            doa_out_b = add_param("doa_out.bias", {cfg.grid_size});
            rain_hidden_w = add_param("rain_hidden.weight", {cfg.hidden, head_in});
            rain_hidden_b = add_param("rain_hidden.bias", {cfg.hidden});
            rain_out_w = add_param("rain_out.weight", {cfg.rain_classes, cfg.hidden});
            rain_out_b = add_param("rain_out.bias", {cfg.rain_classes});
            s_doa_i = add_param("s_doa", {1});
            s_rain_i = add_param("s_rain", {1});
        }

        void init_params(std::uint64_t seed)
        {
            RandomStream root(derive_seed(seed, 0xC0DE));
            for (std::size_t i = 0; i < params.size(); ++i)
            {
                NamedTensor<T> &t = params[std::size_t(i)];
                const bool is_weight = t.name.size() > 7 &&
                                       t.name.compare(t.name.size() - 7, 7, ".weight") == 0;
                if (!is_weight)
                {
                    const bool is_gamma = t.name.find(".bn_gamma") != std::string::npos;
                    std::fill(t.v.begin(), t.v.end(), is_gamma ? T(1) : T(0));
                    continue;
                }
                // fan-in scaled uniform
                std::size_t fan_in = 1;
                for (std::size_t d = 1; d < t.shape.size(); ++d)
                    fan_in *= t.shape[d];
                const double bound = 1.0 / std::sqrt(double(fan_in));
                RandomStream rng = root.fork(i);
                for (T &v : t.v)
                    v = T((2.0 * rng.uniform() - 1.0) * bound);
            }
            for (std::size_t k = 0; k < cfg.blocks; ++k)
            {
                std::fill(st(block_idx[k].run_mean).v.begin(), st(block_idx[k].run_mean).v.end(), T(0));
                std::fill(st(block_idx[k].run_var).v.begin(), st(block_idx[k].run_var).v.end(), T(1));
            }
        }

        // ---- batch norm ----

        void bn_forward(const BlockIdx &bi, std::vector<T> &y, BlockCache &cache,
                        std::size_t n, bool train_mode, bool update_running)
        {
            const T *gamma = param(bi.gamma).v.data();
            const T *beta = param(bi.beta).v.data();
            T *run_mean = st(bi.run_mean).v.data();
            T *run_var = st(bi.run_var).v.data();

            if (train_mode)
            {
                cache.mean.resize(bi.c_out);
                cache.invstd.resize(bi.c_out);
                cache.xhat.resize(bi.c_out * n);
            }

            parallel_for(bi.c_out, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                {
                    T *row = y.data() + c * n;
                    if (train_mode)
                    {
                        double sum = 0.0;
                        for (std::size_t i = 0; i < n; ++i)
                            sum += double(row[i]);
                        const double mean = sum / double(n);
                        double var_sum = 0.0;
                        for (std::size_t i = 0; i < n; ++i)
                        {
                            const double d = double(row[i]) - mean;
                            var_sum += d * d;
                        }
                        const double var = var_sum / double(n);
                        const double invstd = 1.0 / std::sqrt(var + k_bn_eps);
                        cache.mean[c] = mean;
                        cache.invstd[c] = invstd;
                        T *xh = cache.xhat.data() + c * n;
                        const T g = gamma[c], bt = beta[c];
                        for (std::size_t i = 0; i < n; ++i)
                        {
                            const T x = T((double(row[i]) - mean) * invstd);
                            xh[i] = x;
                            row[i] = g * x + bt;
                        }
                        if (update_running)
                        {
                            run_mean[c] = T((1.0 - k_bn_momentum) * double(run_mean[c]) + k_bn_momentum * mean);
                            run_var[c] = T((1.0 - k_bn_momentum) * double(run_var[c]) + k_bn_momentum * var);
                        }
                    }
                    else
                    {
                        const double invstd = 1.0 / std::sqrt(double(run_var[c]) + k_bn_eps);
                        const double mean = double(run_mean[c]);
                        const T g = gamma[c], bt = beta[c];
                        for (std::size_t i = 0; i < n; ++i)
                            row[i] = g * T((double(row[i]) - mean) * invstd) + bt;
                    }
                }
            });
        }

        void bn_backward(const BlockIdx &bi, std::vector<T> &dy, const BlockCache &cache,
                         std::size_t n, std::vector<NamedTensor<T>> &grads)
        {
            const T *gamma = param(bi.gamma).v.data();
            T *dgamma = grads[std::size_t(bi.gamma)].v.data();
            T *dbeta = grads[std::size_t(bi.beta)].v.data();

            parallel_for(bi.c_out, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                {
                    T *dyr = dy.data() + c * n;
                    const T *xh = cache.xhat.data() + c * n;
                    double sum_dy = 0.0, sum_dy_xhat = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                    {
                        sum_dy += double(dyr[i]);
                        sum_dy_xhat += double(dyr[i]) * double(xh[i]);
                    }
                    dgamma[c] = T(sum_dy_xhat);
                    dbeta[c] = T(sum_dy);
                    const double scale = double(gamma[c]) * cache.invstd[c] / double(n);
                    for (std::size_t i = 0; i < n; ++i)
                        dyr[i] = T(scale * (double(n) * double(dyr[i]) - sum_dy -
                                            double(xh[i]) * sum_dy_xhat));
                }
            });
        }

        // ---- forward ----

        void run_forward(const T *x, std::size_t B, bool train_mode, bool update_running)
        {
            batch = B;
            const std::size_t M = cfg.input_size;
            const std::size_t P = cfg.pooled_size();
            const std::size_t C = cfg.width;
            bc.resize(cfg.blocks);

            // (B, 3, M, M) -> (3, B*M*M)
            x_chw.resize(cfg.in_channels * B * M * M);
            parallel_for(cfg.in_channels, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                    for (std::size_t b = 0; b < B; ++b)
                        std::memcpy(x_chw.data() + (c * B + b) * M * M,
                                    x + (b * cfg.in_channels + c) * M * M, M * M * sizeof(T));
            });

            const T *input = x_chw.data();
            for (std::size_t k = 0; k < cfg.blocks; ++k)
            {
                const BlockIdx &bi = block_idx[k];
                BlockCache &cache = bc[k];
                const std::size_t side = bi.hw;
                const std::size_t n = B * side * side;

                cache.col.resize(bi.c_in * 9 * n);
                im2col_3x3(input, bi.c_in, B, side, side, cache.col.data());

                cache.act.resize(bi.c_out * n);
                linalg::gemm_nn(bi.c_out, n, bi.c_in * 9,
                                param(bi.w).v.data(), bi.c_in * 9,
                                cache.col.data(), n,
                                cache.act.data(), n);

                bn_forward(bi, cache.act, cache, n, train_mode, update_running);
                relu_inplace(cache.act.data(), cache.act.size());

                if (k == 1)
                {
                    pool_out.resize(C * B * P * P);
                    pool_arg.resize(C * B * P * P);
                    maxpool_2x2(cache.act.data(), C, B, side, side, pool_out.data(), pool_arg.data());
                    input = pool_out.data();
                }
                else
                {
                    input = cache.act.data();
                }
            }
            if (cfg.blocks == 4)
                input = bc[3].act.data();
            else
                input = pool_out.data();

            // flatten (C, B, P, P) -> (F, B)
            const std::size_t F = cfg.flat_features();
            feat.resize(F * B);
            parallel_for(C, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                    for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t p = 0; p < P * P; ++p)
                            feat[(c * P * P + p) * B + b] = input[(c * B + b) * P * P + p];
            });

            const T *head_in = feat.data();
            std::size_t head_in_dim = F;
            if (cfg.shared_fc1)
            {
                shared_act.resize(cfg.hidden * B);
                linalg::gemm_nn(cfg.hidden, B, F, param(fc_shared_w).v.data(), F,
                                feat.data(), B, shared_act.data(), B);
                add_row_bias(shared_act.data(), param(fc_shared_b).v.data(), cfg.hidden, B);
                relu_inplace(shared_act.data(), shared_act.size());
                head_in = shared_act.data();
                head_in_dim = cfg.hidden;
            }

            auto head = [&](int w_hid, int b_hid, int w_out, int b_out,
                            std::vector<T> &hidden_act, std::vector<T> &logits, std::size_t out_dim) {
                hidden_act.resize(cfg.hidden * B);
                linalg::gemm_nn(cfg.hidden, B, head_in_dim, param(w_hid).v.data(), head_in_dim,
                                head_in, B, hidden_act.data(), B);
                add_row_bias(hidden_act.data(), param(b_hid).v.data(), cfg.hidden, B);
                relu_inplace(hidden_act.data(), hidden_act.size());
                logits.resize(out_dim * B);
                linalg::gemm_nn(out_dim, B, cfg.hidden, param(w_out).v.data(), cfg.hidden,
                                hidden_act.data(), B, logits.data(), B);
                add_row_bias(logits.data(), param(b_out).v.data(), out_dim, B);
            };
            head(doa_hidden_w, doa_hidden_b, doa_out_w, doa_out_b,
                 doa_hidden_act, doa_logits_t, cfg.grid_size);
            head(rain_hidden_w, rain_hidden_b, rain_out_w, rain_out_b,
                 rain_hidden_act, rain_logits_t, cfg.rain_classes);
        }

        // ---- loss on the transposed logits ----

        Losses loss_and_logit_grads(const std::uint8_t *masks, const std::uint8_t *rain_labels,
                                    WeightingMode mode, T fixed_alpha, bool want_grads)
        {
            const std::size_t B = batch;
            const std::size_t G = cfg.grid_size;
            const std::size_t R = cfg.rain_classes;
            const T s_d = param(s_doa_i).v[0];
            const T s_r = param(s_rain_i).v[0];

            double doa_sum = 0.0;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t g = 0; g < G; ++g)
                    doa_sum += double(bce_with_logits(doa_logits_t[g * B + b], T(masks[b * G + g])));
            const T doa_bce = T(doa_sum / double(B));

            double ce_sum = 0.0;
            std::vector<T> probs_col(R);
            if (want_grads)
            {
                d_rain_logits.resize(R * B);
            }
            for (std::size_t b = 0; b < B; ++b)
            {
                if (rain_labels[b] >= R)
                    throw InvalidArgument("loss: rain label out of range");
                T peak = rain_logits_t[0 * B + b];
                for (std::size_t r = 1; r < R; ++r)
                    peak = std::max(peak, rain_logits_t[r * B + b]);
                double sum_exp = 0.0;
                for (std::size_t r = 0; r < R; ++r)
                    sum_exp += std::exp(double(rain_logits_t[r * B + b] - peak));
                const double log_z = std::log(sum_exp) + double(peak);
                ce_sum += log_z - double(rain_logits_t[std::size_t(rain_labels[b]) * B + b]);
                if (want_grads)
                    for (std::size_t r = 0; r < R; ++r)
                    {
                        const double p = std::exp(double(rain_logits_t[r * B + b]) - log_z);
                        const double y = (r == rain_labels[b]) ? 1.0 : 0.0;
                        d_rain_logits[r * B + b] = T(p - y);
                    }
            }
            const T rain_ce = T(ce_sum / double(B));

            Losses out;
            out.doa_bce = doa_bce;
            out.rain_ce = rain_ce;

            T w_doa, w_rain;
            if (mode == WeightingMode::Uncertainty)
            {
                w_doa = std::exp(-s_d);
                w_rain = std::exp(-s_r);
                out.total = w_doa * doa_bce + T(0.5) * T(G) * s_d + w_rain * rain_ce + T(0.5) * s_r;
            }
            else
            {
                w_doa = T(1);
                w_rain = fixed_alpha;
                out.total = doa_bce + fixed_alpha * rain_ce;
            }

            if (want_grads)
            {
                d_doa_logits.resize(G * B);
                const T inv_b = T(1) / T(B);
                parallel_for(G, [&](std::size_t g0, std::size_t g1) {
                    for (std::size_t g = g0; g < g1; ++g)
                        for (std::size_t b = 0; b < B; ++b)
                        {
                            const T l = doa_logits_t[g * B + b];
                            const T sig = T(1) / (T(1) + std::exp(-l));
                            d_doa_logits[g * B + b] =
                                w_doa * (sig - T(masks[b * G + g])) * inv_b;
                        }
                });
                const T scale_rain = w_rain / T(B);
                for (std::size_t i = 0; i < d_rain_logits.size(); ++i)
                    d_rain_logits[i] *= scale_rain;
            }
            return out;
        }

        // ---- backward ----

        void dense_backward(int w_i, int b_i, const std::vector<T> &dout, std::size_t out_dim,
                            const T *in, std::size_t in_dim, std::vector<NamedTensor<T>> &grads,
                            T *din /* (in_dim, B) or nullptr */)
        {
            const std::size_t B = batch;
            // dW = dout (out, B) * in^T, where in is (in_dim, B)
            linalg::gemm_nt(out_dim, in_dim, B, dout.data(), B, in, B,
                            grads[std::size_t(w_i)].v.data(), in_dim);
            T *db = grads[std::size_t(b_i)].v.data();
            for (std::size_t i = 0; i < out_dim; ++i)
            {
                double s = 0.0;
                for (std::size_t b = 0; b < B; ++b)
                    s += double(dout[i * B + b]);
                db[i] = T(s);
            }
            if (din)
            {
                wt_scratch.resize(in_dim * out_dim);
                linalg::transpose(out_dim, in_dim, param(w_i).v.data(), wt_scratch.data());
                linalg::gemm_nn(in_dim, B, out_dim, wt_scratch.data(), out_dim,
                                dout.data(), B, din, B);
            }
        }

        void run_backward(const std::uint8_t *masks, const std::uint8_t *rain_labels,
                          WeightingMode mode, T fixed_alpha,
                          std::vector<NamedTensor<T>> &grads, Losses &losses)
        {
            const std::size_t B = batch;
            const std::size_t F = cfg.flat_features();
            const std::size_t P_side = cfg.pooled_size();
            const std::size_t C = cfg.width;
            const std::size_t head_in_dim = cfg.shared_fc1 ? cfg.hidden : F;
            const T *head_in = cfg.shared_fc1 ? shared_act.data() : feat.data();

            losses = loss_and_logit_grads(masks, rain_labels, mode, fixed_alpha, true);

            // s gradients (zero when the weighting is fixed)
            if (mode == WeightingMode::Uncertainty)
            {
                const T s_d = param(s_doa_i).v[0];
                const T s_r = param(s_rain_i).v[0];
                grads[std::size_t(s_doa_i)].v[0] =
                    -std::exp(-s_d) * losses.doa_bce + T(0.5) * T(cfg.grid_size);
                grads[std::size_t(s_rain_i)].v[0] = -std::exp(-s_r) * losses.rain_ce + T(0.5);
            }
            else
            {
                grads[std::size_t(s_doa_i)].v[0] = T(0);
                grads[std::size_t(s_rain_i)].v[0] = T(0);
            }

            head_in_grad.assign(head_in_dim * B, T(0));
            std::vector<T> dtmp(head_in_dim * B);

            // DoA head
            dhid.resize(cfg.hidden * B);
            dense_backward(doa_out_w, doa_out_b, d_doa_logits, cfg.grid_size,
                           doa_hidden_act.data(), cfg.hidden, grads, dhid.data());
            relu_backward_inplace(dhid.data(), doa_hidden_act.data(), dhid.size());
            dense_backward(doa_hidden_w, doa_hidden_b, dhid, cfg.hidden,
                           head_in, head_in_dim, grads, dtmp.data());
            for (std::size_t i = 0; i < head_in_grad.size(); ++i)
                head_in_grad[i] += dtmp[i];

            // Rain head
            dhid.resize(cfg.hidden * B);
            dense_backward(rain_out_w, rain_out_b, d_rain_logits, cfg.rain_classes,
                           rain_hidden_act.data(), cfg.hidden, grads, dhid.data());
            relu_backward_inplace(dhid.data(), rain_hidden_act.data(), dhid.size());
            dense_backward(rain_hidden_w, rain_hidden_b, dhid, cfg.hidden,
                           head_in, head_in_dim, grads, dtmp.data());
            for (std::size_t i = 0; i < head_in_grad.size(); ++i)
                head_in_grad[i] += dtmp[i];

            // Shared dense layer, when present
            dfeat.resize(F * B);
            if (cfg.shared_fc1)
            {
                relu_backward_inplace(head_in_grad.data(), shared_act.data(), head_in_grad.size());
                dense_backward(fc_shared_w, fc_shared_b, head_in_grad, cfg.hidden,
                               feat.data(), F, grads, dfeat.data());
            }
            else
            {
                dfeat = head_in_grad;
            }

            // unflatten (F, B) -> (C, B, P, P)
            const std::size_t last = cfg.blocks - 1;
            std::vector<T> &dlast = cfg.blocks == 4 ? bc[last].dact : pool_grad;
            dlast.resize(C * B * P_side * P_side);
            parallel_for(C, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c)
                    for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t p = 0; p < P_side * P_side; ++p)
                            dlast[(c * B + b) * P_side * P_side + p] =
                                dfeat[(c * P_side * P_side + p) * B + b];
            });

            // conv blocks in reverse; pooling sits between blocks 2 and 3, so
            // pool_grad holds d(pool output) before block 2's turn.
            for (std::size_t k = cfg.blocks; k-- > 0;)
            {
                const BlockIdx &bi = block_idx[k];
                BlockCache &cache = bc[k];
                const std::size_t side = bi.hw;
                const std::size_t n = B * side * side;

                if (k == 1)
                {
                    cache.dact.resize(bi.c_out * n);
                    maxpool_2x2_backward(pool_grad.data(), pool_arg.data(), C, B, side, side,
                                         cache.dact.data());
                }
                std::vector<T> &dact = cache.dact;

                relu_backward_inplace(dact.data(), cache.act.data(), dact.size());
                bn_backward(bi, dact, cache, n, grads);

                // weight gradient: dW = dact (c_out, n) * col^T
                linalg::gemm_nt(bi.c_out, bi.c_in * 9, n, dact.data(), n,
                                cache.col.data(), n, grads[std::size_t(bi.w)].v.data(), bi.c_in * 9);

                if (k == 0)
                    break; // input gradient not needed

                // input gradient: col grad = W^T * dact, then col2im
                dcol.resize(bi.c_in * 9 * n);
                wt_scratch.resize(bi.c_in * 9 * bi.c_out);
                linalg::transpose(bi.c_out, bi.c_in * 9, param(bi.w).v.data(), wt_scratch.data());
                linalg::gemm_nn(bi.c_in * 9, n, bi.c_out, wt_scratch.data(), bi.c_out,
                                dact.data(), n, dcol.data(), n);

                if (k == 2)
                {
                    pool_grad.resize(bi.c_in * B * side * side);
                    col2im_3x3(dcol.data(), bi.c_in, B, side, side, pool_grad.data());
                }
                else
                {
                    bc[k - 1].dact.resize(bi.c_in * B * side * side);
                    col2im_3x3(dcol.data(), bi.c_in, B, side, side, bc[k - 1].dact.data());
                }
            }
        }
    };

    // ------------------------------------------------------------------

    template <typename T>
    Network<T>::Network(const NetConfig &cfg) : impl_(std::make_unique<Impl>(cfg)) {}
    template <typename T>
    Network<T>::Network(Network &&) noexcept = default;
    template <typename T>
    Network<T> &Network<T>::operator=(Network &&) noexcept = default;
    template <typename T>
    Network<T>::~Network() = default;

    template <typename T>
    const NetConfig &Network<T>::config() const { return impl_->cfg; }

    template <typename T>
    void Network<T>::init_params(std::uint64_t seed) { impl_->init_params(seed); }

    template <typename T>
    std::vector<NamedTensor<T>> &Network<T>::parameters() { return impl_->params; }
    template <typename T>
    const std::vector<NamedTensor<T>> &Network<T>::parameters() const { return impl_->params; }
    template <typename T>
    std::vector<NamedTensor<T>> &Network<T>::state() { return impl_->state; }
    template <typename T>
    const std::vector<NamedTensor<T>> &Network<T>::state() const { return impl_->state; }

    template <typename T>
    NamedTensor<T> *Network<T>::find_parameter(const std::string &name)
    {
        for (auto &t : impl_->params)
            if (t.name == name)
                return &t;
        return nullptr;
    }

    template <typename T>
    T Network<T>::s_doa() const { return impl_->params[std::size_t(impl_->s_doa_i)].v[0]; }
    template <typename T>
    T Network<T>::s_rain() const { return impl_->params[std::size_t(impl_->s_rain_i)].v[0]; }

    template <typename T>
    std::vector<NamedTensor<T>> Network<T>::make_gradient_buffers() const
    {
        std::vector<NamedTensor<T>> grads = impl_->params;
        for (auto &g : grads)
            std::fill(g.v.begin(), g.v.end(), T(0));
        return grads;
    }

    template <typename T>
    void Network<T>::forward(const T *x, std::size_t batch, bool train_mode,
                             T *doa_logits, T *rain_logits)
    {
        impl_->run_forward(x, batch, train_mode, false);
        const std::size_t G = impl_->cfg.grid_size, R = impl_->cfg.rain_classes;
        linalg::transpose(G, batch, impl_->doa_logits_t.data(), doa_logits);
        linalg::transpose(R, batch, impl_->rain_logits_t.data(), rain_logits);
    }

    template <typename T>
    typename Network<T>::Losses Network<T>::compute_loss(const T *x, std::size_t batch,
                                                         const std::uint8_t *masks,
                                                         const std::uint8_t *rain_labels,
                                                         WeightingMode mode, T fixed_alpha)
    {
        impl_->run_forward(x, batch, true, false);
        return impl_->loss_and_logit_grads(masks, rain_labels, mode, fixed_alpha, false);
    }

    template <typename T>
    typename Network<T>::Losses Network<T>::forward_backward(const T *x, std::size_t batch,
                                                             const std::uint8_t *masks,
                                                             const std::uint8_t *rain_labels,
                                                             WeightingMode mode, T fixed_alpha,
                                                             std::vector<NamedTensor<T>> &grads)
    {
        if (grads.size() != impl_->params.size())
            throw InvalidArgument("forward_backward: gradient buffers have the wrong layout");
        impl_->run_forward(x, batch, true, true);
        Losses losses;
        impl_->run_backward(masks, rain_labels, mode, fixed_alpha, grads, losses);
        return losses;
    }

    template class Network<float>;
    template class Network<double>;

    // ------------------------------------------------------------------
    // checkpoints

    namespace
    {
        constexpr char k_ckpt_magic[4] = {'R', 'D', 'C', 'K'};
        constexpr std::uint32_t k_ckpt_version = 1;

        void w_u32(std::ofstream &out, std::uint32_t v)
        {
            char b[4];
            for (int i = 0; i < 4; ++i)
                b[i] = char((v >> (8 * i)) & 0xff);
            out.write(b, 4);
        }
        void w_u64(std::ofstream &out, std::uint64_t v)
        {
            char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = char((v >> (8 * i)) & 0xff);
            out.write(b, 8);
        }
        std::uint32_t r_u32(std::ifstream &in, const std::string &path)
        {
            unsigned char b[4];
            if (!in.read(reinterpret_cast<char *>(b), 4))
                throw IoError(path + ": truncated checkpoint");
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i)
                v |= std::uint32_t(b[i]) << (8 * i);
            return v;
        }
        std::uint64_t r_u64(std::ifstream &in, const std::string &path)
        {
            unsigned char b[8];
            if (!in.read(reinterpret_cast<char *>(b), 8))
                throw IoError(path + ": truncated checkpoint");
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i)
                v |= std::uint64_t(b[i]) << (8 * i);
            return v;
        }

        void write_blob(std::ofstream &out, const std::string &name, const NamedTensor<float> &t)
        {
            w_u32(out, std::uint32_t(name.size()));
            out.write(name.data(), std::streamsize(name.size()));
            w_u32(out, std::uint32_t(t.shape.size()));
            for (std::size_t d : t.shape)
                w_u64(out, d);
            static_assert(sizeof(float) == 4);
            out.write(reinterpret_cast<const char *>(t.v.data()), std::streamsize(4 * t.v.size()));
        }

        struct Blob
        {
            std::string name;
            std::vector<std::size_t> shape;
            std::vector<float> v;
        };

        Blob read_blob(std::ifstream &in, const std::string &path)
        {
            Blob b;
            const std::uint32_t name_len = r_u32(in, path);
            if (name_len > 4096)
                throw IoError(path + ": implausible blob name length");
            b.name.resize(name_len);
            if (!in.read(b.name.data(), name_len))
                throw IoError(path + ": truncated checkpoint");
            const std::uint32_t ndim = r_u32(in, path);
            if (ndim > 8)
                throw IoError(path + ": implausible blob rank");
            std::size_t n = 1;
            for (std::uint32_t i = 0; i < ndim; ++i)
            {
                b.shape.push_back(std::size_t(r_u64(in, path)));
                n *= b.shape.back();
            }
            b.v.resize(n);
            if (!in.read(reinterpret_cast<char *>(b.v.data()), std::streamsize(4 * n)))
                throw IoError(path + ": truncated checkpoint payload");
            return b;
        }
    }

    void save_checkpoint(const std::string &path, const Network<float> &net,
                         const CheckpointMeta &meta,
                         const std::vector<NamedTensor<float>> *adam_m,
                         const std::vector<NamedTensor<float>> *adam_v)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError(path + ": cannot open for writing");
        const NetConfig &cfg = net.config();

        out.write(k_ckpt_magic, 4);
        w_u32(out, k_ckpt_version);
        w_u32(out, std::uint32_t(cfg.input_size));
        w_u32(out, std::uint32_t(cfg.in_channels));
        w_u32(out, std::uint32_t(cfg.width));
        w_u32(out, std::uint32_t(cfg.blocks));
        w_u32(out, std::uint32_t(cfg.hidden));
        w_u32(out, cfg.shared_fc1 ? 1 : 0);
        w_u32(out, std::uint32_t(cfg.grid_size));
        w_u32(out, std::uint32_t(cfg.rain_classes));
        w_u32(out, meta.mode == WeightingMode::Uncertainty ? 0 : 1);
        std::uint64_t alpha_bits;
        static_assert(sizeof(double) == 8);
        std::memcpy(&alpha_bits, &meta.fixed_alpha, 8);
        w_u64(out, alpha_bits);
        w_u64(out, meta.epochs_done);
        w_u64(out, meta.steps_done);

        std::uint32_t blob_count = std::uint32_t(net.parameters().size() + net.state().size());
        if (adam_m && adam_v)
            blob_count += std::uint32_t(adam_m->size() + adam_v->size());
        w_u32(out, blob_count);

        for (const auto &t : net.parameters())
            write_blob(out, "param." + t.name, t);
        for (const auto &t : net.state())
            write_blob(out, "state." + t.name, t);
        if (adam_m && adam_v)
        {
            for (const auto &t : *adam_m)
                write_blob(out, "adam_m." + t.name, t);
            for (const auto &t : *adam_v)
                write_blob(out, "adam_v." + t.name, t);
        }
        if (!out)
            throw IoError(path + ": write failed");
    }

    LoadedCheckpoint load_checkpoint(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError(path + ": cannot open");
        char magic[4];
        if (!in.read(magic, 4) || std::memcmp(magic, k_ckpt_magic, 4) != 0)
            throw IoError(path + ": bad magic, not a raindoa checkpoint");
        const std::uint32_t version = r_u32(in, path);
        if (version != k_ckpt_version)
            throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));

        NetConfig cfg;
        cfg.input_size = r_u32(in, path);
        cfg.in_channels = r_u32(in, path);
        cfg.width = r_u32(in, path);
        cfg.blocks = r_u32(in, path);
        cfg.hidden = r_u32(in, path);
        cfg.shared_fc1 = r_u32(in, path) != 0;
        cfg.grid_size = r_u32(in, path);
        cfg.rain_classes = r_u32(in, path);

        LoadedCheckpoint loaded(cfg);
        loaded.meta.mode = r_u32(in, path) == 0 ? WeightingMode::Uncertainty : WeightingMode::Fixed;
        const std::uint64_t alpha_bits = r_u64(in, path);
        std::memcpy(&loaded.meta.fixed_alpha, &alpha_bits, 8);
        loaded.meta.epochs_done = r_u64(in, path);
        loaded.meta.steps_done = r_u64(in, path);

        const std::uint32_t blob_count = r_u32(in, path);
        auto assign = [&](std::vector<NamedTensor<float>> &dst, const std::string &name, Blob &b,
                          bool check_shape) {
            for (auto &t : dst)
                if (t.name == name)
                {
                    if (check_shape && t.shape != b.shape)
                        throw IoError(path + ": blob '" + name + "' has an unexpected shape");
                    t.v.assign(b.v.begin(), b.v.end());
                    t.shape = b.shape;
                    return true;
                }
            return false;
        };

        std::size_t params_seen = 0, state_seen = 0;
        for (std::uint32_t i = 0; i < blob_count; ++i)
        {
            Blob b = read_blob(in, path);
            if (b.name.rfind("param.", 0) == 0)
            {
                if (!assign(loaded.net.parameters(), b.name.substr(6), b, true))
                    throw IoError(path + ": unknown parameter blob '" + b.name + "'");
                ++params_seen;
            }
            else if (b.name.rfind("state.", 0) == 0)
            {
                if (!assign(loaded.net.state(), b.name.substr(6), b, true))
                    throw IoError(path + ": unknown state blob '" + b.name + "'");
                ++state_seen;
            }
            else if (b.name.rfind("adam_m.", 0) == 0)
            {
                NamedTensor<float> t;
                t.name = b.name.substr(7);
                t.shape = b.shape;
                t.v = std::move(b.v);
                loaded.adam_m.push_back(std::move(t));
            }
            else if (b.name.rfind("adam_v.", 0) == 0)
            {
                NamedTensor<float> t;
                t.name = b.name.substr(7);
                t.shape = b.shape;
                t.v = std::move(b.v);
                loaded.adam_v.push_back(std::move(t));
            }
            else
                throw IoError(path + ": unknown blob kind '" + b.name + "'");
        }
        if (params_seen != loaded.net.parameters().size())
            throw IoError(path + ": checkpoint is missing parameter blobs");
        if (state_seen != loaded.net.state().size())
            throw IoError(path + ": checkpoint is missing state blobs");
        return loaded;
    }
}
