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

#ifndef raindoa_gemm_H
#define raindoa_gemm_H

// Cache-blocked row-major GEMM kernels for the network. Work is split by
// output rows and every element accumulates in a fixed in-code order, so
// results are bit-identical for any worker count. The inner loops are
// written lane-wise so the compiler can vectorize them without reassociating
// floating-point sums.

#include <algorithm>
#include <cstddef>

#include "raindoa/parallel.hpp"

namespace raindoa::linalg
{
    // C (m x n) = A (m x k) * B (k x n), all row-major with leading dimensions.
    template <typename T>
    void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
                 const T *a, std::size_t lda,
                 const T *b, std::size_t ldb,
                 T *c, std::size_t ldc)
    {
        constexpr std::size_t kb_max = 128;  // A/B panel height
        constexpr std::size_t nb_max = 2048; // B panel width

        parallel_for(m, [&](std::size_t row0, std::size_t row1) {
            for (std::size_t i = row0; i < row1; ++i)
                std::fill(c + i * ldc, c + i * ldc + n, T(0));
            for (std::size_t jj = 0; jj < n; jj += nb_max)
            {
                const std::size_t jend = std::min(n, jj + nb_max);
                for (std::size_t kk = 0; kk < k; kk += kb_max)
                {
                    const std::size_t kend = std::min(k, kk + kb_max);
                    for (std::size_t i = row0; i < row1; ++i)
                    {
                        T *crow = c + i * ldc;
                        for (std::size_t p = kk; p < kend; ++p)
                        {
                            const T av = a[i * lda + p];
                            const T *brow = b + p * ldb;
                            for (std::size_t j = jj; j < jend; ++j)
                                crow[j] += av * brow[j];
                        }
                    }
                }
            }
        });
    }

    // C (m x n) = A (m x k) * B^T where B is (n x k) row-major.
    template <typename T>
    void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
                 const T *a, std::size_t lda,
                 const T *b, std::size_t ldb,
                 T *c, std::size_t ldc)
    {
        constexpr std::size_t kb_max = 1024; // dot-product panel
        constexpr int lanes = 16;

        parallel_for(m, [&](std::size_t row0, std::size_t row1) {
            for (std::size_t i = row0; i < row1; ++i)
                std::fill(c + i * ldc, c + i * ldc + n, T(0));
            for (std::size_t kk = 0; kk < k; kk += kb_max)
            {
                const std::size_t len = std::min(k, kk + kb_max) - kk;
                for (std::size_t i = row0; i < row1; ++i)
                {
                    const T *arow = a + i * lda + kk;
                    T *crow = c + i * ldc;
                    for (std::size_t j = 0; j < n; ++j)
                    {
                        const T *brow = b + j * ldb + kk;
                        T acc[lanes] = {};
                        std::size_t p = 0;
                        for (; p + lanes <= len; p += lanes)
                            for (int l = 0; l < lanes; ++l)
                                acc[l] += arow[p + l] * brow[p + l];
                        T s = T(0);
                        for (int l = 0; l < lanes; ++l)
                            s += acc[l];
                        for (; p < len; ++p)
                            s += arow[p] * brow[p];
                        crow[j] += s;
                    }
                }
            }
        });
    }

    // Plain out-of-place transpose: dst (n x m) = src^T for src (m x n).
    template <typename T>
    void transpose(std::size_t m, std::size_t n, const T *src, T *dst)
    {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                dst[j * m + i] = src[i * n + j];
    }
}

#endif
