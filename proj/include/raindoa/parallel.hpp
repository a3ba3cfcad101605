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

#ifndef raindoa_parallel_H
#define raindoa_parallel_H

// Deterministic fork/join parallelism. Work is split into contiguous index
// ranges and every output element is written by exactly one worker, so
// results are bit-identical for any worker count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace raindoa
{
    // Global worker count; set once from the CLI --workers flag.
    int num_workers();
    void set_num_workers(int n);

    // Calls fn(begin, end) on disjoint contiguous chunks of [0, n).
    template <typename Fn>
    void parallel_for(std::size_t n, Fn &&fn)
    {
        const int workers = std::min<std::size_t>(std::max(num_workers(), 1), std::max<std::size_t>(n, 1));
        if (workers <= 1 || n == 0)
        {
            if (n > 0)
                fn(std::size_t(0), n);
            return;
        }

        const std::size_t chunk = (n + workers - 1) / workers;
        std::vector<std::thread> pool;
        pool.reserve(workers - 1);
        std::exception_ptr error;
        std::mutex error_mutex;

        auto run = [&](std::size_t begin, std::size_t end) {
            try
            {
                fn(begin, end);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        };

        for (int w = 1; w < workers; ++w)
        {
            const std::size_t begin = std::size_t(w) * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end)
                break;
            pool.emplace_back(run, begin, end);
        }
        run(0, std::min(n, chunk));
        for (auto &t : pool)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }
}

#endif
