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

#include "raindoa/parallel.hpp"

#include <atomic>

namespace raindoa
{
    namespace
    {
        std::atomic<int> g_workers{0}; // 0 = not set yet, use hardware concurrency
    }

    int num_workers()
    {
        int n = g_workers.load(std::memory_order_relaxed);
        if (n <= 0)
        {
            n = int(std::thread::hardware_concurrency());
            if (n <= 0)
                n = 1;
        }
        return n;
    }

    void set_num_workers(int n)
    {
        g_workers.store(n > 0 ? n : 0, std::memory_order_relaxed);
    }
}
