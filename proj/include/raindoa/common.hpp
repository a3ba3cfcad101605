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

#ifndef raindoa_common_H
#define raindoa_common_H

#include <complex>
#include <stdexcept>
#include <string>

namespace raindoa
{
    using cplx = std::complex<double>;

    inline constexpr double pi = 3.14159265358979323846;

    inline double deg2rad(double deg) { return deg * pi / 180.0; }
    inline double rad2deg(double rad) { return rad * 180.0 / pi; }

    // Bad user input: malformed config files, out-of-range CLI arguments.
    // The CLI maps this to exit code 2.
    struct ConfigError : std::runtime_error
    {
        explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
    };

    // Violated model preconditions (non-finite inputs, inconsistent shapes).
    struct InvalidArgument : std::invalid_argument
    {
        explicit InvalidArgument(const std::string &msg) : std::invalid_argument(msg) {}
    };

    // Statistical model broke down (e.g. a covariance that should be PSD is not).
    struct ModelError : std::runtime_error
    {
        explicit ModelError(const std::string &msg) : std::runtime_error(msg) {}
    };

    // Numerical failure inside a solver. The CLI maps this to exit code 3.
    struct NumericalError : std::runtime_error
    {
        explicit NumericalError(const std::string &msg) : std::runtime_error(msg) {}
    };

    // Filesystem / serialization failure.
    struct IoError : std::runtime_error
    {
        explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
    };
}

#endif
