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

#ifndef raindoa_toml_H
#define raindoa_toml_H

// Minimal TOML subset used by the config files: comments, [dotted.sections],
// key = value with strings, booleans, integers, floats and flat arrays.
// Every parse or type error carries the file name and line number.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace raindoa::toml
{
    struct Value
    {
        enum class Kind
        {
            Integer,
            Float,
            Boolean,
            String,
            Array
        };

        Kind kind = Kind::Integer;
        std::int64_t int_v = 0;
        double float_v = 0.0;
        bool bool_v = false;
        std::string str_v;
        std::vector<Value> array_v;
        int line = 0;

        bool is_number() const { return kind == Kind::Integer || kind == Kind::Float; }
        double as_number() const { return kind == Kind::Integer ? double(int_v) : float_v; }
    };

    // Flat view of a parsed document: entries are keyed by "section.key".
    class Table
    {
    public:
        static Table parse_file(const std::string &path);
        static Table parse_string(const std::string &text, const std::string &origin);

        bool contains(const std::string &key) const { return entries_.count(key) != 0; }
        const Value *find(const std::string &key) const;

        // Typed getters; throw ConfigError naming the key when missing/mistyped.
        double number(const std::string &key) const;
        double number_or(const std::string &key, double fallback) const;
        std::int64_t integer(const std::string &key) const;
        std::int64_t integer_or(const std::string &key, std::int64_t fallback) const;
        bool boolean_or(const std::string &key, bool fallback) const;
        std::string string(const std::string &key) const;
        std::string string_or(const std::string &key, const std::string &fallback) const;
        std::vector<double> number_array(const std::string &key) const;

        std::vector<std::string> keys() const;
        std::vector<std::string> keys_with_prefix(const std::string &prefix) const;

        const std::string &origin() const { return origin_; }
        int line_of(const std::string &key) const;

    private:
        std::map<std::string, Value> entries_;
        std::string origin_;
    };
}

#endif
