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

#include "raindoa/toml.hpp"
#include "raindoa/common.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace raindoa::toml
{
    namespace
    {
        [[noreturn]] void fail(const std::string &origin, int line, const std::string &msg)
        {
            throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
        }

        std::string trim(const std::string &s)
        {
            std::size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return "";
            std::size_t e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        bool is_bare_key_char(char c)
        {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
        }

        bool valid_dotted_key(const std::string &key)
        {
            if (key.empty() || key.front() == '.' || key.back() == '.')
                return false;
            bool prev_dot = false;
            for (char c : key)
            {
                if (c == '.')
                {
                    if (prev_dot)
                        return false;
                    prev_dot = true;
                }
                else
                {
                    if (!is_bare_key_char(c))
                        return false;
                    prev_dot = false;
                }
            }
            return true;
        }

        // Strips an end-of-line comment that is not inside a string literal.
        std::string strip_comment(const std::string &s)
        {
            bool in_string = false;
            for (std::size_t i = 0; i < s.size(); ++i)
            {
                char c = s[i];
                if (in_string)
                {
                    if (c == '\\')
                        ++i;
                    else if (c == '"')
                        in_string = false;
                }
                else if (c == '"')
                    in_string = true;
                else if (c == '#')
                    return s.substr(0, i);
            }
            return s;
        }

        struct Cursor
        {
            const std::string &text;
            std::size_t pos = 0;
            const std::string &origin;
            int line;

            void skip_ws()
            {
                while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t'))
                    ++pos;
            }
            bool done() const { return pos >= text.size(); }
            char peek() const { return text[pos]; }
        };

        Value parse_value(Cursor &cur);

        Value parse_string_literal(Cursor &cur)
        {
            Value v;
            v.kind = Value::Kind::String;
            v.line = cur.line;
            ++cur.pos; // opening quote
            std::string out;
            while (!cur.done() && cur.peek() != '"')
            {
                char c = cur.text[cur.pos++];
                if (c == '\\')
                {
                    if (cur.done())
                        fail(cur.origin, cur.line, "unterminated escape in string");
                    char esc = cur.text[cur.pos++];
                    switch (esc)
                    {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default:
                        fail(cur.origin, cur.line, std::string("unsupported escape '\\") + esc + "'");
                    }
                }
                else
                    out += c;
            }
            if (cur.done())
                fail(cur.origin, cur.line, "unterminated string");
            ++cur.pos; // closing quote
            v.str_v = out;
            return v;
        }

        Value parse_array(Cursor &cur)
        {
            Value v;
            v.kind = Value::Kind::Array;
            v.line = cur.line;
            ++cur.pos; // '['
            cur.skip_ws();
            if (!cur.done() && cur.peek() == ']')
            {
                ++cur.pos;
                return v;
            }
            while (true)
            {
                cur.skip_ws();
                if (cur.done())
                    fail(cur.origin, cur.line, "unterminated array");
                v.array_v.push_back(parse_value(cur));
                cur.skip_ws();
                if (cur.done())
                    fail(cur.origin, cur.line, "unterminated array");
                char c = cur.text[cur.pos];
                if (c == ',')
                {
                    ++cur.pos;
                    continue;
                }
                if (c == ']')
                {
                    ++cur.pos;
                    return v;
                }
                fail(cur.origin, cur.line, "expected ',' or ']' in array");
            }
        }

        Value parse_scalar(Cursor &cur)
        {
            std::size_t start = cur.pos;
            while (!cur.done())
            {
                char c = cur.peek();
                if (c == ',' || c == ']' || c == ' ' || c == '\t')
                    break;
                ++cur.pos;
            }
            std::string tok = cur.text.substr(start, cur.pos - start);
            Value v;
            v.line = cur.line;
            if (tok == "true" || tok == "false")
            {
                v.kind = Value::Kind::Boolean;
                v.bool_v = (tok == "true");
                return v;
            }
            if (tok.empty())
                fail(cur.origin, cur.line, "missing value");

            // Number: integer when it looks like one, float otherwise.
            std::string digits = tok;
            digits.erase(std::remove(digits.begin(), digits.end(), '_'), digits.end());
            errno = 0;
            char *end = nullptr;
            const double d = std::strtod(digits.c_str(), &end);
            if (end == digits.c_str() || *end != '\0' || errno == ERANGE)
                fail(cur.origin, cur.line, "malformed value '" + tok + "'");
            const bool looks_integer =
                digits.find_first_of(".eE") == std::string::npos &&
                digits.find("inf") == std::string::npos && digits.find("nan") == std::string::npos;
            if (looks_integer)
            {
                v.kind = Value::Kind::Integer;
                v.int_v = std::strtoll(digits.c_str(), nullptr, 10);
            }
            else
            {
                v.kind = Value::Kind::Float;
                v.float_v = d;
            }
            return v;
        }

        Value parse_value(Cursor &cur)
        {
            cur.skip_ws();
            if (cur.done())
                fail(cur.origin, cur.line, "missing value");
            char c = cur.peek();
            if (c == '"')
                return parse_string_literal(cur);
            if (c == '[')
                return parse_array(cur);
            return parse_scalar(cur);
        }

        const char *kind_name(Value::Kind k)
        {
            switch (k)
            {
            case Value::Kind::Integer: return "integer";
            case Value::Kind::Float: return "float";
            case Value::Kind::Boolean: return "boolean";
            case Value::Kind::String: return "string";
            case Value::Kind::Array: return "array";
            }
            return "?";
        }
    }

    Table Table::parse_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError(path + ": cannot open file");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str(), path);
    }

    Table Table::parse_string(const std::string &text, const std::string &origin)
    {
        Table table;
        table.origin_ = origin;

        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line_no = 0;
        while (std::getline(in, raw))
        {
            ++line_no;
            std::string line = trim(strip_comment(raw));
            if (line.empty())
                continue;

            if (line.front() == '[')
            {
                if (line.size() < 3 || line.back() != ']')
                    fail(origin, line_no, "malformed section header");
                if (line[1] == '[')
                    fail(origin, line_no, "array-of-tables is not supported; use [section.name]");
                section = trim(line.substr(1, line.size() - 2));
                if (!valid_dotted_key(section))
                    fail(origin, line_no, "invalid section name '" + section + "'");
                continue;
            }

            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                fail(origin, line_no, "expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            if (!valid_dotted_key(key))
                fail(origin, line_no, "invalid key '" + key + "'");

            std::string value_text = trim(line.substr(eq + 1));
            Cursor cur{value_text, 0, origin, line_no};
            Value value = parse_value(cur);
            cur.skip_ws();
            if (!cur.done())
                fail(origin, line_no, "trailing characters after value");

            std::string full_key = section.empty() ? key : section + "." + key;
            if (table.entries_.count(full_key))
                fail(origin, line_no, "duplicate key '" + full_key + "'");
            value.line = line_no;
            table.entries_.emplace(std::move(full_key), std::move(value));
        }
        return table;
    }

    const Value *Table::find(const std::string &key) const
    {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    int Table::line_of(const std::string &key) const
    {
        const Value *v = find(key);
        return v ? v->line : 0;
    }

    namespace
    {
        [[noreturn]] void missing(const std::string &origin, const std::string &key)
        {
            throw ConfigError(origin + ": missing required key '" + key + "'");
        }

        [[noreturn]] void mistyped(const std::string &origin, const std::string &key,
                                   const Value &v, const char *want)
        {
            throw ConfigError(origin + ":" + std::to_string(v.line) + ": key '" + key +
                              "' must be " + want + ", got " + kind_name(v.kind));
        }
    }

    double Table::number(const std::string &key) const
    {
        const Value *v = find(key);
        if (!v)
            missing(origin_, key);
        if (!v->is_number())
            mistyped(origin_, key, *v, "a number");
        return v->as_number();
    }

    double Table::number_or(const std::string &key, double fallback) const
    {
        const Value *v = find(key);
        if (!v)
            return fallback;
        if (!v->is_number())
            mistyped(origin_, key, *v, "a number");
        return v->as_number();
    }

    std::int64_t Table::integer(const std::string &key) const
    {
        const Value *v = find(key);
        if (!v)
            missing(origin_, key);
        if (v->kind != Value::Kind::Integer)
            mistyped(origin_, key, *v, "an integer");
        return v->int_v;
    }

    std::int64_t Table::integer_or(const std::string &key, std::int64_t fallback) const
    {
        const Value *v = find(key);
        if (!v)
            return fallback;
        if (v->kind != Value::Kind::Integer)
            mistyped(origin_, key, *v, "an integer");
        return v->int_v;
    }

    bool Table::boolean_or(const std::string &key, bool fallback) const
    {
        const Value *v = find(key);
        if (!v)
            return fallback;
        if (v->kind != Value::Kind::Boolean)
            mistyped(origin_, key, *v, "a boolean");
        return v->bool_v;
    }

    std::string Table::string(const std::string &key) const
    {
        const Value *v = find(key);
        if (!v)
            missing(origin_, key);
        if (v->kind != Value::Kind::String)
            mistyped(origin_, key, *v, "a string");
        return v->str_v;
    }

    std::string Table::string_or(const std::string &key, const std::string &fallback) const
    {
        const Value *v = find(key);
        if (!v)
            return fallback;
        if (v->kind != Value::Kind::String)
            mistyped(origin_, key, *v, "a string");
        return v->str_v;
    }

    std::vector<double> Table::number_array(const std::string &key) const
    {
        const Value *v = find(key);
        if (!v)
            missing(origin_, key);
        if (v->kind != Value::Kind::Array)
            mistyped(origin_, key, *v, "an array");
        std::vector<double> out;
        out.reserve(v->array_v.size());
        for (const Value &e : v->array_v)
        {
            if (!e.is_number())
                mistyped(origin_, key, e, "an array of numbers");
            out.push_back(e.as_number());
        }
        return out;
    }

    std::vector<std::string> Table::keys() const
    {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto &kv : entries_)
            out.push_back(kv.first);
        return out;
    }

    std::vector<std::string> Table::keys_with_prefix(const std::string &prefix) const
    {
        std::vector<std::string> out;
        for (const auto &kv : entries_)
            if (kv.first.rfind(prefix, 0) == 0)
                out.push_back(kv.first);
        return out;
    }
}
