// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fabroute/error.hpp"

namespace fabroute::text {

struct Token {
    std::string_view text;
    std::size_t column; // 1-based
};

/// Whitespace-split tokens of one line, '#' to end of line dropped.
inline std::vector<Token> tokenize(std::string_view line)
{
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == '#')
            break;
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '\n' &&
               line[i] != '#')
            ++i;
        tokens.push_back({line.substr(start, i - start), start + 1});
    }
    return tokens;
}

/// Calls fn(line_number, tokens) for every non-blank line.
template <class Fn> void for_each_line(std::string_view body, Fn &&fn)
{
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t end = body.find('\n', pos);
        if (end == std::string_view::npos)
            end = body.size();
        ++line_no;
        auto tokens = tokenize(body.substr(pos, end - pos));
        if (!tokens.empty())
            fn(line_no, tokens);
        if (end == body.size())
            break;
        pos = end + 1;
    }
}

inline std::optional<double> to_double(std::string_view s)
{
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

inline std::optional<long long> to_int(std::string_view s)
{
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

inline double expect_double(const Token &t, std::size_t line, const char *what)
{
    if (auto v = to_double(t.text))
        return *v;
    throw ParseError(std::string("expected number for ") + what + ", got '" + std::string(t.text) + "'", line,
                     t.column);
}

inline long long expect_int(const Token &t, std::size_t line, const char *what)
{
    if (auto v = to_int(t.text))
        return *v;
    throw ParseError(std::string("expected integer for ") + what + ", got '" + std::string(t.text) + "'", line,
                     t.column);
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

inline std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string &path, std::string_view body)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write '" + path + "'");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out)
        throw Error("write failed for '" + path + "'");
}

} // namespace fabroute::text
