// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fabroute {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. line/column are 1-based; column 0 means "whole line".
class ParseError : public Error {
  public:
    ParseError(const std::string &message, std::size_t line, std::size_t column)
        : Error(locate(message, line, column)), line_(line), column_(column)
    {
    }

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    static std::string locate(const std::string &message, std::size_t line, std::size_t column)
    {
        if (line == 0)
            return message;
        std::string where = "line " + std::to_string(line);
        if (column != 0)
            where += ", column " + std::to_string(column);
        return where + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
};

/// A name that does not resolve (cell, master, pin).
class ReferenceError : public ParseError {
  public:
    using ParseError::ParseError;
};

/// Two declarations share an identifier.
class DuplicateError : public ParseError {
  public:
    using ParseError::ParseError;
};

} // namespace fabroute
