#pragma once

#include <stdexcept>
#include <string>

namespace xrpd {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file contents (carries a line number where known).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Angular grid is not uniform, or two grids disagree.
class GridError : public Error {
public:
    using Error::Error;
};

// A vector or pattern has an unusable length.
class SizeError : public Error {
public:
    using Error::Error;
};

// An argument is outside its documented range.
class DomainError : public Error {
public:
    using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

// A linear-algebra step failed (rank deficiency, breakdown, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace xrpd
