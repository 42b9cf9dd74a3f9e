#pragma once

#include <stdexcept>
#include <string>

namespace ospin {

// Malformed input: bad twist, bad key, precondition violated.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Key string or table file could not be parsed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at " + std::to_string(pos) + ")"), pos_(pos) {}
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

// A write-once store saw two different values for one key.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Elimination between two expansions was degenerate.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Strict mode hit an unknown value.
class UnknownValueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ospin
