#pragma once

#include "core.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ospin {

struct TableEntry {
    Rational value;
    std::string source;
};

// External closed-extended values keyed by canonical key string.
struct ClosedValueTable {
    std::map<std::string, TableEntry> entries;

    // Adds one entry. Rejects keys failing the closed gate and conflicting duplicates.
    void add(const Key& key, const Rational& value, const std::string& source);
    // Merges another table with the same conflict rules.
    void merge(const ClosedValueTable& other);
};

// Line format "<key> = <num>/<den>", '#' starts a comment.
ClosedValueTable load_table(const std::string& path);
ClosedValueTable parse_table(const std::string& text, const std::string& source);

// One step of the string equation: removes one (0,0) insertion and lowers one
// descendant insertion by one, for each descendant insertion in turn.
// Requires a (0,0) insertion and n >= 3.
std::vector<std::pair<Rational, Key>> string_reduce(const Key& key);

struct ClosedOutcome {
    bool known = false;
    Rational value;
    std::string unknown_key;  // the irreducible key that blocked evaluation
};

// Closed-extended evaluator. Normalization: an admissible 3-point primary is 1.
class ClosedOracle {
public:
    explicit ClosedOracle(ClosedValueTable table = {}, bool strict = false)
        : table_(std::move(table)), strict_(strict) {}

    ClosedOutcome eval(const Key& key) const;

    const ClosedValueTable& table() const { return table_; }
    bool strict() const { return strict_; }

private:
    ClosedOutcome eval_uncached(const Key& key) const;

    ClosedValueTable table_;
    bool strict_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, ClosedOutcome> memo_;
};

} // namespace ospin
