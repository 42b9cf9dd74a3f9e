#pragma once

#include "closed_ext.hpp"
#include "trr.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace ospin {

struct StoredValue {
    Rational value;
    std::string provenance;  // initial, computed:<method>, external, vanishing:<rule>
};

// Write-once map from canonical key string to value.
class ValueStore {
public:
    std::optional<StoredValue> get(const std::string& key) const;
    // Inserting an equal value again is a no-op. A different value throws ConsistencyError.
    void put(const std::string& key, const Rational& value, const std::string& provenance);
    std::size_t size() const;
    std::map<std::string, StoredValue> snapshot() const;

    // Cache format: "<key> = <num>/<den> ; <provenance>", sorted by key.
    void load(const std::string& path);
    void load_text(const std::string& text, const std::string& source);
    void save(const std::string& path) const;  // write-temp-then-rename
    std::string serialize() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, StoredValue> map_;
};

// One line of the cache format.
std::string format_entry(const std::string& key, const Rational& value, const std::string& provenance);

// Writes text to path atomically.
void write_atomic(const std::string& path, const std::string& text);

// Shipped initial values. Only m=1 has any; sign applies to the no-internal state.
std::vector<std::pair<Key, Rational>> initial_values(const TheoryParams& p, int sign = 1);

// Primary spin state (B, I) as used by the computation strategy.
struct SpinState {
    std::vector<int> B;  // sorted ascending
    std::vector<int> I;  // sorted ascending, internal twists

    static SpinState of(const Key& key);  // key must be primary and open
    Key key(const TheoryParams& p) const;

    int D() const { return 2 * static_cast<int>(I.size()) + static_cast<int>(B.size()) - 3; }
    int M() const;
    int Sigma() const;
};

bool in_S(const TheoryParams& p, const SpinState& s);
bool in_E1(const TheoryParams& p, const SpinState& s);
bool in_E2(const TheoryParams& p, const SpinState& s);
// Strict order: smaller D, then more internals, then larger Sigma, then larger M.
bool precedes(const SpinState& a, const SpinState& b);

// K(I) and x(I): the unique exceptional boundary {m^K, x} completing I, with m <= x < r - 2 - 2h + 2(h+1).
struct KX {
    int K;
    int x;
};
KX kx_of(const TheoryParams& p, const std::vector<int>& I);

struct EvalResult {
    bool known = false;
    Rational value;
    std::string provenance;        // how the value was obtained
    std::set<std::string> missing; // keys blocking evaluation
};

struct TableReport {
    std::vector<std::pair<std::string, EvalResult>> rows;  // sorted by key
    std::size_t computed = 0, zero_by_rule = 0, blocked = 0;
};

struct CheckFailure {
    std::string lhs;
    std::string marking_a, marking_b;
    Rational value_a, value_b;
};

struct CheckReport {
    std::size_t sampled = 0, verified = 0, incomplete = 0;
    std::vector<CheckFailure> failures;
    bool pass() const { return failures.empty(); }
};

// All gate-admissible open keys of moduli dimension <= max_dim.
// primary_only restricts to keys with no descendants, descendant_only to keys with some.
std::vector<Key> admissible_keys(const TheoryParams& p, int max_dim, bool primary_only, bool descendant_only);

class Engine : public Evaluator {
public:
    Engine(TheoryParams params, ClosedValueTable table = {}, bool strict = false, int sign = 1);

    const TheoryParams& params() const { return params_; }
    const TheoryConstants& constants() const { return consts_; }
    ValueStore& store() { return store_; }
    const ClosedOracle& oracle() const { return oracle_; }

    // User-supplied open value (provenance "external"). Conflicts throw ConsistencyError.
    void add_external(const Key& key, const Rational& value);

    EvalResult compute(const Key& key);
    TableReport full_table(int max_dim);
    CheckReport check(std::size_t samples, std::uint64_t seed, int max_dim);

    std::optional<Rational> peek(const Key& key) override;
    Outcome value(const Key& key) override;

private:
    struct Candidate {
        Key aux;
        int raised = 0;
        std::string method;
        std::optional<std::pair<Marking, Marking>> pair;  // designated by the recipe
    };

    Outcome compute_open(const Key& key, std::string& provenance);
    Outcome solve_primary(const Key& key, std::string& provenance);
    Outcome expand_descendant(const Key& key);
    Outcome try_candidate(const Candidate& c, const Key& target, bool hard);
    std::vector<Candidate> recipe_candidates(const SpinState& s);
    std::vector<Candidate> fallback_candidates(const SpinState& s);
    void check_params(const Key& key) const;

    TheoryParams params_;
    TheoryConstants consts_;
    ClosedOracle oracle_;
    ValueStore store_;
    std::recursive_mutex mu_;
    std::set<std::string> active_;
    std::map<std::string, Outcome> blocked_;  // blocked for good
    std::map<std::string, Outcome> pending_;  // blocked while some key in cycle_on is open
};

// Runs fn on a thread with a large stack; deep recursion stays off the caller's stack.
void with_large_stack(const std::function<void()>& fn);

} // namespace ospin
