#pragma once

#include "scheduler.hpp"

#include <map>
#include <string>
#include <vector>

namespace ospin {

// A vertex of a comparison graph. Internal and boundary labels are indices into
// the input multisets; `inserted` lists the source internal label of each
// inserted twist r-2 boundary point on this vertex.
struct GraphVertex {
    std::vector<int> internal;
    std::vector<int> boundary;
    std::vector<int> inserted;
    auto operator<=>(const GraphVertex&) const = default;
};

struct ComparisonGraph {
    std::vector<GraphVertex> vertices;  // canonical order
    std::vector<int> removed;           // |B'(a)| per internal label
    int edges() const;
    // "V=[{I:a1;B:b1,b'1},...] E=[(a1,b'1),...] sign=+1"
    std::string dump() const;
};

// Exhaustive, duplicate-free enumeration of the tree-shaped graphs for internal
// twists I (labels 1..l), k boundary points of twist r-2 and descendants D.
// Inserted points of one source are interchangeable.
std::vector<ComparisonGraph> enumerate_graphs(int l, int k, const std::vector<int>& D);

// Evaluator of the boundary-forgetful theory at h=0. Primaries equal the h=0
// point-insertion primaries; descendants come from its own recursion.
class BctEvaluator : public Evaluator {
public:
    explicit BctEvaluator(Engine& h0);

    std::optional<Rational> peek(const Key& key) override;
    Outcome value(const Key& key) override;

    // Fault injection: pins a value regardless of how it would be computed.
    void override_value(const Key& key, const Rational& v);

private:
    Engine& h0_;
    std::map<std::string, Outcome> memo_;
};

Key to_bct(const Key& open_key);
Key to_open(const Key& bct_key);

// Recursion for the boundary-forgetful theory. Boundary marking: index into
// lhs.boundary (needs l,k >= 1). Internal marking: a second internal (needs l >= 2).
// Coefficients are products of binomials over identical insertions.
Expansion bct_trr_expand(const Key& lhs, int raised, const Marking& marking);

struct TransformResult {
    Outcome value;
    std::vector<std::pair<std::string, Rational>> breakdown;  // graph dump, T(G)
};

// Sum over graphs of (-1)^|E| times the product of vertex values of the
// boundary-forgetful theory. `key` is an h=0 open key.
TransformResult transform(const Key& key, BctEvaluator& bct);

struct CompareMismatch {
    std::string key;
    std::string what;
    Rational lhs, rhs;
    std::vector<std::pair<std::string, Rational>> breakdown;
};

struct CompareReport {
    std::size_t checked = 0, incomplete = 0, simple_case_checked = 0, round_trip_checked = 0;
    std::vector<CompareMismatch> mismatches;
    bool pass() const { return mismatches.empty(); }
};

// Checks the graph-sum identity for every admissible key of dimension <= max_dim,
// the one-descendant bilinear form, and recovery of boundary-forgetful values
// from h=0 values by back-substitution.
CompareReport cross_validate(Engine& h0, int max_dim, bool primary_only = false);
CompareReport cross_validate(Engine& h0, BctEvaluator& bct, int max_dim, bool primary_only = false);

} // namespace ospin
