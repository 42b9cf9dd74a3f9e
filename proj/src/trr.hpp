#pragma once

#include "core.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ospin {

// Which insertion the recursion is taken with respect to.
// Boundary: variant (a), index into lhs.boundary.
// Internal: variant (b), index into lhs.internal (must differ from the raised one).
struct Marking {
    enum class Kind { Boundary, Internal } kind = Kind::Boundary;
    int index = 0;
};

struct Term {
    Rational coef;
    int a = 0;  // closed-side twist of the node
    int s = 0;  // number of side factors
    // factors[0] is the closed-extended factor (absent in the boundary-forgetful
    // open-open family), then the central factor, then side factors.
    std::vector<Key> factors;
};

struct Expansion {
    Key lhs;
    int raised = 0;
    Marking marking;
    std::vector<Term> terms;
};

// Expands lhs, whose internal insertion `raised` carries d+1 >= 1, with
// respect to `marking`. Gate-failing terms are pruned during enumeration, and
// terms with identical factor lists are merged. Throws DomainError when the
// marking or variant preconditions fail.
Expansion trr_expand(const Key& lhs, int raised, const Marking& marking);

// Every (raised, marking) pair admissible for lhs.
std::vector<std::pair<int, Marking>> all_markings(const Key& lhs);

// One term per line: "coef * [key] * [key] ...".
std::string dump(const Expansion& e);

// Outcome of evaluating a key or an expression.
struct Outcome {
    bool known = false;
    Rational value;
    std::set<std::string> missing;  // keys that could not be evaluated
    std::set<std::string> cycle_on;  // keys still under evaluation that this result depended on

    bool cyclic() const { return !cycle_on.empty(); }

    static Outcome of(const Rational& v) {
        Outcome o;
        o.known = true;
        o.value = v;
        return o;
    }
};

// Source of factor values for expansion evaluation.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    // Cheap lookup (memo, gates, closed oracle). Must not recurse.
    virtual std::optional<Rational> peek(const Key& key) = 0;
    // Full evaluation, possibly recursive.
    virtual Outcome value(const Key& key) = 0;
};

// Evaluates the product of a term's factors, skipping `skip` (by position) if
// non-negative. Zero factors short-circuit before any expensive evaluation.
Outcome eval_product(const Term& t, Evaluator& ev, int skip = -1);

// Sum of coef * product over all terms. Empty expansion is 0.
Outcome eval_expansion(const Expansion& e, Evaluator& ev);

// Coefficient A of `target` in e (coef times known cofactors, summed over the
// terms containing it) and the remainder R of all other terms.
// Throws SolverError when the target appears twice in one term.
Outcome target_coefficient(const Expansion& e, const Key& target, Evaluator& ev);
Outcome target_remainder(const Expansion& e, const Key& target, Evaluator& ev);

struct SolveResult {
    Outcome outcome;  // the target value, or blocked
    Rational A1, A2;  // total target coefficients in the two expansions
};

// Eliminates `target` between two expansions of the same lhs:
// A1 x + R1 = A2 x + R2, so x = (R2 - R1) / (A1 - A2).
// Throws SolverError when A1 == A2 or the target appears nonlinearly.
SolveResult solve_main_term(const Expansion& e1, const Expansion& e2, const Key& target, Evaluator& ev);

} // namespace ospin
