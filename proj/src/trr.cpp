#include "trr.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace ospin {

namespace {

using Vec = std::vector<int>;

struct Block {
    Vec content;
    int t;
    bool operator<(const Block& o) const {
        return content != o.content ? content < o.content : t < o.t;
    }
    bool operator==(const Block& o) const { return content == o.content && t == o.t; }
};

// Calls f on every sub-vector 0 <= v <= bound.
void for_each_subvector(const Vec& bound, const std::function<void(const Vec&)>& f) {
    Vec v(bound.size(), 0);
    while (true) {
        f(v);
        std::size_t i = 0;
        while (i < v.size() && v[i] == bound[i]) v[i++] = 0;
        if (i == v.size()) return;
        ++v[i];
    }
}

bool is_zero(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](int x) { return x == 0; });
}

class Expander {
public:
    Expander(const Key& lhs, int raised, const Marking& mk) : lhs_(lhs), p_(lhs.params) {
        raised_ = lhs.internal[raised];
        raised_.desc -= 1;
        std::map<Insertion, int> icount;
        std::map<int, int> bcount;
        for (int i = 0; i < lhs.l(); ++i) {
            if (i == raised) continue;
            if (mk.kind == Marking::Kind::Internal && i == mk.index) continue;
            ++icount[lhs.internal[i]];
        }
        for (int j = 0; j < lhs.k(); ++j) {
            if (mk.kind == Marking::Kind::Boundary && j == mk.index) continue;
            ++bcount[lhs.boundary[j]];
        }
        boundary_variant_ = mk.kind == Marking::Kind::Boundary;
        if (boundary_variant_) marked_b_ = lhs.boundary[mk.index];
        else marked_i_ = lhs.internal[mk.index];
        for (auto& [t, c] : icount) {
            itypes_.push_back(t);
            total_.push_back(c);
        }
        for (auto& [b, c] : bcount) {
            btypes_.push_back(b);
            total_.push_back(c);
        }
        ni_ = static_cast<int>(itypes_.size());
        numerator_ = 1;
        for (int c : total_) numerator_ *= factorial(c);
    }

    std::vector<Term> run() {
        if (!open_gate(lhs_).admissible) return {};
        Vec ibound(total_.begin(), total_.begin() + ni_);
        ibound.resize(total_.size(), 0);
        for_each_subvector(ibound, [&](const Vec& cm1) {
            Vec rest = minus(total_, cm1);
            for_each_subvector(rest, [&](const Vec& c0) {
                Vec w = minus(rest, c0);
                std::vector<Block> chosen;
                sides(w, chosen, [&] { emit(cm1, c0, chosen); });
            });
        });
        std::vector<Term> out;
        for (auto& [_, t] : acc_)
            if (t.coef != 0) out.push_back(std::move(t));
        std::sort(out.begin(), out.end(), [](const Term& x, const Term& y) {
            if (x.a != y.a) return x.a < y.a;
            if (x.s != y.s) return x.s < y.s;
            std::vector<std::string> fx, fy;
            for (auto& k : x.factors) fx.push_back(to_string(k));
            for (auto& k : y.factors) fy.push_back(to_string(k));
            return fx < fy;
        });
        return out;
    }

private:
    static Vec minus(const Vec& a, const Vec& b) {
        Vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
        return r;
    }

    void add_items(const Vec& v, std::vector<Insertion>& in, std::vector<int>& bd) const {
        for (int i = 0; i < static_cast<int>(v.size()); ++i)
            for (int c = 0; c < v[i]; ++c) {
                if (i < ni_) in.push_back(itypes_[i]);
                else bd.push_back(btypes_[i - ni_]);
            }
    }

    Key side_key(const Block& b) const {
        std::vector<Insertion> in;
        std::vector<int> bd{p_.r - 2 - 2 * b.t};
        add_items(b.content, in, bd);
        return make_open(p_, std::move(in), std::move(bd));
    }

    // Non-increasing sequences of gate-passing side blocks covering w exactly.
    void sides(const Vec& w, std::vector<Block>& chosen, const std::function<void()>& done) {
        if (is_zero(w)) {
            done();
            return;
        }
        for_each_subvector(w, [&](const Vec& v) {
            if (is_zero(v)) return;
            for (int t = 0; t <= p_.h; ++t) {
                Block b{v, t};
                if (!chosen.empty() && chosen.back() < b) continue;
                if (!open_gate(side_key(b)).admissible) continue;
                chosen.push_back(b);
                sides(minus(w, v), chosen, done);
                chosen.pop_back();
            }
        });
    }

    void emit(const Vec& cm1, const Vec& c0, const std::vector<Block>& blocks) {
        long S = raised_.twist;
        for (int i = 0; i < ni_; ++i) S += static_cast<long>(cm1[i]) * itypes_[i].twist;
        for (const auto& b : blocks) S += b.t;
        long x = ((p_.r - 2 - S) % p_.r + p_.r) % p_.r;
        int a = x == p_.r - 1 ? -1 : static_cast<int>(x);

        std::vector<Insertion> cin{{a, 0}, raised_};
        std::vector<int> unused;
        add_items(cm1, cin, unused);
        for (const auto& b : blocks) cin.push_back({b.t, 0});
        Key closed = make_closed(p_, std::move(cin));
        if (!closed_gate(closed).admissible) return;

        std::vector<Insertion> oin{{p_.r - 2 - a, 0}};
        std::vector<int> obd;
        if (boundary_variant_) obd.push_back(marked_b_);
        else oin.push_back(marked_i_);
        add_items(c0, oin, obd);
        Key central = make_open(p_, std::move(oin), std::move(obd));
        if (!open_gate(central).admissible) return;

        Rational denom = 1;
        for (int c : cm1) denom *= factorial(c);
        for (int c : c0) denom *= factorial(c);
        for (std::size_t i = 0; i < blocks.size();) {
            std::size_t j = i;
            while (j < blocks.size() && blocks[j] == blocks[i]) ++j;
            denom *= factorial(static_cast<long>(j - i));
            i = j;
        }
        for (const auto& b : blocks)
            for (int c : b.content) denom *= factorial(c);
        Rational coef = numerator_ / denom;
        if (blocks.size() % 2 == 1) coef = -coef;

        Term t;
        t.a = a;
        t.s = static_cast<int>(blocks.size());
        t.factors.push_back(closed);
        t.factors.push_back(central);
        std::vector<Key> side;
        for (const auto& b : blocks) side.push_back(side_key(b));
        std::sort(side.begin(), side.end(),
                  [](const Key& x, const Key& y) { return to_string(x) < to_string(y); });
        for (auto& k : side) t.factors.push_back(std::move(k));

        std::vector<std::string> id;
        for (const auto& k : t.factors) id.push_back(to_string(k));
        auto it = acc_.find(id);
        if (it == acc_.end()) {
            t.coef = coef;
            acc_.emplace(std::move(id), std::move(t));
        } else {
            it->second.coef += coef;
        }
    }

    const Key& lhs_;
    TheoryParams p_;
    Insertion raised_;
    bool boundary_variant_ = true;
    int marked_b_ = 0;
    Insertion marked_i_;
    std::vector<Insertion> itypes_;
    std::vector<int> btypes_;
    Vec total_;
    int ni_ = 0;
    Rational numerator_;
    std::map<std::vector<std::string>, Term> acc_;
};

} // namespace

Expansion trr_expand(const Key& lhs, int raised, const Marking& marking) {
    if (lhs.sector != Sector::Open) throw DomainError("recursion needs an open-sector key");
    validate_key(lhs);
    if (raised < 0 || raised >= lhs.l()) throw DomainError("raised insertion index out of range");
    if (lhs.internal[raised].desc < 1) throw DomainError("raised insertion has no descendant to lower");
    if (marking.kind == Marking::Kind::Boundary) {
        if (marking.index < 0 || marking.index >= lhs.k()) throw DomainError("boundary marking not present");
    } else {
        if (marking.index < 0 || marking.index >= lhs.l()) throw DomainError("internal marking not present");
        if (marking.index == raised) throw DomainError("internal marking must differ from the raised insertion");
    }
    Expansion e;
    e.lhs = lhs;
    e.raised = raised;
    e.marking = marking;
    e.terms = Expander(lhs, raised, marking).run();
    return e;
}

std::vector<std::pair<int, Marking>> all_markings(const Key& lhs) {
    std::vector<std::pair<int, Marking>> out;
    for (int i = 0; i < lhs.l(); ++i) {
        if (lhs.internal[i].desc < 1) continue;
        for (int j = 0; j < lhs.k(); ++j) out.push_back({i, {Marking::Kind::Boundary, j}});
        for (int j = 0; j < lhs.l(); ++j)
            if (j != i) out.push_back({i, {Marking::Kind::Internal, j}});
    }
    return out;
}

std::string dump(const Expansion& e) {
    std::ostringstream out;
    for (const auto& t : e.terms) {
        out << to_fraction(t.coef);
        for (const auto& k : t.factors) out << " * [" << to_string(k) << "]";
        out << '\n';
    }
    return out.str();
}

Outcome eval_product(const Term& t, Evaluator& ev, int skip) {
    std::vector<std::optional<Rational>> known(t.factors.size());
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
        if (static_cast<int>(i) == skip) continue;
        known[i] = ev.peek(t.factors[i]);
        if (known[i] && *known[i] == 0) return Outcome::of(0);
    }
    Outcome out = Outcome::of(1);
    Outcome blocked;
    bool any_blocked = false;
    for (std::size_t i = 0; i < t.factors.size(); ++i) {
        if (static_cast<int>(i) == skip) continue;
        Rational v;
        if (known[i]) {
            v = *known[i];
        } else {
            auto o = ev.value(t.factors[i]);
            if (!o.known) {
                any_blocked = true;
                blocked.missing.insert(o.missing.begin(), o.missing.end());
                blocked.cycle_on.insert(o.cycle_on.begin(), o.cycle_on.end());
                continue;
            }
            if (o.value == 0) return Outcome::of(0);
            v = o.value;
        }
        out.value *= v;
    }
    if (any_blocked) return blocked;
    return out;
}

Outcome eval_expansion(const Expansion& e, Evaluator& ev) {
    Outcome total = Outcome::of(0);
    Outcome blocked;
    bool any_blocked = false;
    for (const auto& t : e.terms) {
        auto o = eval_product(t, ev);
        if (!o.known) {
            any_blocked = true;
            blocked.missing.insert(o.missing.begin(), o.missing.end());
            blocked.cycle_on.insert(o.cycle_on.begin(), o.cycle_on.end());
            continue;
        }
        total.value += t.coef * o.value;
    }
    if (any_blocked) return blocked;
    return total;
}

namespace {

int target_position(const Term& t, const Key& target, const Key& lhs) {
    int pos = -1, hits = 0;
    for (std::size_t i = 0; i < t.factors.size(); ++i)
        if (t.factors[i] == target) {
            pos = static_cast<int>(i);
            ++hits;
        }
    if (hits > 1)
        throw SolverError("target " + to_string(target) + " appears more than once in a term of " +
                          to_string(lhs));
    return pos;
}

Outcome sum_terms(const Expansion& e, const Key& target, Evaluator& ev, bool with_target) {
    Outcome total = Outcome::of(0);
    Outcome blocked;
    bool any_blocked = false;
    for (const auto& t : e.terms) {
        int pos = target_position(t, target, e.lhs);
        if ((pos >= 0) != with_target) continue;
        auto o = eval_product(t, ev, pos);
        if (!o.known) {
            any_blocked = true;
            blocked.missing.insert(o.missing.begin(), o.missing.end());
            blocked.cycle_on.insert(o.cycle_on.begin(), o.cycle_on.end());
            continue;
        }
        total.value += t.coef * o.value;
    }
    if (any_blocked) return blocked;
    return total;
}

} // namespace

Outcome target_coefficient(const Expansion& e, const Key& target, Evaluator& ev) {
    return sum_terms(e, target, ev, true);
}

Outcome target_remainder(const Expansion& e, const Key& target, Evaluator& ev) {
    return sum_terms(e, target, ev, false);
}

SolveResult solve_main_term(const Expansion& e1, const Expansion& e2, const Key& target, Evaluator& ev) {
    if (e1.lhs != e2.lhs) throw SolverError("expansions have different left-hand sides");
    SolveResult res;
    auto a1 = target_coefficient(e1, target, ev);
    auto a2 = target_coefficient(e2, target, ev);
    for (const auto* o : {&a1, &a2})
        if (!o->known) {
            res.outcome = *o;
            return res;
        }
    res.A1 = a1.value;
    res.A2 = a2.value;
    if (res.A1 == res.A2)
        throw SolverError("degenerate elimination for " + to_string(target) + " from " + to_string(e1.lhs) +
                          ": both expansions give coefficient " + to_fraction(res.A1));
    auto r1 = target_remainder(e1, target, ev);
    auto r2 = target_remainder(e2, target, ev);
    for (const auto* o : {&r1, &r2})
        if (!o->known) {
            res.outcome = *o;
            return res;
        }
    res.outcome = Outcome::of((r2.value - r1.value) / (res.A1 - res.A2));
    return res;
}

} // namespace ospin
