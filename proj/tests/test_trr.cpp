#include <doctest.h>

#include "closed_ext.hpp"
#include "trr.hpp"

#include <functional>
#include <map>
#include <random>

using namespace ospin;

namespace {

using TermMap = std::map<std::vector<std::string>, Rational>;

TermMap as_map(const Expansion& e) {
    TermMap out;
    for (const auto& t : e.terms) {
        std::vector<std::string> id;
        for (const auto& f : t.factors) id.push_back(to_string(f));
        out[id] += t.coef;
    }
    return out;
}

// Labeled brute force: every remaining item goes to the closed factor
// (internals only), the central factor, or one of an unordered family of side
// blocks, each block with its own t. Each configuration contributes (-1)^s.
TermMap brute_force(const Key& lhs, int raised, const Marking& mk) {
    const auto& p = lhs.params;
    TermMap out;
    if (!open_gate(lhs).admissible) return out;
    struct Item {
        bool internal;
        Insertion ins;
        int b;
    };
    std::vector<Item> items;
    for (int i = 0; i < lhs.l(); ++i)
        if (i != raised && !(mk.kind == Marking::Kind::Internal && i == mk.index))
            items.push_back({true, lhs.internal[i], 0});
    for (int j = 0; j < lhs.k(); ++j)
        if (!(mk.kind == Marking::Kind::Boundary && j == mk.index)) items.push_back({false, {}, lhs.boundary[j]});
    int n = static_cast<int>(items.size());
    Insertion low = lhs.internal[raised];
    low.desc -= 1;

    std::vector<int> slot(n);  // -2 closed, -1 central, >= 0 side block
    std::function<void(int, int)> assign = [&](int i, int blocks) {
        if (i == n) {
            std::vector<int> t(blocks, 0);
            std::function<void(int)> twist = [&](int j) {
                if (j < blocks) {
                    for (t[j] = 0; t[j] <= p.h; ++t[j]) twist(j + 1);
                    return;
                }
                long S = low.twist;
                for (int q = 0; q < n; ++q)
                    if (slot[q] == -2) S += items[q].ins.twist;
                for (int x : t) S += x;
                int a = static_cast<int>(((p.r - 2 - S) % p.r + p.r) % p.r);
                if (a == p.r - 1) a = -1;
                std::vector<Insertion> cin{{a, 0}, low}, oin{{p.r - 2 - a, 0}};
                std::vector<int> obd;
                if (mk.kind == Marking::Kind::Boundary) obd.push_back(lhs.boundary[mk.index]);
                else oin.push_back(lhs.internal[mk.index]);
                std::vector<std::vector<Insertion>> sin(blocks);
                std::vector<std::vector<int>> sbd(blocks);
                for (int j = 0; j < blocks; ++j) {
                    cin.push_back({t[j], 0});
                    sbd[j].push_back(p.r - 2 - 2 * t[j]);
                }
                for (int q = 0; q < n; ++q) {
                    auto& it = items[q];
                    if (slot[q] == -2) cin.push_back(it.ins);
                    else if (slot[q] == -1) (it.internal ? void(oin.push_back(it.ins)) : void(obd.push_back(it.b)));
                    else if (it.internal) sin[slot[q]].push_back(it.ins);
                    else sbd[slot[q]].push_back(it.b);
                }
                std::vector<Key> fs{make_closed(p, cin), make_open(p, oin, obd)};
                std::vector<std::string> sides;
                for (int j = 0; j < blocks; ++j) {
                    auto sk = make_open(p, sin[j], sbd[j]);
                    if (!open_gate(sk).admissible) return;
                    sides.push_back(to_string(sk));
                }
                if (!closed_gate(fs[0]).admissible || !open_gate(fs[1]).admissible) return;
                std::sort(sides.begin(), sides.end());
                std::vector<std::string> id{to_string(fs[0]), to_string(fs[1])};
                id.insert(id.end(), sides.begin(), sides.end());
                out[id] += blocks % 2 ? -1 : 1;
            };
            twist(0);
            return;
        }
        if (items[i].internal) {
            slot[i] = -2;
            assign(i + 1, blocks);
        }
        slot[i] = -1;
        assign(i + 1, blocks);
        for (int b = 0; b <= blocks; ++b) {
            slot[i] = b;
            assign(i + 1, std::max(blocks, b + 1));
        }
    };
    assign(0, 0);
    for (auto it = out.begin(); it != out.end();) it = it->second == 0 ? out.erase(it) : std::next(it);
    return out;
}

class MapEvaluator : public Evaluator {
public:
    std::map<std::string, Rational> values;
    ClosedOracle closed;
    std::optional<Rational> peek(const Key& k) override {
        if (k.sector == Sector::ClosedExt) {
            auto c = closed.eval(k);
            if (c.known) return c.value;
            return std::nullopt;
        }
        if (!open_gate(k).admissible) return Rational(0);
        auto it = values.find(to_string(k));
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
    Outcome value(const Key& k) override {
        if (auto v = peek(k)) return Outcome::of(*v);
        Outcome o;
        o.missing.insert(to_string(k));
        return o;
    }
};

} // namespace

TEST_CASE("expansion matches a labeled brute-force enumerator for l+k <= 6") {
    std::mt19937 rng(3);
    int compared = 0, nonempty = 0;
    for (TheoryParams p : {TheoryParams{7, 0, 1}, TheoryParams{5, 1, 1}, TheoryParams{8, 1, 1}, TheoryParams{6, 2, 1},
                           TheoryParams{4, 1, 3}, TheoryParams{3, 0, 1}}) {
        for (int it = 0; it < 400; ++it) {
            int l = 1 + static_cast<int>(rng() % 4);
            int k = static_cast<int>(rng() % (7 - l));
            std::vector<Insertion> in;
            for (int i = 0; i < l; ++i) in.push_back({static_cast<int>(rng() % p.r), static_cast<int>(rng() % 3)});
            in[0].desc = std::max(in[0].desc, 1);
            std::vector<int> bd;
            for (int j = 0; j < k; ++j) bd.push_back(p.r - 2 - 2 * static_cast<int>(rng() % (p.h + 1)));
            auto lhs = make_open(p, in, bd);
            for (const auto& [raised, mk] : all_markings(lhs)) {
                CAPTURE(to_string(lhs));
                CAPTURE(raised);
                auto got = as_map(trr_expand(lhs, raised, mk));
                auto want = brute_force(lhs, raised, mk);
                CHECK(got == want);
                ++compared;
                if (!want.empty()) ++nonempty;
            }
        }
    }
    CHECK(compared > 500);
    CHECK(nonempty > 100);
}

TEST_CASE("boundary marking isolates the main term with coefficient 1") {
    TheoryParams p{7, 0, 1};
    auto lhs = make_open(p, {{1, 1}, {1, 0}}, {5, 5, 5});
    int raised = lhs.internal[0].desc == 1 ? 0 : 1;
    auto target = make_open(p, {{2, 0}}, {5, 5, 5});
    auto e = trr_expand(lhs, raised, {Marking::Kind::Boundary, 0});
    Rational main = 0, beta = 0;
    auto beta_side = make_open(p, {{1, 0}}, {5, 5});
    for (const auto& t : e.terms) {
        for (const auto& f : t.factors)
            if (f == target) main += t.coef;
        if (t.factors.size() == 3 && t.factors[1] == beta_side && t.factors[2] == beta_side) beta += t.coef;
    }
    CHECK(main == 1);
    CHECK(beta == -2);

    auto ei = trr_expand(lhs, raised, {Marking::Kind::Internal, 1 - raised});
    for (const auto& t : ei.terms)
        for (const auto& f : t.factors) CHECK(f != target);
}

TEST_CASE("expansion preconditions") {
    TheoryParams p{7, 0, 1};
    auto lhs = make_open(p, {{1, 1}}, {5, 5});
    CHECK_THROWS_AS(trr_expand(lhs, 0, {Marking::Kind::Boundary, 2}), DomainError);
    CHECK_THROWS_AS(trr_expand(lhs, 0, {Marking::Kind::Internal, 0}), DomainError);
    CHECK_THROWS_AS(trr_expand(make_open(p, {{1, 0}}, {5, 5}), 0, {Marking::Kind::Boundary, 0}), DomainError);
    auto bad = make_open(p, {{1, 1}}, {5});
    REQUIRE_FALSE(open_gate(bad).admissible);
    CHECK(trr_expand(bad, 0, {Marking::Kind::Boundary, 0}).terms.empty());
}

TEST_CASE("expansion evaluation") {
    TheoryParams p{7, 0, 1};
    MapEvaluator ev;
    Expansion empty;
    auto o = eval_expansion(empty, ev);
    CHECK(o.known);
    CHECK(o.value == 0);

    auto lhs = make_open(p, {{1, 1}, {1, 0}}, {5, 5, 5});
    auto e = trr_expand(lhs, lhs.internal[0].desc == 1 ? 0 : 1, {Marking::Kind::Boundary, 0});
    o = eval_expansion(e, ev);
    CHECK_FALSE(o.known);
    CHECK(o.missing.count("o|r=7,h=0,m=1|I=2:0|B=5,5,5") == 1);

    ev.values["o|r=7,h=0,m=1|I=2:0|B=5,5,5"] = 2;
    ev.values["o|r=7,h=0,m=1|I=1:0|B=5,5"] = 1;
    o = eval_expansion(e, ev);
    CHECK(o.known);
}

TEST_CASE("elimination recovers the K=1 step and rejects equal coefficients") {
    TheoryParams p{7, 0, 1};
    MapEvaluator ev;
    ev.values["o|r=7,h=0,m=1|I=1:0|B=5,5"] = 1;
    auto lhs = make_open(p, {{1, 1}, {1, 0}}, {5, 5, 5});
    int raised = lhs.internal[0].desc == 1 ? 0 : 1;
    auto target = make_open(p, {{2, 0}}, {5, 5, 5});
    auto e1 = trr_expand(lhs, raised, {Marking::Kind::Boundary, 0});
    auto e2 = trr_expand(lhs, raised, {Marking::Kind::Internal, 1 - raised});
    auto r = solve_main_term(e1, e2, target, ev);
    REQUIRE(r.outcome.known);
    CHECK(r.outcome.value == 2);
    CHECK_THROWS_AS(solve_main_term(e1, e1, target, ev), SolverError);
}
