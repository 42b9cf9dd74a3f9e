#include <doctest.h>

#include "oracles.hpp"

using namespace ospin;

namespace {

std::vector<std::string> dumps(int l, int k, const std::vector<int>& D) {
    std::vector<std::string> out;
    for (const auto& g : enumerate_graphs(l, k, D)) out.push_back(g.dump());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("small graph families") {
    CHECK(enumerate_graphs(1, 1, {0}).size() == 1);
    auto three = enumerate_graphs(1, 1, {1});
    CHECK(three.size() == 3);
    CHECK(three[0].dump() == "V=[{I:a1;B:b1}] E=[-] sign=+1");
    for (std::size_t i = 1; i < three.size(); ++i) CHECK(three[i].edges() == 1);
    CHECK(enumerate_graphs(0, 2, {}).size() == 1);
}

TEST_CASE("graph enumeration agrees with the brute-force generator") {
    for (int l = 0; l <= 3; ++l)
        for (int k = 0; k + l <= 6; ++k) {
            std::vector<int> D(l, 0);
            std::function<void(int, int)> go = [&](int i, int left) {
                if (i == l) {
                    auto want = oracle::brute_force_graphs(l, k, D);
                    auto got = dumps(l, k, D);
                    CHECK(got == std::vector<std::string>(want.begin(), want.end()));
                    return;
                }
                for (D[i] = 0; D[i] <= left; ++D[i]) go(i + 1, left - D[i]);
                D[i] = 0;
            };
            go(0, 6 - l - k);
        }
}

TEST_CASE("boundary-forgetful expansion") {
    TheoryParams p{7, 0, 1};
    auto zero_internal = to_bct(make_open(p, {}, {5, 5, 5}));
    CHECK_THROWS_AS(bct_trr_expand(zero_internal, 0, {Marking::Kind::Boundary, 0}), DomainError);

    auto lhs = to_bct(make_open(p, {{0, 1}, {1, 0}}, {5, 5}));
    REQUIRE(open_gate(lhs).admissible);
    auto e = bct_trr_expand(lhs, 0, {Marking::Kind::Boundary, 0});
    bool closed_family = false, open_family = false;
    for (const auto& t : e.terms) {
        if (t.factors[0].sector == Sector::ClosedExt) closed_family = true;
        else open_family = true;
    }
    CHECK(closed_family);
    CHECK(open_family);

    auto bad = to_bct(make_open(p, {{0, 0}, {0, 1}}, {5, 5}));
    REQUIRE_FALSE(open_gate(bad).admissible);
    CHECK(bct_trr_expand(bad, 1, {Marking::Kind::Boundary, 0}).terms.empty());
}

TEST_CASE("transform of a primary key is the boundary-forgetful value") {
    Engine h0({7, 0, 1});
    BctEvaluator bct(h0);
    auto key = make_open({7, 0, 1}, {{3, 0}}, {5, 5, 5, 5});
    auto tr = transform(key, bct);
    REQUIRE(tr.value.known);
    CHECK(tr.value.value == 6);
    CHECK(tr.breakdown.size() == 1);
}

TEST_CASE("comparison at (7,0,1)") {
    Engine h0({7, 0, 1});
    auto rep = cross_validate(h0, 4);
    CHECK(rep.pass());
    CHECK(rep.checked > 30);
    CHECK(rep.simple_case_checked > 10);
    CHECK(rep.round_trip_checked == rep.checked);

    auto prim = cross_validate(h0, 4, true);
    CHECK(prim.pass());
    CHECK(prim.simple_case_checked == 0);
}

TEST_CASE("comparison for other h=0 theories") {
    for (int r : {3, 4, 5, 9}) {
        Engine h0({r, 0, 1});
        auto rep = cross_validate(h0, 5);
        CAPTURE(r);
        CHECK(rep.pass());
        CHECK(rep.checked > 0);
    }
}

TEST_CASE("a corrupted boundary-forgetful value is reported") {
    Engine h0({7, 0, 1});
    BctEvaluator bct(h0);
    auto victim = to_bct(make_open({7, 0, 1}, {{0, 0}, {0, 1}}, {5}));
    REQUIRE(open_gate(victim).admissible);
    bct.override_value(victim, 99);
    auto rep = cross_validate(h0, bct, 4);
    REQUIRE_FALSE(rep.pass());
    CHECK_FALSE(rep.mismatches[0].breakdown.empty());
}

TEST_CASE("comparison needs h=0") {
    Engine e({5, 1, 1});
    CHECK_THROWS_AS(cross_validate(e, 2), DomainError);
}
