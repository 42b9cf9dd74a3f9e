#include <doctest.h>

#include "core.hpp"

#include <random>

using namespace ospin;

TEST_CASE("theory constants") {
    auto c = derive_constants({7, 0, 1});
    CHECK(c.m_min == 5);
    CHECK(c.N == 7);
    CHECK(c.b == 5);
    CHECK(c.c == 0);
    c = derive_constants({5, 1, 1});
    CHECK((c.m_min == 1 && c.N == 2 && c.b == 1 && c.c == 1));
    c = derive_constants({2, 0, 1});
    CHECK((c.m_min == 0 && c.N == 2 && c.b == 0 && c.c == 0));
}

TEST_CASE("theory constants satisfy their defining bounds for r <= 40") {
    for (int r = 2; r <= 40; ++r) {
        for (int h = 0; h <= (r - 2) / 2; ++h) {
            auto c = derive_constants({r, h, 1});
            CAPTURE(r);
            CAPTURE(h);
            int step = r - c.m_min;
            // N is the largest integer with N * step <= 2r.
            CHECK(c.N * step <= 2 * r);
            CHECK((c.N + 1) * step > 2 * r);
            CHECK(is_legal_boundary_twist({r, h, 1}, c.b));
            CHECK(c.c >= 0);
            CHECK(c.c <= h);
            CHECK(c.b + 2 * c.c == r - 2);
            CHECK(c.N * c.m_min + c.b == c.N * r - 2 * r + r - 2);
        }
    }
}

TEST_CASE("theory parameter validation") {
    CHECK_THROWS_AS(TheoryParams({1, 0, 1}).validate(), DomainError);
    CHECK_THROWS_AS(TheoryParams({7, 3, 1}).validate(), DomainError);
    CHECK_THROWS_AS(TheoryParams({7, 0, 2}).validate(), DomainError);
    CHECK_NOTHROW(TheoryParams({7, 2, 3}).validate());
}

TEST_CASE("canonical ordering") {
    TheoryParams p{7, 0, 1};
    auto k = make_open(p, {{3, 1}, {2, 0}}, {5, 5});
    CHECK(k.internal[0] == Insertion{2, 0});
    CHECK(k.internal[1] == Insertion{3, 1});
    auto q = make_open({7, 1, 1}, {}, {5, 3, 5});
    CHECK(q.boundary == std::vector<int>{3, 5, 5});
}

TEST_CASE("key strings") {
    CHECK(to_string(make_open({7, 0, 1}, {{2, 0}}, {5, 5, 5})) == "o|r=7,h=0,m=1|I=2:0|B=5,5,5");
    CHECK(to_string(make_open({5, 1, 5}, {}, {1, 1})) == "o|r=5,h=1,m=5|I=-|B=1,1");
    CHECK(to_string(make_closed({7, 0, 1}, {{-1, 0}, {3, 0}, {3, 0}})) == "ce|r=7,h=0,m=1|I=-1:0;3:0;3:0|B=-");
    auto k = parse_key("o|r=7,h=0,m=1|I=3:1;2:0|B=5,5");
    CHECK(to_string(k) == "o|r=7,h=0,m=1|I=2:0;3:1|B=5,5");
}

TEST_CASE("parser rejects malformed keys with a position") {
    for (const char* bad : {"", "o|r=7", "x|r=7,h=0,m=1|I=-|B=-", "o|r=7,h=0,m=1|I=2|B=5", "o|r=7,h=0,m=1|I=-|B=5,",
                            "o|r=7,h=0,m=1|I=-|B=5;5", "o|r=7,h=0,m=1|I=-|B=5|", "o|r=a,h=0,m=1|I=-|B=5"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_key(bad), ParseError);
    }
    try {
        parse_key("o|r=7,h=0,m=1|I=2:x|B=5");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() > 0);
    }
}

TEST_CASE("parser rejects out-of-range twists") {
    CHECK_THROWS_AS(parse_key("o|r=7,h=0,m=1|I=-1:0|B=5"), DomainError);
    CHECK_THROWS_AS(parse_key("o|r=7,h=0,m=1|I=2:0|B=3"), DomainError);
    CHECK_THROWS_AS(parse_key("o|r=7,h=0,m=1|I=7:0|B=5"), DomainError);
    CHECK_THROWS_AS(parse_key("ce|r=7,h=0,m=1|I=-1:0;-1:0;0:0|B=-"), DomainError);
}

TEST_CASE("parser and printer are exact inverses on random keys") {
    std::mt19937 rng(11);
    for (int it = 0; it < 2000; ++it) {
        int r = 2 + static_cast<int>(rng() % 11);
        int h = static_cast<int>(rng() % ((r - 2) / 2 + 1));
        int m = 1 + 2 * static_cast<int>(rng() % 3);
        TheoryParams p{r, h, m};
        std::vector<Insertion> in;
        std::vector<int> bd;
        int l = static_cast<int>(rng() % 4), k = static_cast<int>(rng() % 5);
        bool closed = rng() % 3 == 0;
        for (int i = 0; i < l; ++i) in.push_back({static_cast<int>(rng() % r), static_cast<int>(rng() % 3)});
        Key key;
        if (closed) {
            key = make_closed(p, in);
        } else {
            for (int j = 0; j < k; ++j) bd.push_back(r - 2 - 2 * static_cast<int>(rng() % (h + 1)));
            key = make_open(p, in, bd);
        }
        auto s = to_string(key);
        CAPTURE(s);
        CHECK(to_string(parse_key(s)) == s);
        CHECK(parse_key(s) == key);
    }
}

TEST_CASE("open gate") {
    auto g = open_gate(make_open({7, 0, 1}, {{0, 0}}, {5}));
    CHECK(g.admissible);
    CHECK(g.rank == 0);
    CHECK_FALSE(open_gate(make_open({7, 0, 1}, {}, {5, 5, 5})).admissible);
    g = open_gate(make_open({5, 1, 5}, {}, std::vector<int>(8, 1)));
    CHECK(g.admissible);
    CHECK(g.rank == 1);
}

TEST_CASE("closed gate") {
    auto g = closed_gate(make_closed({7, 0, 1}, {{0, 0}, {2, 0}, {3, 0}}));
    CHECK(g.admissible);
    CHECK(g.rank == 0);
    g = closed_gate(make_closed({7, 0, 1}, {{-1, 0}, {3, 0}, {3, 0}}));
    CHECK(g.admissible);
    CHECK(g.rank == 0);
    CHECK_FALSE(closed_gate(make_closed({7, 0, 1}, {{2, 0}, {3, 0}})).admissible);
}

TEST_CASE("vanishing rules") {
    // Zero already by integrality: rank (2*4 + 6 - 3) / 5 is not an integer.
    auto v = vanishing_check(make_open({5, 1, 1}, {{1, 0}, {3, 0}}, {3, 3}));
    CHECK(v.zero);
    CHECK(v.rule == "gate");
    v = vanishing_check(make_open({5, 1, 1}, {{1, 0}, {4, 0}}, {3}));
    CHECK(v.zero);
    CHECK(v.rule == "small-internal");
    v = vanishing_check(make_open({5, 1, 5}, {}, std::vector<int>(8, 1)));
    CHECK(v.zero);
    CHECK(v.rule == "even-boundary");
    v = vanishing_check(make_open({7, 0, 1}, {{2, 0}}, {5, 5, 5}));
    CHECK_FALSE(v.zero);
    v = vanishing_check(make_open({7, 0, 1}, {}, {5, 5, 5}));
    CHECK(v.zero);
    CHECK(v.rule == "gate");
}
