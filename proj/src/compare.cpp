#include "compare.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace ospin {

namespace {

using Vec = std::vector<int>;

bool is_zero(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](int x) { return x == 0; });
}

Vec minus(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

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

// Partitions of the multiset w into exactly `blocks` nonzero parts, each
// partition visited once (parts in non-increasing lexicographic order).
void partitions(const Vec& w, int blocks, std::vector<Vec>& chosen, const std::function<void()>& done) {
    if (is_zero(w)) {
        if (blocks == 0) done();
        return;
    }
    if (blocks == 0) return;
    for_each_subvector(w, [&](const Vec& v) {
        if (is_zero(v)) return;
        if (!chosen.empty() && chosen.back() < v) return;
        chosen.push_back(v);
        partitions(minus(w, v), blocks - 1, chosen, done);
        chosen.pop_back();
    });
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

std::string join_labels(const std::vector<std::string>& xs) {
    if (xs.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
    return out;
}

} // namespace

int ComparisonGraph::edges() const { return std::accumulate(removed.begin(), removed.end(), 0); }

std::string ComparisonGraph::dump() const {
    std::ostringstream out;
    std::vector<std::string> edge_list;
    out << "V=[";
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        const auto& vx = vertices[v];
        std::vector<std::string> in, bd;
        for (int a : vx.internal) in.push_back("a" + std::to_string(a + 1));
        for (int b : vx.boundary) bd.push_back("b" + std::to_string(b + 1));
        for (int a : vx.inserted) {
            bd.push_back("b'" + std::to_string(a + 1));
            edge_list.push_back("(a" + std::to_string(a + 1) + ",b'" + std::to_string(a + 1) + ")");
        }
        out << (v ? "," : "") << "{I:" << join_labels(in) << ";B:" << join_labels(bd) << "}";
    }
    std::sort(edge_list.begin(), edge_list.end());
    out << "] E=[" << join_labels(edge_list) << "] sign=" << (edges() % 2 ? "-1" : "+1");
    return out.str();
}

std::vector<ComparisonGraph> enumerate_graphs(int l, int k, const std::vector<int>& D) {
    if (static_cast<int>(D.size()) != l) throw DomainError("descendant vector must have one entry per internal");
    for (int d : D)
        if (d < 0) throw DomainError("negative descendant power");
    std::vector<ComparisonGraph> out;
    // Item types: internal labels [0,l), boundary labels [l,l+k), inserted points by source [l+k, 2l+k).
    Vec n(l, 0);
    std::function<void(int)> choose = [&](int i) {
        if (i < l) {
            for (n[i] = 0; n[i] <= D[i]; ++n[i]) choose(i + 1);
            n[i] = 0;
            return;
        }
        int E = std::accumulate(n.begin(), n.end(), 0);
        Vec w(2 * l + k, 1);
        for (int a = 0; a < l; ++a) w[l + k + a] = n[a];
        std::vector<Vec> blocks;
        partitions(w, E + 1, blocks, [&] {
            std::vector<GraphVertex> vs;
            std::vector<int> home(l, -1);
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                GraphVertex vx;
                for (int t = 0; t < l; ++t)
                    if (blocks[b][t]) {
                        vx.internal.push_back(t);
                        home[t] = static_cast<int>(b);
                    }
                for (int t = 0; t < k; ++t)
                    if (blocks[b][l + t]) vx.boundary.push_back(t);
                for (int a = 0; a < l; ++a)
                    for (int c = 0; c < blocks[b][l + k + a]; ++c) vx.inserted.push_back(a);
                vs.push_back(std::move(vx));
            }
            UnionFind uf(static_cast<int>(vs.size()));
            for (std::size_t b = 0; b < vs.size(); ++b)
                for (int a : vs[b].inserted)
                    if (!uf.unite(home[a], static_cast<int>(b))) return;  // loop or repeated edge
            ComparisonGraph g;
            std::sort(vs.begin(), vs.end());
            g.vertices = std::move(vs);
            g.removed = n;
            out.push_back(std::move(g));
        });
    };
    choose(0);
    std::sort(out.begin(), out.end(), [](const ComparisonGraph& a, const ComparisonGraph& b) {
        if (a.edges() != b.edges()) return a.edges() < b.edges();
        return a.dump() < b.dump();
    });
    return out;
}

Key to_bct(const Key& open_key) {
    Key k = open_key;
    k.sector = Sector::Bct;
    return k;
}

Key to_open(const Key& bct_key) {
    Key k = bct_key;
    k.sector = Sector::Open;
    return k;
}

namespace {

Key make_bct(const TheoryParams& p, std::vector<Insertion> in, int nb) {
    Key k;
    k.sector = Sector::Bct;
    k.params = p;
    k.internal = std::move(in);
    k.boundary.assign(nb, p.r - 2);
    return canonicalize(std::move(k));
}

Rational binomials(const Vec& n, const Vec& c) {
    Rational out = 1;
    for (std::size_t i = 0; i < n.size(); ++i) out *= binomial(n[i], c[i]);
    return out;
}

} // namespace

Expansion bct_trr_expand(const Key& lhs, int raised, const Marking& marking) {
    if (lhs.sector != Sector::Bct) throw DomainError("boundary-forgetful recursion needs a bct key");
    validate_key(lhs);
    if (raised < 0 || raised >= lhs.l()) throw DomainError("raised insertion index out of range");
    if (lhs.internal[raised].desc < 1) throw DomainError("raised insertion has no descendant to lower");
    bool bvar = marking.kind == Marking::Kind::Boundary;
    if (bvar && (marking.index < 0 || marking.index >= lhs.k()))
        throw DomainError("boundary marking not present");
    if (!bvar && (marking.index < 0 || marking.index >= lhs.l() || marking.index == raised))
        throw DomainError("internal marking not present or equal to the raised insertion");

    const auto& p = lhs.params;
    Expansion e;
    e.lhs = lhs;
    e.raised = raised;
    e.marking = marking;
    if (!open_gate(lhs).admissible) return e;

    Insertion low = lhs.internal[raised];
    low.desc -= 1;
    std::map<Insertion, int> icount;
    for (int i = 0; i < lhs.l(); ++i)
        if (i != raised && (bvar || i != marking.index)) ++icount[lhs.internal[i]];
    std::vector<Insertion> itypes;
    Vec n;
    for (auto& [t, c] : icount) {
        itypes.push_back(t);
        n.push_back(c);
    }
    int ni = static_cast<int>(itypes.size());
    int nb = bvar ? lhs.k() - 1 : lhs.k();
    n.push_back(nb);
    auto pick = [&](const Vec& c) {
        std::vector<Insertion> out;
        for (int i = 0; i < ni; ++i)
            for (int j = 0; j < c[i]; ++j) out.push_back(itypes[i]);
        return out;
    };

    std::map<std::vector<std::string>, Term> acc;
    auto emit = [&](std::vector<Key> factors, const Rational& coef) {
        for (const auto& f : factors)
            if (!gate(f).admissible) return;
        std::vector<std::string> id;
        for (const auto& f : factors) id.push_back(to_string(f));
        auto it = acc.find(id);
        if (it == acc.end()) {
            Term t;
            t.coef = coef;
            t.factors = std::move(factors);
            acc.emplace(std::move(id), std::move(t));
        } else {
            it->second.coef += coef;
        }
    };

    Vec ibound(n.begin(), n.begin() + ni);
    // Closed-extended factor times one open factor carrying every boundary point.
    for_each_subvector(ibound, [&](const Vec& c1) {
        auto r1 = pick(c1);
        long S = low.twist;
        for (const auto& x : r1) S += x.twist;
        long x = ((p.r - 2 - S) % p.r + p.r) % p.r;
        int a = x == p.r - 1 ? -1 : static_cast<int>(x);
        std::vector<Insertion> cin{{a, 0}, low};
        cin.insert(cin.end(), r1.begin(), r1.end());
        std::vector<Insertion> oin{{p.r - 2 - a, 0}};
        if (!bvar) oin.push_back(lhs.internal[marking.index]);
        Vec c2 = minus(ibound, c1);
        auto r2 = pick(c2);
        oin.insert(oin.end(), r2.begin(), r2.end());
        Vec cfull = c1;
        cfull.push_back(0);
        emit({make_closed(p, cin), make_bct(p, oin, lhs.k())}, binomials(n, cfull));
    });
    // Two open factors joined at an inserted boundary point of twist r-2.
    for_each_subvector(n, [&](const Vec& c1) {
        auto r1 = pick(c1);
        std::vector<Insertion> in1{low};
        in1.insert(in1.end(), r1.begin(), r1.end());
        int t1 = c1[ni];
        Vec c2 = minus(n, c1);
        auto r2 = pick(c2);
        std::vector<Insertion> in2;
        if (!bvar) in2.push_back(lhs.internal[marking.index]);
        in2.insert(in2.end(), r2.begin(), r2.end());
        int t2 = c2[ni] + 1 + (bvar ? 1 : 0);
        emit({make_bct(p, in1, t1), make_bct(p, in2, t2)}, binomials(n, c1));
    });

    for (auto& [_, t] : acc)
        if (t.coef != 0) e.terms.push_back(std::move(t));
    return e;
}

// ---------------------------------------------------------------- evaluator

BctEvaluator::BctEvaluator(Engine& h0) : h0_(h0) {
    if (h0.params().h != 0) throw DomainError("the boundary-forgetful comparison needs h=0");
}

void BctEvaluator::override_value(const Key& key, const Rational& v) {
    memo_[to_string(key)] = Outcome::of(v);
}

std::optional<Rational> BctEvaluator::peek(const Key& key) {
    if (key.sector == Sector::ClosedExt) return h0_.peek(key);
    if (key.sector != Sector::Bct) throw DomainError("expected a bct key, got " + to_string(key));
    auto it = memo_.find(to_string(key));
    if (it != memo_.end() && it->second.known) return it->second.value;
    if (!open_gate(key).admissible) return Rational(0);
    return std::nullopt;
}

Outcome BctEvaluator::value(const Key& key) {
    if (key.sector == Sector::ClosedExt) return h0_.value(key);
    if (key.sector != Sector::Bct) throw DomainError("expected a bct key, got " + to_string(key));
    auto name = to_string(key);
    if (auto it = memo_.find(name); it != memo_.end()) return it->second;
    Outcome out;
    if (!open_gate(key).admissible) {
        out = Outcome::of(0);
    } else if (key.is_primary()) {
        auto r = h0_.compute(to_open(key));
        if (r.known) out = Outcome::of(r.value);
        else out.missing = r.missing;
    } else {
        int raised = 0;
        while (key.internal[raised].desc == 0) ++raised;
        Marking mk = key.k() >= 1 ? Marking{Marking::Kind::Boundary, 0}
                                  : Marking{Marking::Kind::Internal, raised == 0 ? 1 : 0};
        out = eval_expansion(bct_trr_expand(key, raised, mk), *this);
    }
    memo_[name] = out;
    return out;
}

// ---------------------------------------------------------------- transform

namespace {

std::vector<Key> vertex_keys(const Key& key, const ComparisonGraph& g) {
    std::vector<Key> out;
    for (const auto& v : g.vertices) {
        std::vector<Insertion> in;
        for (int a : v.internal) in.push_back({key.internal[a].twist, key.internal[a].desc - g.removed[a]});
        out.push_back(make_bct(key.params, in, static_cast<int>(v.boundary.size() + v.inserted.size())));
    }
    return out;
}

std::vector<int> descendants(const Key& key) {
    std::vector<int> D;
    for (const auto& i : key.internal) D.push_back(i.desc);
    return D;
}

} // namespace

TransformResult transform(const Key& key, BctEvaluator& bct) {
    if (key.params.h != 0) throw DomainError("the comparison transform needs h=0");
    TransformResult res;
    res.value = Outcome::of(0);
    Outcome blocked;
    bool any_blocked = false;
    for (const auto& g : enumerate_graphs(key.l(), key.k(), descendants(key))) {
        Rational t = g.edges() % 2 ? -1 : 1;
        bool zero = false, missing = false;
        auto vks = vertex_keys(key, g);
        for (const auto& vk : vks)
            if (auto v = bct.peek(vk); v && *v == 0) zero = true;
        if (!zero) {
            for (const auto& vk : vks) {
                auto o = bct.value(vk);
                if (!o.known) {
                    missing = true;
                    blocked.missing.insert(o.missing.begin(), o.missing.end());
                    continue;
                }
                t *= o.value;
            }
        }
        if (missing) {
            any_blocked = true;
            continue;
        }
        if (zero) t = 0;
        res.breakdown.emplace_back(g.dump(), t);
        res.value.value += t;
    }
    if (any_blocked) res.value = blocked;
    return res;
}

// ---------------------------------------------------------------- cross validation

namespace {

class Validator {
public:
    Validator(Engine& h0, BctEvaluator& bct) : h0_(h0), bct_(bct) {}

    std::optional<Rational> h0(const Key& open_key) {
        auto r = h0_.compute(open_key);
        if (!r.known) return std::nullopt;
        return r.value;
    }

    // Boundary-forgetful value rebuilt from h=0 values alone, inverting the
    // graph sum one descendant level at a time.
    std::optional<Rational> recovered(const Key& bct_key) {
        auto name = to_string(bct_key);
        if (auto it = rt_.find(name); it != rt_.end()) return it->second;
        std::optional<Rational> out;
        if (!open_gate(bct_key).admissible) {
            out = Rational(0);
        } else if (auto base = h0(to_open(bct_key))) {
            Rational v = *base;
            for (const auto& g : enumerate_graphs(bct_key.l(), bct_key.k(), descendants(bct_key))) {
                if (g.edges() == 0) continue;
                Rational t = g.edges() % 2 ? -1 : 1;
                for (const auto& vk : vertex_keys(bct_key, g)) {
                    auto x = recovered(vk);
                    if (!x) return rt_[name] = std::nullopt;
                    t *= *x;
                }
                v -= t;
            }
            out = v;
        }
        return rt_[name] = out;
    }

    // Right side of the one-descendant identity: sum over splits of the other
    // insertions of <tau^{a1}_0 I1 B1> <I2 sigma^{r-2} B2>, all at h=0.
    std::optional<Rational> simple_case(const Key& key, int raised) {
        const auto& p = key.params;
        std::map<Insertion, int> icount;
        for (int i = 0; i < key.l(); ++i)
            if (i != raised) ++icount[key.internal[i]];
        std::vector<Insertion> itypes;
        Vec n;
        for (auto& [t, c] : icount) {
            itypes.push_back(t);
            n.push_back(c);
        }
        n.push_back(key.k());
        int ni = static_cast<int>(itypes.size());
        Rational total = 0;
        bool ok = true;
        for_each_subvector(n, [&](const Vec& c1) {
            if (!ok) return;
            std::vector<Insertion> in1{{key.internal[raised].twist, 0}}, in2;
            for (int i = 0; i < ni; ++i) {
                for (int j = 0; j < c1[i]; ++j) in1.push_back(itypes[i]);
                for (int j = 0; j < n[i] - c1[i]; ++j) in2.push_back(itypes[i]);
            }
            Key k1 = make_open(p, in1, std::vector<int>(c1[ni], p.r - 2));
            Key k2 = make_open(p, in2, std::vector<int>(n[ni] - c1[ni] + 1, p.r - 2));
            if (!open_gate(k1).admissible || !open_gate(k2).admissible) return;
            auto v1 = h0(k1), v2 = h0(k2);
            if (!v1 || !v2) {
                ok = false;
                return;
            }
            total += binomials(n, c1) * *v1 * *v2;
        });
        if (!ok) return std::nullopt;
        return total;
    }

private:
    Engine& h0_;
    BctEvaluator& bct_;
    std::map<std::string, std::optional<Rational>> rt_;
};

} // namespace

CompareReport cross_validate(Engine& h0, int max_dim, bool primary_only) {
    BctEvaluator bct(h0);
    return cross_validate(h0, bct, max_dim, primary_only);
}

CompareReport cross_validate(Engine& h0, BctEvaluator& bct, int max_dim, bool primary_only) {
    if (h0.params().h != 0) throw DomainError("comparison is defined for h=0 only");
    CompareReport rep;
    with_large_stack([&] {
        Validator val(h0, bct);
        for (const auto& key : admissible_keys(h0.params(), max_dim, primary_only, false)) {
            auto lhs = val.h0(key);
            auto tr = transform(key, bct);
            if (!lhs || !tr.value.known) {
                ++rep.incomplete;
                continue;
            }
            ++rep.checked;
            auto name = to_string(key);
            if (*lhs != tr.value.value)
                rep.mismatches.push_back({name, "graph sum", *lhs, tr.value.value, tr.breakdown});

            Key bk = to_bct(key);
            auto direct = bct.value(bk);
            auto rt = val.recovered(bk);
            if (direct.known && rt) {
                ++rep.round_trip_checked;
                if (direct.value != *rt) rep.mismatches.push_back({name, "round trip", direct.value, *rt, {}});
            }

            int ones = 0, raised = -1, others = 0;
            for (int i = 0; i < key.l(); ++i) {
                if (key.internal[i].desc == 1) {
                    ++ones;
                    raised = i;
                } else if (key.internal[i].desc > 1) {
                    ++others;
                }
            }
            if (ones == 1 && others == 0 && direct.known) {
                if (auto rhs = val.simple_case(key, raised)) {
                    ++rep.simple_case_checked;
                    Rational diff = direct.value - *lhs;
                    if (diff != *rhs) rep.mismatches.push_back({name, "one-descendant form", diff, *rhs, {}});
                }
            }
        }
    });
    return rep;
}

} // namespace ospin
