#include "scheduler.hpp"

#include <pthread.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace ospin {

// ---------------------------------------------------------------- ValueStore

std::string format_entry(const std::string& key, const Rational& value, const std::string& provenance) {
    return key + " = " + to_fraction(value) + " ; " + provenance;
}

std::optional<StoredValue> ValueStore::get(const std::string& key) const {
    std::shared_lock lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

void ValueStore::put(const std::string& key, const Rational& value, const std::string& provenance) {
    std::unique_lock lock(mu_);
    auto [it, inserted] = map_.emplace(key, StoredValue{value, provenance});
    if (!inserted && it->second.value != value)
        throw ConsistencyError("write-once violation for " + key + ": stored " + to_fraction(it->second.value) +
                               " (" + it->second.provenance + "), new " + to_fraction(value) + " (" +
                               provenance + ")");
}

std::size_t ValueStore::size() const {
    std::shared_lock lock(mu_);
    return map_.size();
}

std::map<std::string, StoredValue> ValueStore::snapshot() const {
    std::shared_lock lock(mu_);
    return map_;
}

void ValueStore::load_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find(" = ");
        auto semi = line.find(" ; ", eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || semi == std::string::npos)
            throw ParseError(source + ": expected '<key> = <num>/<den> ; <provenance>'", lineno);
        Key key;
        Rational v;
        try {
            key = parse_key(line.substr(0, eq));
            v = parse_fraction(line.substr(eq + 3, semi - eq - 3));
        } catch (const std::exception& e) {
            throw ParseError(source + ": " + e.what(), lineno);
        }
        put(to_string(key), v, line.substr(semi + 3));
    }
}

void ValueStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cache " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    load_text(buf.str(), path);
}

std::string ValueStore::serialize() const {
    std::string out;
    for (const auto& [k, v] : snapshot()) out += format_entry(k, v.value, v.provenance) + "\n";
    return out;
}

void write_atomic(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out << text;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

void ValueStore::save(const std::string& path) const { write_atomic(path, serialize()); }

// ---------------------------------------------------------------- initial data

std::vector<std::pair<Key, Rational>> initial_values(const TheoryParams& p, int sign) {
    auto c = derive_constants(p);
    std::vector<std::pair<Key, Rational>> out;
    if (p.m != 1) return out;
    auto keep = [&](Key k, Rational v) {
        if (open_gate(k).admissible) out.emplace_back(std::move(k), std::move(v));
    };
    std::vector<int> fb(c.N, c.m_min);
    fb.push_back(c.b);
    keep(make_open(p, {}, fb), Rational(sign) * factorial(c.N));
    // Zero-dimensional disks with one internal and one boundary point. a = h is the K=0 case.
    for (int a = 0; a <= p.h; ++a) keep(make_open(p, {{a, 0}}, {p.r - 2 - 2 * a}), 1);
    keep(make_open(p, {{2 * p.h + 1, 0}}, {c.m_min, c.m_min}), 1);
    if ((p.r - c.b + 2 * p.h) % 2 == 0) {
        int a1 = (p.r - c.b + 2 * p.h) / 2, a2 = (c.N - 1) * (p.h + 1) - 1;
        if (a1 <= p.r - 1 && a2 >= 0 && a2 <= p.r - 1) keep(make_open(p, {{a1, 0}, {a2, 0}}, {}), 0);
    }
    return out;
}

// ---------------------------------------------------------------- spin states

SpinState SpinState::of(const Key& key) {
    SpinState s;
    s.B = key.boundary;
    for (const auto& i : key.internal) s.I.push_back(i.twist);
    std::sort(s.B.begin(), s.B.end());
    std::sort(s.I.begin(), s.I.end());
    return s;
}

Key SpinState::key(const TheoryParams& p) const {
    std::vector<Insertion> in;
    for (int a : I) in.push_back({a, 0});
    return make_open(p, in, B);
}

int SpinState::M() const { return B.empty() ? 0 : *std::max_element(B.begin(), B.end()); }
int SpinState::Sigma() const { return std::accumulate(I.begin(), I.end(), 0); }

bool in_S(const TheoryParams& p, const SpinState& s) {
    int m_min = p.r - 2 - 2 * p.h;
    for (int a : s.I)
        if (a < p.h + 1 || a > p.r - 1) return false;
    for (int b : s.B)
        if (b < m_min || b > p.r - 2 || (b - m_min) % 2 != 0) return false;
    long lhs = 2L * s.Sigma() + std::accumulate(s.B.begin(), s.B.end(), 0L) - p.r + 2;
    return s.D() >= 0 && lhs == static_cast<long>(p.r) * s.D();
}

bool in_E1(const TheoryParams& p, const SpinState& s) {
    if (!s.I.empty()) return false;
    int m_min = p.r - 2 - 2 * p.h;
    return std::count_if(s.B.begin(), s.B.end(), [&](int b) { return b > m_min; }) <= 1;
}

bool in_E2(const TheoryParams& p, const SpinState& s) {
    int m_min = p.r - 2 - 2 * p.h;
    return std::all_of(s.B.begin(), s.B.end(), [&](int b) { return b == m_min; });
}

bool precedes(const SpinState& a, const SpinState& b) {
    if (a.D() != b.D()) return a.D() < b.D();
    if (a.I.size() != b.I.size()) return a.I.size() > b.I.size();
    if (a.Sigma() != b.Sigma()) return a.Sigma() > b.Sigma();
    return a.M() > b.M();
}

KX kx_of(const TheoryParams& p, const std::vector<int>& I) {
    int m_min = p.r - 2 - 2 * p.h;
    int step = p.r - m_min;
    long sigma = std::accumulate(I.begin(), I.end(), 0L);
    long base = (2L * static_cast<long>(I.size()) - 1) * p.r - 2 - 2 * sigma;
    long num = m_min - base;
    long K = num >= 0 ? (num + step - 1) / step : -((-num) / step);
    return {static_cast<int>(K), static_cast<int>(base + K * step)};
}

// ---------------------------------------------------------------- enumeration

namespace {

// Non-decreasing sequences of length n over [0, types).
void multisets(int types, int n, std::vector<int>& cur, const std::function<void()>& f) {
    if (static_cast<int>(cur.size()) == n) {
        f();
        return;
    }
    int lo = cur.empty() ? 0 : cur.back();
    for (int t = lo; t < types; ++t) {
        cur.push_back(t);
        multisets(types, n, cur, f);
        cur.pop_back();
    }
}

} // namespace

std::vector<Key> admissible_keys(const TheoryParams& p, int max_dim, bool primary_only, bool descendant_only) {
    std::vector<Key> out;
    if (max_dim < 0) return out;
    int max_desc = primary_only ? 0 : max_dim / 2;
    std::vector<Insertion> itypes;
    for (int a = 0; a <= p.r - 1; ++a)
        for (int d = 0; d <= max_desc; ++d) itypes.push_back({a, d});
    std::vector<int> btypes;
    for (int j = p.h; j >= 0; --j) btypes.push_back(p.r - 2 - 2 * j);
    for (int l = 0; 2 * l - 3 <= max_dim; ++l) {
        for (int k = 0; 2 * l + k - 3 <= max_dim; ++k) {
            if (2 * l + k - 3 < 0) continue;
            std::vector<int> ic, bc;
            multisets(static_cast<int>(itypes.size()), l, ic, [&] {
                int desc = 0;
                for (int t : ic) desc += itypes[t].desc;
                if (descendant_only && desc == 0) return;
                if (2 * desc > 2 * l + k - 3) return;
                std::vector<Insertion> in;
                for (int t : ic) in.push_back(itypes[t]);
                multisets(static_cast<int>(btypes.size()), k, bc, [&] {
                    std::vector<int> bd;
                    for (int t : bc) bd.push_back(btypes[t]);
                    Key key = make_open(p, in, bd);
                    if (open_gate(key).admissible) out.push_back(std::move(key));
                });
            });
        }
    }
    std::sort(out.begin(), out.end(), [](const Key& a, const Key& b) { return to_string(a) < to_string(b); });
    return out;
}

// ---------------------------------------------------------------- large stack

namespace {

thread_local bool on_large_stack = false;

struct StackJob {
    const std::function<void()>* fn;
    std::exception_ptr error;
};

void* run_job(void* arg) {
    auto* job = static_cast<StackJob*>(arg);
    on_large_stack = true;
    try {
        (*job->fn)();
    } catch (...) {
        job->error = std::current_exception();
    }
    return nullptr;
}

} // namespace

void with_large_stack(const std::function<void()>& fn) {
    if (on_large_stack) {
        fn();
        return;
    }
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setstacksize(&attr, std::size_t{1} << 30);
    StackJob job{&fn, nullptr};
    pthread_t th;
    int rc = pthread_create(&th, &attr, run_job, &job);
    pthread_attr_destroy(&attr);
    if (rc != 0) {
        fn();  // fall back to the current stack
        return;
    }
    pthread_join(th, nullptr);
    if (job.error) std::rethrow_exception(job.error);
}

// ---------------------------------------------------------------- engine

Engine::Engine(TheoryParams params, ClosedValueTable table, bool strict, int sign)
    : params_(params), consts_(derive_constants(params)), oracle_(std::move(table), strict) {
    if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
    for (const auto& [k, v] : initial_values(params_, sign)) store_.put(to_string(k), v, "initial");
}

void Engine::check_params(const Key& key) const {
    if (key.params != params_)
        throw DomainError("key " + to_string(key) + " does not belong to this engine's theory");
}

void Engine::add_external(const Key& key, const Rational& value) {
    check_params(key);
    if (key.sector != Sector::Open) throw DomainError("external values must be open-sector keys");
    validate_key(key);
    store_.put(to_string(key), value, "external");
}

std::optional<Rational> Engine::peek(const Key& key) {
    if (key.sector == Sector::ClosedExt) {
        auto o = oracle_.eval(key);
        if (o.known) return o.value;
        return std::nullopt;
    }
    if (key.sector != Sector::Open) throw DomainError("engine evaluates open and closed-extended keys only");
    if (auto v = store_.get(to_string(key))) return v->value;
    if (vanishing_check(key).zero) return Rational(0);
    return std::nullopt;
}

Outcome Engine::value(const Key& key) {
    if (key.sector == Sector::ClosedExt) {
        auto o = oracle_.eval(key);
        if (o.known) return Outcome::of(o.value);
        Outcome b;
        b.missing.insert(o.unknown_key);
        return b;
    }
    std::string prov;
    return compute_open(key, prov);
}

EvalResult Engine::compute(const Key& key) {
    check_params(key);
    if (key.sector != Sector::Open) throw DomainError("compute needs an open-sector key");
    validate_key(key);
    EvalResult res;
    with_large_stack([&] {
        std::lock_guard lock(mu_);
        std::string prov;
        auto o = compute_open(canonicalize(key), prov);
        res.known = o.known;
        res.value = o.value;
        res.provenance = prov;
        res.missing = o.missing;
    });
    return res;
}

Outcome Engine::compute_open(const Key& key, std::string& provenance) {
    auto name = to_string(key);
    if (auto v = store_.get(name)) {
        provenance = v->provenance;
        return Outcome::of(v->value);
    }
    auto van = vanishing_check(key);
    if (van.zero) {
        provenance = "vanishing:" + van.rule;
        return Outcome::of(0);
    }
    if (active_.count(name)) {
        Outcome b;
        b.missing.insert(name);
        b.cycle_on.insert(name);
        return b;
    }
    if (auto it = blocked_.find(name); it != blocked_.end()) return it->second;
    if (auto it = pending_.find(name); it != pending_.end()) return it->second;

    active_.insert(name);
    Outcome out;
    try {
        if (key.is_primary()) {
            out = solve_primary(key, provenance);
        } else {
            out = expand_descendant(key);
            provenance = "computed:trr";
        }
    } catch (...) {
        active_.erase(name);
        pending_.clear();
        throw;
    }
    active_.erase(name);
    // Blocked results that leaned on this key while it was open are stale now.
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (it->second.cycle_on.count(name)) it = pending_.erase(it);
        else ++it;
    }
    out.cycle_on.erase(name);
    if (out.known) store_.put(name, out.value, provenance);
    else if (!out.cyclic()) blocked_[name] = out;
    else pending_[name] = out;
    return out;
}

Outcome Engine::expand_descendant(const Key& key) {
    int raised = -1;
    for (int i = 0; i < key.l(); ++i)
        if (key.internal[i].desc >= 1) {
            raised = i;
            break;
        }
    Marking mk;
    if (key.k() >= 1) {
        mk = {Marking::Kind::Boundary, 0};
    } else {
        // l >= 2 here: a single descendant internal with no boundary fails the gate.
        mk = {Marking::Kind::Internal, raised == 0 ? 1 : 0};
    }
    return eval_expansion(trr_expand(key, raised, mk), *this);
}

namespace {

int raised_index(const Key& aux) {
    for (int i = 0; i < aux.l(); ++i)
        if (aux.internal[i].desc == 1) return i;
    return -1;
}

int first_other_internal(const Key& aux, int raised) {
    for (int i = 0; i < aux.l(); ++i)
        if (i != raised) return i;
    return -1;
}

// One marking per distinct insertion type.
std::vector<Marking> distinct_markings(const Key& aux, int raised) {
    std::vector<Marking> out;
    for (int j = 0; j < aux.k(); ++j)
        if (j == 0 || aux.boundary[j] != aux.boundary[j - 1]) out.push_back({Marking::Kind::Boundary, j});
    for (int i = 0; i < aux.l(); ++i) {
        if (i == raised) continue;
        bool seen = false;
        for (int j = 0; j < i; ++j)
            if (j != raised && aux.internal[j] == aux.internal[i]) seen = true;
        if (!seen) out.push_back({Marking::Kind::Internal, i});
    }
    return out;
}

void merge_blocked(Outcome& into, const Outcome& o) {
    into.missing.insert(o.missing.begin(), o.missing.end());
    into.cycle_on.insert(o.cycle_on.begin(), o.cycle_on.end());
}

std::string marking_name(const Key& k, const Marking& m) {
    if (m.kind == Marking::Kind::Boundary) return "boundary " + std::to_string(k.boundary[m.index]);
    const auto& i = k.internal[m.index];
    return "internal " + std::to_string(i.twist) + ":" + std::to_string(i.desc);
}

} // namespace

std::vector<Engine::Candidate> Engine::recipe_candidates(const SpinState& s) {
    const auto& p = params_;
    const auto& c = consts_;
    std::vector<Candidate> out;
    std::vector<Insertion> I;
    for (int a : s.I) I.push_back({a, 0});
    if (!in_E2(p, s)) {
        std::vector<int> B = s.B;
        int b1 = B.back();
        B.pop_back();
        B.push_back(c.m_min);
        auto in = I;
        in.push_back({(b1 - c.m_min) / 2, 1});
        Candidate cand{make_open(p, in, B), 0, "type-I", std::nullopt};
        cand.raised = raised_index(cand.aux);
        Marking second = s.I.empty() ? Marking{Marking::Kind::Boundary, cand.aux.k() - 1}
                                     : Marking{Marking::Kind::Internal, first_other_internal(cand.aux, cand.raised)};
        cand.pair = std::make_pair(Marking{Marking::Kind::Boundary, 0}, second);
        out.push_back(std::move(cand));
    } else if (s.I.size() == 1) {
        int a = s.I[0];
        int K = (a + 1) / (p.h + 1) - 1;
        if (K >= 2) {
            std::vector<int> B(K + 1, c.m_min);
            Candidate cand{make_open(p, {{p.h + 1, 1}, {a - (p.h + 1), 0}}, B), 0, "kfact", std::nullopt};
            cand.raised = raised_index(cand.aux);
            cand.pair = std::make_pair(Marking{Marking::Kind::Boundary, 0},
                                       Marking{Marking::Kind::Internal, first_other_internal(cand.aux, cand.raised)});
            out.push_back(std::move(cand));
        }
    } else if (s.I.size() >= 2) {
        int a1 = s.I.back();
        if (a1 >= c.c) {
            auto in = I;
            in.pop_back();
            in.push_back({a1 - c.c, 1});
            std::vector<int> B = s.B;
            B.insert(B.end(), c.N, c.m_min);
            Candidate cand{make_open(p, in, B), 0, "type-II", std::nullopt};
            cand.raised = raised_index(cand.aux);
            cand.pair = std::make_pair(Marking{Marking::Kind::Boundary, 0},
                                       Marking{Marking::Kind::Internal, first_other_internal(cand.aux, cand.raised)});
            out.push_back(std::move(cand));
        }
    }
    return out;
}

std::vector<Engine::Candidate> Engine::fallback_candidates(const SpinState& s) {
    const auto& p = params_;
    const auto& c = consts_;
    std::vector<Candidate> out;
    std::vector<Insertion> I;
    for (int a : s.I) I.push_back({a, 0});
    for (std::size_t j = 0; j < s.B.size(); ++j) {
        if (j > 0 && s.B[j] == s.B[j - 1]) continue;
        std::vector<int> B = s.B;
        B.erase(B.begin() + static_cast<long>(j));
        B.push_back(c.m_min);
        auto in = I;
        in.push_back({(s.B[j] - c.m_min) / 2, 1});
        Candidate cand{make_open(p, in, B), 0, "fallback-type-I", std::nullopt};
        cand.raised = raised_index(cand.aux);
        out.push_back(std::move(cand));
    }
    for (std::size_t i = 0; i < s.I.size(); ++i) {
        if (i > 0 && s.I[i] == s.I[i - 1]) continue;
        if (s.I[i] < c.c) continue;
        auto in = I;
        in.erase(in.begin() + static_cast<long>(i));
        in.push_back({s.I[i] - c.c, 1});
        std::vector<int> B = s.B;
        B.insert(B.end(), c.N, c.m_min);
        Candidate cand{make_open(p, in, B), 0, "fallback-type-II", std::nullopt};
        cand.raised = raised_index(cand.aux);
        out.push_back(std::move(cand));
    }
    return out;
}

Outcome Engine::try_candidate(const Candidate& c, const Key& target, bool hard) {
    Outcome blocked;
    if (!open_gate(c.aux).admissible) return blocked;
    std::vector<Marking> marks;
    if (c.pair) marks = {c.pair->first, c.pair->second};
    else marks = distinct_markings(c.aux, c.raised);

    std::vector<Expansion> ex;
    std::vector<std::optional<Rational>> A;
    for (const auto& m : marks) {
        ex.push_back(trr_expand(c.aux, c.raised, m));
        Outcome a;
        try {
            a = target_coefficient(ex.back(), target, *this);
        } catch (const SolverError&) {
            if (hard) throw;
            return blocked;
        }
        if (a.known) A.push_back(a.value);
        else {
            A.push_back(std::nullopt);
            merge_blocked(blocked, a);
        }
    }
    if (hard && A[0] && A[1] && *A[0] == *A[1])
        throw SolverError(c.method + " elimination for " + to_string(target) + " via " + to_string(c.aux) +
                          " is degenerate: " + marking_name(c.aux, marks[0]) + " and " +
                          marking_name(c.aux, marks[1]) + " both give coefficient " + to_fraction(*A[0]));

    std::vector<std::optional<Outcome>> R(marks.size());
    auto remainder = [&](std::size_t i) -> const Outcome& {
        if (!R[i]) R[i] = target_remainder(ex[i], target, *this);
        return *R[i];
    };
    for (std::size_t i = 0; i < marks.size(); ++i) {
        if (!A[i]) continue;
        for (std::size_t j = i + 1; j < marks.size(); ++j) {
            if (!A[j] || *A[i] == *A[j]) continue;
            const auto& ri = remainder(i);
            if (!ri.known) {
                merge_blocked(blocked, ri);
                break;
            }
            const auto& rj = remainder(j);
            if (!rj.known) {
                merge_blocked(blocked, rj);
                continue;
            }
            return Outcome::of((rj.value - ri.value) / (*A[i] - *A[j]));
        }
    }
    return blocked;
}

Outcome Engine::solve_primary(const Key& key, std::string& provenance) {
    auto name = to_string(key);
    Outcome fail;
    fail.missing.insert(name);
    if (params_.m != 1) return fail;  // no initial data or recipes for m > 1
    auto s = SpinState::of(key);
    if (!in_S(params_, s) || in_E1(params_, s)) return fail;

    Outcome acc;
    auto attempt = [&](const Candidate& c, bool hard) -> bool {
        auto o = try_candidate(c, key, hard);
        if (o.known) {
            fail = o;
            provenance = "computed:" + c.method;
            return true;
        }
        merge_blocked(acc, o);
        return false;
    };
    for (const auto& c : recipe_candidates(s))
        if (attempt(c, true)) return fail;
    for (const auto& c : fallback_candidates(s))
        if (attempt(c, false)) return fail;

    // Missing closed-extended values are the real blockers; otherwise report the state itself.
    std::set<std::string> closed;
    for (const auto& m : acc.missing)
        if (m.rfind("ce|", 0) == 0) closed.insert(m);
    if (!closed.empty()) fail.missing = std::move(closed);
    fail.cycle_on = acc.cycle_on;
    return fail;
}

TableReport Engine::full_table(int max_dim) {
    TableReport rep;
    for (const auto& key : admissible_keys(params_, max_dim, true, false)) {
        auto r = compute(key);
        if (r.known && r.provenance.rfind("vanishing:", 0) == 0) ++rep.zero_by_rule;
        else if (r.known) ++rep.computed;
        else ++rep.blocked;
        rep.rows.emplace_back(to_string(key), std::move(r));
    }
    return rep;
}

CheckReport Engine::check(std::size_t samples, std::uint64_t seed, int max_dim) {
    CheckReport rep;
    auto keys = admissible_keys(params_, max_dim, false, true);
    std::mt19937_64 rng(seed);
    std::size_t n = std::min(samples, keys.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (keys.size() - i));
        std::swap(keys[i], keys[j]);
    }
    keys.resize(n);
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) { return to_string(a) < to_string(b); });
    with_large_stack([&] {
        std::lock_guard lock(mu_);
        for (const auto& key : keys) {
            ++rep.sampled;
            std::optional<std::pair<std::string, Rational>> first;
            bool complete = true;
            for (const auto& [raised, mk] : all_markings(key)) {
                auto o = eval_expansion(trr_expand(key, raised, mk), *this);
                if (!o.known) {
                    complete = false;
                    continue;
                }
                std::string label = "raise " + std::to_string(key.internal[raised].twist) + ":" +
                                    std::to_string(key.internal[raised].desc) + ", " + marking_name(key, mk);
                if (!first) first = std::make_pair(label, o.value);
                else if (first->second != o.value)
                    rep.failures.push_back({to_string(key), first->first, label, first->second, o.value});
            }
            if (complete) ++rep.verified;
            else ++rep.incomplete;
        }
    });
    return rep;
}

} // namespace ospin
