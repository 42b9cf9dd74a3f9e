#include "openspin/openspin.h"

#include "compare.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>

struct ospin_engine {
    std::unique_ptr<ospin::Engine> engine;
    std::string last_error;
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void set_error(ospin_engine* e, const std::string& msg) {
    g_last_error = msg;
    if (e) e->last_error = msg;
}

// Maps exceptions to status codes and records the message.
template <class F>
ospin_status guarded(ospin_engine* e, F&& f) {
    try {
        return f();
    } catch (const ospin::ParseError& x) {
        set_error(e, x.what());
        return OSPIN_PARSE;
    } catch (const ospin::DomainError& x) {
        set_error(e, x.what());
        return OSPIN_DOMAIN;
    } catch (const ospin::ConsistencyError& x) {
        set_error(e, x.what());
        return OSPIN_CONSISTENCY;
    } catch (const ospin::SolverError& x) {
        set_error(e, x.what());
        return OSPIN_SOLVER;
    } catch (const ospin::UnknownValueError& x) {  // strict mode aborts
        set_error(e, x.what());
        return OSPIN_ERROR;
    } catch (const ospin::IoError& x) {
        set_error(e, x.what());
        return OSPIN_IO;
    } catch (const std::exception& x) {
        set_error(e, x.what());
        return OSPIN_ERROR;
    } catch (...) {
        set_error(e, "unknown failure");
        return OSPIN_ERROR;
    }
}

std::string join(const std::set<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : " ") + x;
    return out;
}

std::string result_line(const std::string& key, const ospin::EvalResult& r) {
    if (!r.known) return key + " BLOCKED: " + join(r.missing);
    std::string line = key + " = " + ospin::to_fraction(r.value);
    if (r.provenance.rfind("vanishing:", 0) == 0) line += " (rule: " + r.provenance.substr(10) + ")";
    return line;
}

} // namespace

extern "C" {

ospin_status ospin_engine_create(const ospin_options* opts, ospin_engine** out) {
    if (!opts || !out) {
        set_error(nullptr, "null argument");
        return OSPIN_ARG;
    }
    if (opts->sign != 1 && opts->sign != -1) {
        set_error(nullptr, "sign must be +1 or -1");
        return OSPIN_ARG;
    }
    return guarded(nullptr, [&] {
        ospin::TheoryParams p{opts->r, opts->h, opts->m};
        p.validate();
        ospin::ClosedValueTable table;
        for (std::size_t i = 0; i < opts->n_closed_tables; ++i) table.merge(ospin::load_table(opts->closed_tables[i]));
        auto h = std::make_unique<ospin_engine>();
        h->engine = std::make_unique<ospin::Engine>(p, std::move(table), opts->strict != 0, opts->sign);
        *out = h.release();
        return OSPIN_OK;
    });
}

void ospin_engine_destroy(ospin_engine* e) { delete e; }

const char* ospin_last_error(const ospin_engine* e) { return e ? e->last_error.c_str() : g_last_error.c_str(); }

void ospin_free_string(char* s) { std::free(s); }

ospin_status ospin_canonical_key(const char* key, char** out, int* r, int* h, int* m) {
    if (!key) {
        set_error(nullptr, "null argument");
        return OSPIN_ARG;
    }
    return guarded(nullptr, [&] {
        auto k = ospin::parse_key(key);
        if (out) *out = dup(ospin::to_string(k));
        if (r) *r = k.params.r;
        if (h) *h = k.params.h;
        if (m) *m = k.params.m;
        return OSPIN_OK;
    });
}

ospin_status ospin_load_cache(ospin_engine* e, const char* path) {
    if (!e || !path) return OSPIN_ARG;
    return guarded(e, [&] {
        e->engine->store().load(path);
        return OSPIN_OK;
    });
}

ospin_status ospin_save_cache(ospin_engine* e, const char* path) {
    if (!e || !path) return OSPIN_ARG;
    return guarded(e, [&] {
        e->engine->store().save(path);
        return OSPIN_OK;
    });
}

size_t ospin_cache_size(ospin_engine* e) { return e ? e->engine->store().size() : 0; }

ospin_status ospin_eval(ospin_engine* e, const char* key, char** line) {
    if (!e || !key || !line) return OSPIN_ARG;
    return guarded(e, [&] {
        auto k = ospin::parse_key(key);
        auto r = e->engine->compute(k);
        *line = dup(result_line(ospin::to_string(k), r));
        if (!r.known) set_error(e, "blocked on " + join(r.missing));
        return r.known ? OSPIN_OK : OSPIN_BLOCKED;
    });
}

ospin_status ospin_value(ospin_engine* e, const char* key, char** value) {
    if (!e || !key || !value) return OSPIN_ARG;
    return guarded(e, [&] {
        auto r = e->engine->compute(ospin::parse_key(key));
        if (!r.known) {
            set_error(e, "blocked on " + join(r.missing));
            return OSPIN_BLOCKED;
        }
        *value = dup(ospin::to_fraction(r.value));
        return OSPIN_OK;
    });
}

ospin_status ospin_table(ospin_engine* e, int max_dim, char** table, char** summary) {
    if (!e || !table) return OSPIN_ARG;
    return guarded(e, [&] {
        auto rep = e->engine->full_table(max_dim);
        std::string text;
        for (const auto& [key, r] : rep.rows) {
            if (r.known) text += ospin::format_entry(key, r.value, r.provenance) + "\n";
            else text += "# " + result_line(key, r) + "\n";
        }
        *table = dup(text);
        if (summary) {
            std::ostringstream s;
            s << "keys=" << rep.rows.size() << " computed=" << rep.computed << " zero-by-rule=" << rep.zero_by_rule
              << " blocked=" << rep.blocked;
            *summary = dup(s.str());
        }
        return OSPIN_OK;
    });
}

ospin_status ospin_check(ospin_engine* e, size_t samples, uint64_t seed, int max_dim, char** report) {
    if (!e || !report) return OSPIN_ARG;
    return guarded(e, [&] {
        auto rep = e->engine->check(samples, seed, max_dim);
        std::ostringstream s;
        s << "sampled=" << rep.sampled << " verified=" << rep.verified << " incomplete=" << rep.incomplete
          << " failures=" << rep.failures.size() << "\n";
        for (const auto& f : rep.failures)
            s << "FAIL " << f.lhs << ": [" << f.marking_a << "] = " << ospin::to_fraction(f.value_a) << " vs ["
              << f.marking_b << "] = " << ospin::to_fraction(f.value_b) << "\n";
        *report = dup(s.str());
        if (!rep.pass()) {
            set_error(e, "TRR disagreement on " + rep.failures.front().lhs);
            return OSPIN_MISMATCH;
        }
        return OSPIN_OK;
    });
}

ospin_status ospin_compare(ospin_engine* e, int max_dim, int primary_only, char** report) {
    if (!e || !report) return OSPIN_ARG;
    return guarded(e, [&] {
        auto rep = ospin::cross_validate(*e->engine, max_dim, primary_only != 0);
        std::ostringstream s;
        s << "checked=" << rep.checked << " incomplete=" << rep.incomplete
          << " one-descendant=" << rep.simple_case_checked << " round-trip=" << rep.round_trip_checked
          << " mismatches=" << rep.mismatches.size() << "\n";
        for (const auto& mm : rep.mismatches) {
            s << "MISMATCH " << mm.key << " (" << mm.what << "): " << ospin::to_fraction(mm.lhs) << " vs "
              << ospin::to_fraction(mm.rhs) << "\n";
            for (const auto& [g, t] : mm.breakdown) s << "  " << g << " T=" << ospin::to_fraction(t) << "\n";
        }
        *report = dup(s.str());
        if (!rep.pass()) {
            set_error(e, "comparison mismatch on " + rep.mismatches.front().key);
            return OSPIN_MISMATCH;
        }
        return OSPIN_OK;
    });
}

ospin_status ospin_graphs(int l, int k, const int* D, char** out) {
    if (!out || l < 0 || k < 0 || (l > 0 && !D)) {
        set_error(nullptr, "bad argument");
        return OSPIN_ARG;
    }
    return guarded(nullptr, [&] {
        std::string text;
        for (const auto& g : ospin::enumerate_graphs(l, k, std::vector<int>(D, D + l))) text += g.dump() + "\n";
        *out = dup(text);
        return OSPIN_OK;
    });
}

} // extern "C"
