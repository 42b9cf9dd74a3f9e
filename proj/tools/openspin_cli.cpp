// Command-line front end. Talks to the library only through the C API.
#include "openspin/openspin.h"

#include <CLI11.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

namespace {

struct Options {
    std::string cache;
    std::vector<std::string> closed_tables;
    bool strict = false;
    std::string sign = "+";
    int max_dim = 3;
    std::uint64_t seed = 1;
    std::size_t samples = 50;
    int jobs = 1;
    std::string out;
    bool primary_only = false;
};

struct StringGuard {
    char* s = nullptr;
    ~StringGuard() { ospin_free_string(s); }
    std::string str() const { return s ? s : ""; }
};

struct EngineGuard {
    ospin_engine* e = nullptr;
    ~EngineGuard() { ospin_engine_destroy(e); }
};

// Advisory lock held for the lifetime of the process on "<cache>.lock".
class CacheLock {
public:
    explicit CacheLock(const std::string& cache) {
        if (cache.empty()) return;
        fd_ = ::open((cache + ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX | LOCK_NB) != 0)
            throw std::runtime_error("cache " + cache + " is in use by another process");
    }
    ~CacheLock() {
        if (fd_ >= 0) ::close(fd_);
    }

private:
    int fd_ = -1;
};

int fail(const std::string& what) {
    std::cerr << "error: " << what << "\n";
    return 1;
}

std::tuple<int, int, int> parse_theory(const std::string& text) {
    int r, h, m;
    char tail;
    if (std::sscanf(text.c_str(), "%d,%d,%d%c", &r, &h, &m, &tail) != 3)
        throw CLI::ValidationError("theory", "expected r,h,m such as 7,0,1");
    return {r, h, m};
}

// Creates an engine and seeds it from the cache. Returns 0 or an exit code.
int open_engine(const Options& o, int r, int h, int m, EngineGuard& g) {
    std::vector<const char*> tables;
    for (const auto& t : o.closed_tables) tables.push_back(t.c_str());
    ospin_options opts{r, h, m, o.sign == "-" ? -1 : 1, o.strict ? 1 : 0, tables.data(), tables.size()};
    if (ospin_engine_create(&opts, &g.e) != OSPIN_OK) return fail(ospin_last_error(nullptr));
    if (!o.cache.empty() && std::filesystem::exists(o.cache) && ospin_load_cache(g.e, o.cache.c_str()) != OSPIN_OK)
        return fail(ospin_last_error(g.e));
    return 0;
}

int save_cache(const Options& o, EngineGuard& g) {
    if (o.cache.empty()) return 0;
    if (ospin_save_cache(g.e, o.cache.c_str()) != OSPIN_OK) return fail(ospin_last_error(g.e));
    return 0;
}

int cmd_eval(const Options& o, const std::vector<std::string>& keys) {
    std::map<std::tuple<int, int, int>, std::unique_ptr<EngineGuard>> engines;
    int code = 0;
    for (const auto& key : keys) {
        int r, h, m;
        if (ospin_canonical_key(key.c_str(), nullptr, &r, &h, &m) != OSPIN_OK)
            return fail(std::string(ospin_last_error(nullptr)) + " in '" + key + "'");
        auto& slot = engines[{r, h, m}];
        if (!slot) {
            slot = std::make_unique<EngineGuard>();
            if (int rc = open_engine(o, r, h, m, *slot)) return rc;
        }
        StringGuard line;
        auto st = ospin_eval(slot->e, key.c_str(), &line.s);
        if (st == OSPIN_OK || st == OSPIN_BLOCKED) {
            std::cout << line.str() << "\n";
            if (st == OSPIN_BLOCKED) code = 2;
        } else {
            return fail(ospin_last_error(slot->e));
        }
    }
    for (auto& [_, g] : engines)
        if (int rc = save_cache(o, *g)) return rc;
    return code;
}

int cmd_table(const Options& o, const std::string& theory) {
    auto [r, h, m] = parse_theory(theory);
    EngineGuard g;
    if (int rc = open_engine(o, r, h, m, g)) return rc;
    StringGuard table, summary;
    if (ospin_table(g.e, o.max_dim, &table.s, &summary.s) != OSPIN_OK) return fail(ospin_last_error(g.e));
    if (o.out.empty()) {
        std::cout << table.str();
    } else {
        std::string tmp = o.out + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f << table.str();
            if (!f) return fail("cannot write " + o.out);
        }
        std::filesystem::rename(tmp, o.out);
    }
    std::cerr << summary.str() << "\n";
    return save_cache(o, g);
}

int cmd_check(const Options& o, const std::string& theory) {
    auto [r, h, m] = parse_theory(theory);
    EngineGuard g;
    if (int rc = open_engine(o, r, h, m, g)) return rc;
    StringGuard report;
    auto st = ospin_check(g.e, o.samples, o.seed, o.max_dim, &report.s);
    if (st != OSPIN_OK && st != OSPIN_MISMATCH) return fail(ospin_last_error(g.e));
    std::cout << report.str();
    if (int rc = save_cache(o, g)) return rc;
    return st == OSPIN_OK ? 0 : 1;
}

int cmd_compare(const Options& o, const std::string& theory) {
    auto [r, h, m] = parse_theory(theory);
    if (h != 0) return fail("comparison is defined for h=0 only");
    EngineGuard g;
    if (int rc = open_engine(o, r, h, m, g)) return rc;
    StringGuard report;
    auto st = ospin_compare(g.e, o.max_dim, o.primary_only ? 1 : 0, &report.s);
    if (st != OSPIN_OK && st != OSPIN_MISMATCH) return fail(ospin_last_error(g.e));
    std::cout << report.str();
    if (int rc = save_cache(o, g)) return rc;
    return st == OSPIN_OK ? 0 : 1;
}

int cmd_graphs(int k, const std::vector<int>& D) {
    StringGuard out;
    if (ospin_graphs(static_cast<int>(D.size()), k, D.data(), &out.s) != OSPIN_OK)
        return fail(ospin_last_error(nullptr));
    std::cout << out.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact open r-spin correlators"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--cache", o.cache, "Persistent value cache");
    app.add_option("--closed-table", o.closed_tables, "Closed-extended values, '<key> = n/d' per line")
        ->allow_extra_args(false);
    app.add_flag("--strict", o.strict, "Unknown closed values are errors");
    app.add_option("--sign", o.sign, "Sign of the no-internal correlator")->check(CLI::IsMember({"+", "-"}));
    app.add_option("--jobs", o.jobs, "Worker count (evaluation is serialized)")->check(CLI::PositiveNumber);

    std::vector<std::string> keys;
    auto* eval = app.add_subcommand("eval", "Evaluate correlators given as canonical key strings");
    eval->add_option("keys", keys)->required();

    std::string theory;
    auto* table = app.add_subcommand("table", "All primary correlators up to a dimension");
    table->add_option("theory", theory, "r,h,m")->required();
    table->add_option("--max-dim", o.max_dim);
    table->add_option("--out", o.out, "Write the table here instead of stdout");

    auto* check = app.add_subcommand("check", "TRR consistency on random descendant correlators");
    check->add_option("theory", theory, "r,h,m")->required();
    check->add_option("--max-dim", o.max_dim);
    check->add_option("--samples", o.samples);
    check->add_option("--seed", o.seed);

    auto* compare = app.add_subcommand("compare", "Graph-sum comparison with the boundary-forgetful theory");
    compare->add_option("theory", theory, "r,0,m")->required();
    compare->add_option("--max-dim", o.max_dim);
    compare->add_flag("--primary-only", o.primary_only);

    int k = 0;
    std::vector<int> D;
    auto* graphs = app.add_subcommand("graphs", "List comparison graphs");
    graphs->add_option("--boundary", k, "Number of boundary points")->check(CLI::NonNegativeNumber);
    graphs->add_option("descendants", D, "One descendant power per internal point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        CacheLock lock(o.cache);
        if (*eval) return cmd_eval(o, keys);
        if (*table) return cmd_table(o, theory);
        if (*check) return cmd_check(o, theory);
        if (*compare) return cmd_compare(o, theory);
        if (*graphs) return cmd_graphs(k, D);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    return 1;
}
