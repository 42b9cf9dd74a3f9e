#include "closed_ext.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ospin {

void ClosedValueTable::add(const Key& key, const Rational& value, const std::string& source) {
    if (key.sector != Sector::ClosedExt) throw DomainError("closed table entry is not a closed-extended key");
    auto g = closed_gate(key);
    if (!g.admissible)
        throw DomainError("closed table entry " + to_string(key) + " fails the gate: " + g.reason);
    auto name = to_string(key);
    auto it = entries.find(name);
    if (it != entries.end()) {
        if (it->second.value != value)
            throw ConsistencyError("conflicting closed table values for " + name + ": " +
                                   to_fraction(it->second.value) + " (" + it->second.source + ") vs " +
                                   to_fraction(value) + " (" + source + ")");
        return;
    }
    if (key.l() == 3 && value != 1)
        throw ConsistencyError("closed table entry " + name + " = " + to_fraction(value) +
                               " disagrees with the 3-point normalization 1");
    entries.emplace(name, TableEntry{value, source});
}

void ClosedValueTable::merge(const ClosedValueTable& other) {
    for (const auto& [name, e] : other.entries) add(parse_key(name), e.value, e.source);
}

ClosedValueTable parse_table(const std::string& text, const std::string& source) {
    ClosedValueTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError(source + ": expected '<key> = <num>/<den>'", lineno);
        Key key;
        Rational v;
        try {
            key = parse_key(line.substr(0, eq));
            v = parse_fraction(line.substr(eq + 3));
        } catch (const std::exception& e) {
            throw ParseError(source + ": " + e.what(), lineno);
        }
        try {
            t.add(key, v, source + ":" + std::to_string(lineno));
        } catch (const DomainError& e) {
            throw ParseError(source + ": " + e.what(), lineno);
        }
    }
    return t;
}

ClosedValueTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open closed table " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str(), path);
}

std::vector<std::pair<Rational, Key>> string_reduce(const Key& key) {
    if (key.sector != Sector::ClosedExt) throw DomainError("string reduction needs a closed-extended key");
    if (key.l() < 3) throw DomainError("string reduction needs at least 3 insertions");
    auto zero = std::find(key.internal.begin(), key.internal.end(), Insertion{0, 0});
    if (zero == key.internal.end()) throw DomainError("string reduction needs a (0,0) insertion");
    Key base = key;
    base.internal.erase(base.internal.begin() + (zero - key.internal.begin()));
    std::vector<std::pair<Rational, Key>> out;
    for (std::size_t i = 0; i < base.internal.size(); ++i) {
        if (base.internal[i].desc == 0) continue;
        Key child = base;
        child.internal[i].desc -= 1;
        out.emplace_back(Rational(1), canonicalize(child));
    }
    return out;
}

ClosedOutcome ClosedOracle::eval(const Key& key) const {
    auto name = to_string(key);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = memo_.find(name);
        if (it != memo_.end()) return it->second;
    }
    auto out = eval_uncached(key);
    if (!out.known && strict_)
        throw UnknownValueError("closed-extended value unknown: " + out.unknown_key);
    std::lock_guard<std::mutex> lock(mu_);
    memo_.emplace(name, out);
    return out;
}

ClosedOutcome ClosedOracle::eval_uncached(const Key& key) const {
    ClosedOutcome out;
    auto g = closed_gate(key);
    if (!g.admissible) {
        out.known = true;
        out.value = 0;
        return out;
    }
    if (key.l() == 3) {  // admissible 3-point keys are primary
        out.known = true;
        out.value = 1;
        return out;
    }
    bool has_string = std::find(key.internal.begin(), key.internal.end(), Insertion{0, 0}) != key.internal.end();
    if (has_string) {
        out.known = true;
        out.value = 0;
        for (const auto& [coef, child] : string_reduce(key)) {
            auto c = eval(child);
            if (!c.known) return c;
            out.value += coef * c.value;
        }
        return out;
    }
    auto it = table_.entries.find(to_string(key));
    if (it != table_.entries.end()) {
        out.known = true;
        out.value = it->second.value;
        return out;
    }
    out.unknown_key = to_string(key);
    return out;
}

} // namespace ospin
