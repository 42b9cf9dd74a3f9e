#include "core.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace ospin {

Rational parse_fraction(const std::string& text) {
    auto slash = text.find('/');
    std::string num = text.substr(0, slash);
    std::string den = slash == std::string::npos ? "1" : text.substr(slash + 1);
    auto digits = [](const std::string& s, bool allow_sign) {
        if (s.empty()) return false;
        std::size_t i = (allow_sign && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
        if (i == s.size()) return false;
        for (; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return true;
    };
    if (!digits(num, true) || !digits(den, false))
        throw std::invalid_argument("not a fraction: '" + text + "'");
    mpz_class n(num[0] == '+' ? num.substr(1) : num), d(den);
    if (d == 0) throw std::invalid_argument("zero denominator: '" + text + "'");
    Rational q(n, d);
    q.canonicalize();
    return q;
}

Rational factorial(long n) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
    return Rational(f);
}

Rational binomial(long n, long k) {
    if (k < 0 || n < 0 || k > n) return 0;
    mpz_class c;
    mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return Rational(c);
}

void TheoryParams::validate() const {
    if (r < 2) throw DomainError("r must be at least 2, got " + std::to_string(r));
    if (h < 0 || h > (r - 2) / 2)
        throw DomainError("h must lie in [0, " + std::to_string((r - 2) / 2) + "], got " +
                          std::to_string(h));
    if (m < 1 || m % 2 == 0) throw DomainError("m must be odd and positive, got " + std::to_string(m));
}

TheoryConstants derive_constants(const TheoryParams& p) {
    p.validate();
    TheoryConstants c{};
    c.m_min = p.r - 2 - 2 * p.h;
    c.N = (2 * p.r) / (p.r - c.m_min);
    c.b = (p.r - c.m_min) * c.N - p.r - 2;
    c.c = (p.r - 2 - c.b) / 2;
    return c;
}

bool is_legal_boundary_twist(const TheoryParams& p, int b) {
    int j2 = p.r - 2 - b;
    return j2 >= 0 && j2 % 2 == 0 && j2 / 2 <= p.h;
}

int Key::total_desc() const {
    int s = 0;
    for (const auto& i : internal) s += i.desc;
    return s;
}

Key canonicalize(Key key) {
    std::sort(key.internal.begin(), key.internal.end());
    std::sort(key.boundary.begin(), key.boundary.end());
    return key;
}

void validate_key(const Key& key) {
    const auto& p = key.params;
    p.validate();
    int minus_ones = 0;
    for (const auto& ins : key.internal) {
        if (ins.desc < 0) throw DomainError("negative descendant power");
        int lo = key.sector == Sector::ClosedExt ? -1 : 0;
        if (ins.twist < lo || ins.twist > p.r - 1)
            throw DomainError("internal twist " + std::to_string(ins.twist) + " out of range");
        if (ins.twist == -1) ++minus_ones;
    }
    if (minus_ones > 1) throw DomainError("closed-extended key has more than one twist -1");
    switch (key.sector) {
    case Sector::ClosedExt:
        if (!key.boundary.empty()) throw DomainError("closed-extended key with boundary insertions");
        break;
    case Sector::Open:
        for (int b : key.boundary)
            if (!is_legal_boundary_twist(p, b))
                throw DomainError("boundary twist " + std::to_string(b) + " is not a legal level-" +
                                  std::to_string(p.h) + " state");
        break;
    case Sector::Bct:
        if (p.h != 0) throw DomainError("boundary-forgetful keys need h=0");
        for (int b : key.boundary)
            if (b != p.r - 2) throw DomainError("boundary-forgetful keys need boundary twist r-2");
        break;
    }
}

std::string sector_tag(Sector s) {
    switch (s) {
    case Sector::Open: return "o";
    case Sector::ClosedExt: return "ce";
    case Sector::Bct: return "bct";
    }
    return "?";
}

std::string to_string(const Key& raw) {
    Key key = canonicalize(raw);
    std::ostringstream out;
    out << sector_tag(key.sector) << "|r=" << key.params.r << ",h=" << key.params.h
        << ",m=" << key.params.m << "|I=";
    if (key.internal.empty()) out << '-';
    for (std::size_t i = 0; i < key.internal.size(); ++i)
        out << (i ? ";" : "") << key.internal[i].twist << ':' << key.internal[i].desc;
    out << "|B=";
    if (key.boundary.empty()) out << '-';
    for (std::size_t i = 0; i < key.boundary.size(); ++i) out << (i ? "," : "") << key.boundary[i];
    return out.str();
}

namespace {

class KeyParser {
public:
    explicit KeyParser(const std::string& s) : s_(s) {}

    Key parse() {
        Key key;
        if (eat("ce|")) key.sector = Sector::ClosedExt;
        else if (eat("bct|")) key.sector = Sector::Bct;
        else if (eat("o|")) key.sector = Sector::Open;
        else fail("expected sector 'o', 'ce' or 'bct'");
        expect("r=");
        key.params.r = integer();
        expect(",h=");
        key.params.h = integer();
        expect(",m=");
        key.params.m = integer();
        expect("|I=");
        if (!empty_list()) {
            do {
                Insertion ins;
                ins.twist = integer();
                expect(":");
                ins.desc = integer();
                key.internal.push_back(ins);
            } while (eat(";"));
        }
        expect("|B=");
        if (!empty_list()) {
            do key.boundary.push_back(integer());
            while (eat(","));
        }
        if (pos_ != s_.size()) fail("trailing characters");
        key = canonicalize(key);
        validate_key(key);  // range violations stay domain errors
        return key;
    }

private:
    [[noreturn]] void fail(const std::string& what) { throw ParseError("bad key: " + what, pos_); }

    bool eat(const char* lit) {
        std::string l(lit);
        if (s_.compare(pos_, l.size(), l) == 0) {
            pos_ += l.size();
            return true;
        }
        return false;
    }

    void expect(const char* lit) {
        if (!eat(lit)) fail(std::string("expected '") + lit + "'");
    }

    // "-" not followed by a digit denotes an empty list.
    bool empty_list() {
        if (pos_ < s_.size() && s_[pos_] == '-' &&
            (pos_ + 1 == s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
            ++pos_;
            return true;
        }
        return false;
    }

    int integer() {
        std::size_t start = pos_;
        if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
        std::size_t digits = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == digits) {
            pos_ = start;
            fail("expected integer");
        }
        if (pos_ - digits > 6) {
            pos_ = start;
            fail("integer too large");
        }
        return std::stoi(s_.substr(start, pos_ - start));
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

Key parse_key(const std::string& text) { return KeyParser(text).parse(); }

GateResult open_gate(const Key& key) {
    const auto& p = key.params;
    long sa = 0, sb = 0, sd = 0;
    for (const auto& i : key.internal) {
        sa += i.twist;
        sd += i.desc;
    }
    for (int b : key.boundary) sb += b;
    long num = 2 * sa + sb - (p.r - 2);
    GateResult g;
    if (num < 0 || num % p.r != 0) {
        g.reason = "rank (2*" + std::to_string(sa) + "+" + std::to_string(sb) + "-" +
                   std::to_string(p.r - 2) + ")/" + std::to_string(p.r) + " is not a non-negative integer";
        return g;
    }
    long e = num / p.r;
    g.rank = e;
    long k = key.k(), l = key.l();
    if ((e - 1 - k) % 2 != 0) {
        g.reason = "parity: rank " + std::to_string(e) + " and k=" + std::to_string(k);
        return g;
    }
    if (p.m * e + 2 * sd != k + 2 * l - 3) {
        g.reason = "dimension: m*e+2*sum(d)=" + std::to_string(p.m * e + 2 * sd) + " but 2l+k-3=" +
                   std::to_string(k + 2 * l - 3);
        return g;
    }
    g.admissible = true;
    return g;
}

GateResult closed_gate(const Key& key) {
    const auto& p = key.params;
    long sa = 0, sd = 0;
    int minus_ones = 0;
    for (const auto& i : key.internal) {
        sa += i.twist;
        sd += i.desc;
        if (i.twist == -1) ++minus_ones;
    }
    if (minus_ones > 1) throw DomainError("closed-extended key has more than one twist -1");
    GateResult g;
    long n = key.l();
    if (n < 3) {
        g.reason = "unstable: n=" + std::to_string(n);
        return g;
    }
    long num = sa - (p.r - 2);
    if (num < 0 || num % p.r != 0) {
        g.reason = "rank (" + std::to_string(sa) + "-" + std::to_string(p.r - 2) + ")/" +
                   std::to_string(p.r) + " is not a non-negative integer";
        return g;
    }
    g.rank = num / p.r;
    if (p.m * g.rank + sd != n - 3) {
        g.reason = "dimension: m*D+sum(d)=" + std::to_string(p.m * g.rank + sd) + " but n-3=" +
                   std::to_string(n - 3);
        return g;
    }
    g.admissible = true;
    return g;
}

GateResult gate(const Key& key) {
    return key.sector == Sector::ClosedExt ? closed_gate(key) : open_gate(key);
}

Vanishing vanishing_check(const Key& key) {
    Vanishing v;
    auto g = open_gate(key);
    if (!g.admissible) {
        v.zero = true;
        v.rule = "gate";
        v.detail = g.reason;
        return v;
    }
    int l = key.l(), k = key.k();
    if (l >= 1 && 2 * l + k >= 4) {
        for (const auto& ins : key.internal) {
            if (ins.desc == 0 && ins.twist <= key.params.h) {
                v.zero = true;
                v.rule = "small-internal";
                v.detail = "primary internal twist " + std::to_string(ins.twist) + " <= h";
                return v;
            }
        }
    }
    if (key.params.m > 1 && k % 2 == 0) {
        v.zero = true;
        v.rule = "even-boundary";
        v.detail = "m>1 and k=" + std::to_string(k) + " even";
        return v;
    }
    return v;
}

Key make_open(const TheoryParams& p, std::vector<Insertion> internal, std::vector<int> boundary) {
    Key k;
    k.sector = Sector::Open;
    k.params = p;
    k.internal = std::move(internal);
    k.boundary = std::move(boundary);
    return canonicalize(std::move(k));
}

Key make_closed(const TheoryParams& p, std::vector<Insertion> internal) {
    Key k;
    k.sector = Sector::ClosedExt;
    k.params = p;
    k.internal = std::move(internal);
    return canonicalize(std::move(k));
}

} // namespace ospin
