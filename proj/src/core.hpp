#pragma once

#include "errors.hpp"
#include "rational.hpp"

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace ospin {

struct TheoryParams {
    int r = 2;
    int h = 0;
    int m = 1;

    // Throws DomainError unless r >= 2, 0 <= h <= (r-2)/2 and m is odd and positive.
    void validate() const;
    auto operator<=>(const TheoryParams&) const = default;
};

// m_min, N, b, c of the computation strategy. All derived from (r, h).
struct TheoryConstants {
    int m_min;
    int N;
    int b;
    int c;
};

TheoryConstants derive_constants(const TheoryParams& p);

// Legal boundary twists r-2-2j for 0 <= j <= h.
bool is_legal_boundary_twist(const TheoryParams& p, int b);

// Open disks, closed-extended spheres, and the boundary-forgetful theory
// used only by the comparison module.
enum class Sector { Open, ClosedExt, Bct };

struct Insertion {
    int twist = 0;
    int desc = 0;
    auto operator<=>(const Insertion&) const = default;
};

struct Key {
    Sector sector = Sector::Open;
    TheoryParams params;
    std::vector<Insertion> internal;
    std::vector<int> boundary;

    int l() const { return static_cast<int>(internal.size()); }
    int k() const { return static_cast<int>(boundary.size()); }
    int total_desc() const;
    bool is_primary() const { return total_desc() == 0; }

    auto operator<=>(const Key&) const = default;
};

// Sorts internal by (twist, desc) and boundary ascending.
Key canonicalize(Key key);

// Checks twist ranges for the sector. Throws DomainError.
void validate_key(const Key& key);

// Bit-exact canonical form, e.g. "o|r=7,h=0,m=1|I=2:0|B=5,5,5".
std::string to_string(const Key& key);

// Inverse of to_string. The result is canonicalized and validated.
Key parse_key(const std::string& text);

std::string sector_tag(Sector s);

struct GateResult {
    bool admissible = false;
    long rank = 0;          // e for open keys, D_W for closed keys
    std::string reason;     // failed condition when inadmissible
};

// Open (and boundary-forgetful) sector: e = (2 sum a + sum b - (r-2)) / r must be
// a non-negative integer, e = 1 + k mod 2, m e + 2 sum d = k + 2l - 3.
GateResult open_gate(const Key& key);

// Closed-extended sector: D_W = (sum a - (r-2)) / r non-negative integer,
// n >= 3, m D_W + sum d = n - 3. At most one twist -1.
GateResult closed_gate(const Key& key);

GateResult gate(const Key& key);

// Moduli dimension 2l + k - 3 of an open key (ignores descendants).
inline int moduli_dim(const Key& key) { return 2 * key.l() + key.k() - 3; }

struct Vanishing {
    bool zero = false;
    std::string rule;  // "gate", "small-internal", "even-boundary"
    std::string detail;
};

// Unconditional zero rules for open keys. Never says "zero" on a key that is
// not provably zero.
Vanishing vanishing_check(const Key& key);

// Convenience builders.
Key make_open(const TheoryParams& p, std::vector<Insertion> internal, std::vector<int> boundary);
Key make_closed(const TheoryParams& p, std::vector<Insertion> internal);

} // namespace ospin
