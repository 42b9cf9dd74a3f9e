#pragma once

#include <gmpxx.h>

#include <string>

namespace ospin {

// Exact rational backed by GMP. mpq_class keeps lowest terms and a positive
// denominator after every arithmetic operation.
using Rational = mpq_class;

// Always "num/den", integers included.
inline std::string to_fraction(const Rational& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

// Accepts "n/d" or a bare integer "n". Throws std::invalid_argument.
Rational parse_fraction(const std::string& text);

Rational factorial(long n);
Rational binomial(long n, long k);

} // namespace ospin
