#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstdint>
#include <string>

namespace fringe {

// GMP-backed exact types. mpq values are always kept in lowest terms with a
// positive denominator, which is the invariant the rest of the code relies on.
using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

inline Rational rat(long long p, long long q = 1) { return Rational(BigInt(p), BigInt(q)); }

inline BigInt numer(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denom(const Rational& r) { return boost::multiprecision::denominator(r); }

// "p/q", or "p" when q == 1.
std::string to_string(const Rational& r);
// Accepts "p/q", "p", and optional leading sign. Throws std::invalid_argument.
Rational parse_rational(const std::string& s);
double to_double(const Rational& r);

BigInt factorial(unsigned n);
Rational harmonic(unsigned n);
// x (x+1) ... (x+n-1); empty product is 1.
Rational rising(const Rational& x, unsigned n);
bool is_integer(const Rational& r);
bool is_nonpositive_integer(const Rational& r);

}  // namespace fringe
