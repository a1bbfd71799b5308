#include "fringe/rational.hpp"

#include <stdexcept>

namespace fringe {

std::string to_string(const Rational& r) {
    BigInt q = denom(r);
    if (q == 1) return numer(r).str();
    return numer(r).str() + "/" + q.str();
}

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty rational");
    const std::string s = text[0] == '+' ? text.substr(1) : text;
    if (s.empty() || s[0] == '+' || s[0] == '-' && s.size() > 1 && s[1] == '+')
        throw std::invalid_argument("malformed rational '" + text + "'");
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(BigInt(s));
        BigInt p(s.substr(0, slash));
        BigInt q(s.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
        return Rational(p, q);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("malformed rational '" + s + "'");
    }
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

BigInt factorial(unsigned n) {
    BigInt f = 1;
    for (unsigned i = 2; i <= n; ++i) f *= i;
    return f;
}

Rational harmonic(unsigned n) {
    Rational h = 0;
    for (unsigned i = 1; i <= n; ++i) h += rat(1, i);
    return h;
}

Rational rising(const Rational& x, unsigned n) {
    Rational r = 1;
    for (unsigned i = 0; i < n; ++i) r *= x + i;
    return r;
}

bool is_integer(const Rational& r) { return denom(r) == 1; }

bool is_nonpositive_integer(const Rational& r) { return is_integer(r) && r <= 0; }

}  // namespace fringe
