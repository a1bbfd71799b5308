#pragma once

#include "fringe/rational.hpp"

#include <map>
#include <string>
#include <utility>

namespace fringe {

// Finite sum  sum c * t^j * exp(-a t)  with rational c and integer j, a >= 0.
// Terms are keyed by (a, j) so iteration order is the canonical (rate, tpow)
// order and zero coefficients are never stored.
class ExpPolynomial {
public:
    using Key = std::pair<unsigned, unsigned>;  // (rate, tpow)
    using Terms = std::map<Key, Rational>;

    ExpPolynomial() = default;
    static ExpPolynomial constant(const Rational& c);
    static ExpPolynomial monomial(const Rational& c, unsigned tpow, unsigned rate);

    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    Rational coef(unsigned tpow, unsigned rate) const;
    unsigned max_rate() const;
    unsigned max_tpow() const;
    unsigned min_rate() const;

    void add_term(const Rational& c, unsigned tpow, unsigned rate);

    bool operator==(const ExpPolynomial& o) const { return terms_ == o.terms_; }

private:
    Terms terms_;
};

ExpPolynomial ep_add(const ExpPolynomial& a, const ExpPolynomial& b);
ExpPolynomial ep_neg(const ExpPolynomial& a);
ExpPolynomial ep_sub(const ExpPolynomial& a, const ExpPolynomial& b);
ExpPolynomial ep_scale(const ExpPolynomial& a, const Rational& c);
ExpPolynomial ep_mul(const ExpPolynomial& a, const ExpPolynomial& b);
ExpPolynomial ep_pow(const ExpPolynomial& a, unsigned m);
// (a * b)(t) = int_0^t a(s) b(t-s) ds.
ExpPolynomial ep_convolve(const ExpPolynomial& a, const ExpPolynomial& b);
ExpPolynomial ep_derivative(const ExpPolynomial& a);
Rational ep_at_zero(const ExpPolynomial& a);
// int_0^inf e^{-theta t} a(t) dt. Throws std::domain_error if it diverges.
Rational ep_laplace(const ExpPolynomial& a, const Rational& theta);
// Evaluated in 50-digit floating point, then rounded.
double ep_eval(const ExpPolynomial& a, double t);

std::string ep_to_json(const ExpPolynomial& a);
ExpPolynomial ep_from_json(const std::string& text);

}  // namespace fringe
