#include "fringe/exp_poly.hpp"

#include <boost/multiprecision/mpfr.hpp>
#include <json.hpp>

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace fringe {

using Float50 = boost::multiprecision::mpfr_float_50;

ExpPolynomial ExpPolynomial::constant(const Rational& c) { return monomial(c, 0, 0); }

ExpPolynomial ExpPolynomial::monomial(const Rational& c, unsigned tpow, unsigned rate) {
    ExpPolynomial p;
    p.add_term(c, tpow, rate);
    return p;
}

Rational ExpPolynomial::coef(unsigned tpow, unsigned rate) const {
    auto it = terms_.find({rate, tpow});
    return it == terms_.end() ? Rational(0) : it->second;
}

unsigned ExpPolynomial::max_rate() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first.first;
}

unsigned ExpPolynomial::min_rate() const {
    return terms_.empty() ? 0 : terms_.begin()->first.first;
}

unsigned ExpPolynomial::max_tpow() const {
    unsigned j = 0;
    for (const auto& [k, c] : terms_) j = std::max(j, k.second);
    return j;
}

void ExpPolynomial::add_term(const Rational& c, unsigned tpow, unsigned rate) {
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace({rate, tpow}, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

ExpPolynomial ep_add(const ExpPolynomial& a, const ExpPolynomial& b) {
    ExpPolynomial r = a;
    for (const auto& [k, c] : b.terms()) r.add_term(c, k.second, k.first);
    return r;
}

ExpPolynomial ep_neg(const ExpPolynomial& a) { return ep_scale(a, Rational(-1)); }

ExpPolynomial ep_sub(const ExpPolynomial& a, const ExpPolynomial& b) { return ep_add(a, ep_neg(b)); }

ExpPolynomial ep_scale(const ExpPolynomial& a, const Rational& s) {
    ExpPolynomial r;
    if (s == 0) return r;
    for (const auto& [k, c] : a.terms()) r.add_term(c * s, k.second, k.first);
    return r;
}

ExpPolynomial ep_mul(const ExpPolynomial& a, const ExpPolynomial& b) {
    ExpPolynomial r;
    for (const auto& [ka, ca] : a.terms())
        for (const auto& [kb, cb] : b.terms())
            r.add_term(ca * cb, ka.second + kb.second, ka.first + kb.first);
    return r;
}

ExpPolynomial ep_pow(const ExpPolynomial& a, unsigned m) {
    ExpPolynomial result = ExpPolynomial::constant(1);
    ExpPolynomial base = a;
    while (m) {
        if (m & 1u) result = ep_mul(result, base);
        m >>= 1;
        if (m) base = ep_mul(base, base);
    }
    return result;
}

namespace {

BigInt binom(unsigned n, unsigned k) {
    BigInt r = 1;
    for (unsigned i = 0; i < k; ++i) {
        r *= n - i;
        r /= i + 1;
    }
    return r;
}

// t^j e^{-a t} * t^i e^{-b t}, accumulated into out with weight w.
void convolve_monomials(unsigned j, unsigned a, unsigned i, unsigned b, const Rational& w,
                        ExpPolynomial& out) {
    if (a == b) {
        Rational c = w * Rational(factorial(j) * factorial(i), factorial(i + j + 1));
        out.add_term(c, i + j + 1, a);
        return;
    }
    // e^{-bt} int_0^t s^j (t-s)^i e^{-cs} ds with c = a - b, expanding (t-s)^i and using
    // int_0^t s^n e^{-cs} ds = n!/c^{n+1} - e^{-ct} sum_q n!/(q! c^{n+1-q}) t^q.
    Rational c = Rational(static_cast<long>(a)) - static_cast<long>(b);
    std::vector<Rational> cpow(i + j + 2);
    cpow[0] = 1;
    for (std::size_t k = 1; k < cpow.size(); ++k) cpow[k] = cpow[k - 1] * c;
    for (unsigned r = 0; r <= i; ++r) {
        Rational outer = w * Rational(binom(i, r));
        if (r % 2) outer = -outer;
        unsigned n = j + r;
        BigInt nf = factorial(n);
        out.add_term(outer * Rational(nf) / cpow[n + 1], i - r, b);
        BigInt qf = 1;
        for (unsigned q = 0; q <= n; ++q) {
            if (q > 0) qf *= q;
            out.add_term(-outer * Rational(nf, qf) / cpow[n + 1 - q], i - r + q, a);
        }
    }
}

}  // namespace

ExpPolynomial ep_convolve(const ExpPolynomial& a, const ExpPolynomial& b) {
    ExpPolynomial r;
    for (const auto& [ka, ca] : a.terms())
        for (const auto& [kb, cb] : b.terms())
            convolve_monomials(ka.second, ka.first, kb.second, kb.first, ca * cb, r);
    return r;
}

ExpPolynomial ep_derivative(const ExpPolynomial& a) {
    ExpPolynomial r;
    for (const auto& [k, c] : a.terms()) {
        auto [rate, j] = k;
        if (j > 0) r.add_term(c * j, j - 1, rate);
        if (rate > 0) r.add_term(-c * rate, j, rate);
    }
    return r;
}

Rational ep_at_zero(const ExpPolynomial& a) {
    Rational s = 0;
    for (const auto& [k, c] : a.terms())
        if (k.second == 0) s += c;
    return s;
}

Rational ep_laplace(const ExpPolynomial& a, const Rational& theta) {
    Rational s = 0;
    for (const auto& [k, c] : a.terms()) {
        auto [rate, j] = k;
        Rational d = theta + static_cast<long>(rate);
        if (d <= 0) throw std::domain_error("ep_laplace: transform diverges (theta + rate <= 0)");
        Rational p = 1;
        for (unsigned q = 0; q <= j; ++q) p *= d;
        s += c * Rational(factorial(j)) / p;
    }
    return s;
}

double ep_eval(const ExpPolynomial& a, double t) {
    if (t < 0) throw std::domain_error("ep_eval: t must be non-negative");
    Float50 tt(t);
    Float50 s = 0;
    for (const auto& [k, c] : a.terms()) {
        auto [rate, j] = k;
        Float50 term(c);
        term *= pow(tt, j) * exp(-Float50(rate) * tt);
        s += term;
    }
    return s.convert_to<double>();
}

std::string ep_to_json(const ExpPolynomial& a) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, c] : a.terms())
        arr.push_back({{"c", to_string(c)}, {"j", k.second}, {"a", k.first}});
    return arr.dump();
}

ExpPolynomial ep_from_json(const std::string& text) {
    auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw std::invalid_argument("exp-polynomial JSON must be an array");
    ExpPolynomial p;
    for (const auto& e : arr) {
        long j = e.at("j").get<long>(), a = e.at("a").get<long>();
        if (j < 0 || a < 0) throw std::invalid_argument("negative tpow or rate");
        p.add_term(parse_rational(e.at("c").get<std::string>()), static_cast<unsigned>(j),
                   static_cast<unsigned>(a));
    }
    return p;
}

}  // namespace fringe
