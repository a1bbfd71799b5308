#include "fringe/protected.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace fringe {

ExpPolynomial fill_density(unsigned m) {
    if (m < 2) throw std::invalid_argument("m must be >= 2");
    ExpPolynomial f = ExpPolynomial::monomial(1, 0, 1);
    for (unsigned i = 2; i + 1 <= m; ++i) f = ep_convolve(f, ExpPolynomial::monomial(rat(i), 0, i));
    return f;
}

namespace {

std::mutex cache_mutex;
std::map<std::pair<unsigned, unsigned>, ExpPolynomial> h_cache;

void guard(const ExpPolynomial& p, std::size_t cap, unsigned m, unsigned k) {
    if (p.size() > cap)
        throw BlowUp("h_k recursion exceeded term cap at m=" + std::to_string(m) +
                     ", k=" + std::to_string(k));
}

// (h + e^{-t})^m - e^{-mt}
ExpPolynomial filled_power(const ExpPolynomial& h, unsigned m, std::size_t cap, unsigned k) {
    ExpPolynomial base = ep_add(h, ExpPolynomial::monomial(1, 0, 1));
    ExpPolynomial p = ep_pow(base, m);
    guard(p, cap, m, k);
    return ep_sub(p, ExpPolynomial::monomial(1, 0, m));
}

}  // namespace

ExpPolynomial h_k(unsigned m, unsigned k, std::size_t term_cap) {
    if (m < 2) throw std::invalid_argument("m must be >= 2");
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = h_cache.find({m, k});
        if (it != h_cache.end()) return it->second;
    }
    ExpPolynomial h;
    if (k == 0) {
        h = ExpPolynomial::constant(1);
        h.add_term(-1, 0, 1);
    } else {
        ExpPolynomial prev = h_k(m, k - 1, term_cap);
        h = ep_convolve(filled_power(prev, m, term_cap, k), fill_density(m));
        guard(h, term_cap, m, k);
    }
    std::lock_guard<std::mutex> lock(cache_mutex);
    h_cache.emplace(std::make_pair(m, k), h);
    return h;
}

Rational p_protected(unsigned m, unsigned k, std::size_t term_cap) {
    if (k == 0) return 1;
    ExpPolynomial prev = h_k(m, k - 1, term_cap);
    return rat(2, m) * ep_laplace(filled_power(prev, m, term_cap, k), 1);
}

Rational p_protected_via_hk(unsigned m, unsigned k, std::size_t term_cap) {
    return 2 * ep_laplace(h_k(m, k, term_cap), 1);
}

Rational p2_closed(unsigned m) {
    if (m < 2) throw std::invalid_argument("m must be >= 2");
    Rational s = 0;
    BigInt mf = factorial(m);
    for (unsigned l = 0; l < m; ++l) {
        unsigned r = m * (m - l);
        s += Rational(mf, factorial(m - l)) * Rational(factorial(r), factorial(r + l + 1));
    }
    return rat(2, m) * s;
}

double p2_asymptotic(unsigned m) {
    double x = 1.0 / m;
    return 2 * x * x * x + 2 * std::pow(x, 4) + 4 * std::pow(x, 5);
}

namespace {

constexpr double kRrtHorizon = 40.0;

// Grid values of p_k on [0, horizon] with n intervals (trapezoid cumulative integrals).
std::vector<double> rrt_grid(unsigned k, std::size_t n) {
    double h = kRrtHorizon / n;
    std::vector<double> p(n + 1, 1.0);
    for (unsigned level = 1; level <= k; ++level) {
        std::vector<double> next(n + 1);
        double integral = 0;
        next[0] = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            integral += 0.5 * h * (p[i - 1] + p[i]);
            double t = i * h;
            next[i] = std::exp(-t) * std::expm1(integral);
        }
        p.swap(next);
    }
    return p;
}

double rrt_moment(unsigned k, std::size_t n) {
    auto p = rrt_grid(k, n);
    double h = kRrtHorizon / n;
    double s = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        double w = (i == 0 || i == n) ? 0.5 : 1.0;
        s += w * p[i] * std::exp(-(i * h));
    }
    return s * h;
}

}  // namespace

double rrt_protected(unsigned k, double tol) {
    if (k == 0) return 1.0;
    if (k == 1) return 0.5;
    if (k == 2) return 0.5 - std::exp(-1.0);
    // Trapezoid error is a series in h^2, so Richardson extrapolation converges quickly.
    std::size_t n = 2560;
    double prev = rrt_moment(k, n);
    double prev_extrap = NAN;
    for (int iter = 0; iter < 12; ++iter) {
        n *= 2;
        double cur = rrt_moment(k, n);
        double extrap = (4 * cur - prev) / 3;
        if (!std::isnan(prev_extrap) && std::fabs(extrap - prev_extrap) < tol) return extrap;
        prev = cur;
        prev_extrap = extrap;
    }
    return prev_extrap;
}

double rrt_pk(unsigned k, double t) {
    if (k == 0) return 1.0;
    if (k == 1) return -std::expm1(-t);
    if (k == 2) return std::exp(std::expm1(-t)) - std::exp(-t);
    std::size_t n = 1 << 18;
    auto p = rrt_grid(k, n);
    double h = kRrtHorizon / n;
    std::size_t i = std::min<std::size_t>(n - 1, static_cast<std::size_t>(t / h));
    double f = (t - i * h) / h;
    return (1 - f) * p[i] + f * p[i + 1];
}

AncestorConstants ancestor_constants() {
    double e2 = -std::expm1(-2.0);
    return {e2 / 4, e2 / 2, -std::expm1(-1.0)};
}

bool denominator_primes_at_most(const Rational& r, unsigned long bound) {
    BigInt d = denom(r);
    for (unsigned long p = 2; p <= bound && d > 1; ++p) {
        while (d % p == 0) d /= p;
    }
    return d == 1;
}

bool denominator_prime_check(unsigned m, unsigned k) {
    unsigned long bound = 1;
    for (unsigned i = 0; i < k; ++i) bound *= m;
    return denominator_primes_at_most(p_protected(m, k), bound + 1);
}

}  // namespace fringe
