#include "fringe/dist.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <cmath>

namespace fringe {

namespace {

bool npi(const Rational& x) { return is_nonpositive_integer(x); }
bool pos_int(const Rational& x) { return is_integer(x) && x > 0; }

bool listed_case(const Rational& a, const Rational& b, const Rational& c) {
    if (a > 0 && b > 0 && c > a + b) return true;
    for (int s = 0; s < 2; ++s) {
        const Rational& x = s ? b : a;
        const Rational& y = s ? a : b;
        if (npi(x) && y > 0 && c < x + 1) return true;
        if (npi(x) && y < x + 1 && c > 0) return true;
    }
    return false;
}

long to_long(const Rational& x) { return static_cast<long>(numer(x).convert_to<long long>()); }

// Gamma(x + n) / Gamma(x) for integer n (possibly negative).
Rational gamma_shift(const Rational& x, long n) {
    if (n >= 0) return rising(x, static_cast<unsigned>(n));
    return 1 / rising(x + n, static_cast<unsigned>(-n));
}

}  // namespace

HGParams::HGParams(Rational a, Rational b, Rational c) : a_(a), b_(b), c_(c) {
    if (listed_case(a, b, c)) return;
    // c in Z<=0 beyond a (or b): shift to X' + n + 1.
    if (npi(c)) {
        long n = -to_long(c);
        for (int s = 0; s < 2; ++s) {
            const Rational& x = s ? b : a;
            if (npi(x) && x < c) {
                HGParams inner(a + n + 1, b + n + 1, Rational(n + 2));
                shift_ = n + 1 + inner.shift_;
                return;
            }
        }
    }
    throw InvalidParameters("HG(" + to_string(a) + "," + to_string(b) + ";" + to_string(c) +
                            ") is not a recognised hypergeometric law");
}

std::optional<long> HGParams::max_support() const {
    std::optional<long> r;
    for (const Rational* x : {&a_, &b_}) {
        if (npi(*x)) {
            long m = -to_long(*x);
            if (!r || m < *r) r = m;
        }
    }
    return r;
}

std::string HGParams::str() const {
    return "HG(" + to_string(a_) + "," + to_string(b_) + ";" + to_string(c_) + ")";
}

namespace {

HGParams unshifted(const HGParams& p) {
    if (p.shift() == 0) return p;
    long n = -to_long(p.c());
    return unshifted(HGParams(p.a() + n + 1, p.b() + n + 1, Rational(n + 2)));
}

// Unnormalized weights (a)_k (b)_k / ((c)_k k!) for k = 0..K.
std::vector<Rational> raw_terms(const HGParams& p, long K) {
    std::vector<Rational> u;
    Rational t = 1;
    for (long k = 0; k <= K; ++k) {
        u.push_back(t);
        if (k == K) break;
        t *= (p.a() + k) * (p.b() + k) / ((p.c() + k) * (k + 1));
    }
    return u;
}

// Normalizing constant for the unbounded case (i), when it is rational.
std::optional<Rational> exact_constant(const HGParams& p) {
    const Rational &a = p.a(), &b = p.b(), &c = p.c();
    if (pos_int(b)) {
        long bn = to_long(b);
        return gamma_shift(c - a - b, bn) / gamma_shift(c - b, bn);
    }
    if (pos_int(a)) {
        long an = to_long(a);
        return gamma_shift(c - a - b, an) / gamma_shift(c - a, an);
    }
    return std::nullopt;
}

double log_constant(const HGParams& p) {
    double a = to_double(p.a()), b = to_double(p.b()), c = to_double(p.c());
    return std::lgamma(c - a) + std::lgamma(c - b) - std::lgamma(c) - std::lgamma(c - a - b);
}

}  // namespace

bool hg_pmf_is_exact(const HGParams& p) {
    HGParams q = unshifted(p);
    return q.max_support().has_value() || exact_constant(q).has_value();
}

Rational hg_pmf(const HGParams& p, long k) {
    if (k < 0) return 0;
    if (p.shift() > 0) return hg_pmf(unshifted(p), k - p.shift());
    if (auto K = p.max_support()) {
        if (k > *K) return 0;
        auto u = raw_terms(p, *K);
        Rational s = 0;
        for (auto& x : u) s += x;
        return u[k] / s;
    }
    auto C = exact_constant(p);
    if (!C) throw InvalidParameters(p.str() + ": normalizing constant is not rational");
    Rational t = *C;
    for (long i = 0; i < k; ++i) t *= (p.a() + i) * (p.b() + i) / ((p.c() + i) * (i + 1));
    return t;
}

double hg_pmf_float(const HGParams& p, long k) {
    if (k < 0) return 0;
    if (p.shift() > 0) return hg_pmf_float(unshifted(p), k - p.shift());
    if (p.max_support()) return to_double(hg_pmf(p, k));
    double a = to_double(p.a()), b = to_double(p.b()), c = to_double(p.c());
    double kk = static_cast<double>(k);
    double l = log_constant(p) + std::lgamma(a + kk) - std::lgamma(a) + std::lgamma(b + kk) -
               std::lgamma(b) - std::lgamma(c + kk) + std::lgamma(c) - std::lgamma(kk + 1);
    return std::exp(l);
}

LawTable hg_law(const HGParams& p, double tol, long max_k) {
    LawTable t;
    t.label = p.str();
    long sh = p.shift();
    HGParams q = unshifted(p);
    if (auto K = q.max_support()) {
        auto u = raw_terms(q, *K);
        Rational s = 0;
        for (auto& x : u) s += x;
        for (long k = 0; k <= *K; ++k)
            if (u[k] != 0) t.push(k + sh, Rational(u[k] / s));
        return t;
    }
    auto C = exact_constant(q);
    double mass = 0;
    if (C) {
        Rational pk = *C;
        for (long k = 0; k <= max_k && mass < 1 - tol; ++k) {
            t.push(k + sh, pk);
            mass += t.p.back();
            pk *= (q.a() + k) * (q.b() + k) / ((q.c() + k) * (k + 1));
        }
    } else {
        double a = to_double(q.a()), b = to_double(q.b()), c = to_double(q.c());
        double pk = std::exp(log_constant(q));
        for (long k = 0; k <= max_k && mass < 1 - tol; ++k) {
            t.push(k + sh, pk);
            mass += pk;
            pk *= (a + k) * (b + k) / ((c + k) * (k + 1));
        }
    }
    return t;
}

std::optional<Rational> hg_factorial_moment(const HGParams& p, unsigned m) {
    HGParams q = unshifted(p);
    long sh = p.shift();
    if (auto K = q.max_support()) {
        Rational s = 0;
        for (long k = 0; k <= *K; ++k) {
            Rational f = 1;
            for (unsigned i = 0; i < m; ++i) f *= (k + sh - static_cast<long>(i));
            s += f * hg_pmf(q, k);
        }
        return s;
    }
    if (sh > 0) {
        // (x+s)_m = sum_j C(m,j) (s)_{m-j} (x)_j for falling factorials
        Rational s = 0;
        for (unsigned j = 0; j <= m; ++j) {
            auto fj = hg_factorial_moment(q, j);
            if (!fj) return std::nullopt;
            Rational fall = 1;
            for (unsigned i = 0; i < m - j; ++i) fall *= (sh - static_cast<long>(i));
            s += Rational(factorial(m), factorial(j) * factorial(m - j)) * fall * *fj;
        }
        return s;
    }
    Rational d = q.c() - q.a() - q.b();
    if (Rational(m) >= d) return std::nullopt;
    return rising(q.a(), m) * rising(q.b(), m) / rising(d - m, m);
}

std::optional<Rational> hg_mean(const HGParams& p) { return hg_factorial_moment(p, 1); }

std::optional<Rational> hg_variance(const HGParams& p) {
    auto m1 = hg_factorial_moment(p, 1);
    auto m2 = hg_factorial_moment(p, 2);
    if (!m1 || !m2) return std::nullopt;
    return *m2 + *m1 - *m1 * *m1;
}

PowerTail hg_tail(const HGParams& p) {
    if (npi(p.a()) || npi(p.b()) || p.shift() != 0)
        throw InvalidParameters(p.str() + ": bounded support has no power tail");
    double a = to_double(p.a()), b = to_double(p.b()), c = to_double(p.c());
    double l = std::lgamma(c - a) + std::lgamma(c - b) - std::lgamma(a) - std::lgamma(b) -
               std::lgamma(c - a - b);
    return {std::exp(l), a + b - c - 1};
}

BirthRates BirthRates::explicit_list(std::vector<Rational> r) {
    if (r.empty() || r[0] <= 0) throw InvalidParameters("birth rates need lambda_0 > 0");
    for (auto& x : r)
        if (x < 0) throw InvalidParameters("birth rates must be non-negative");
    BirthRates b;
    b.kind = Kind::Explicit;
    b.rates = std::move(r);
    return b;
}

BirthRates BirthRates::linear(Rational chi, Rational rho) {
    if (rho <= 0) throw InvalidParameters("linear rates need rho > 0");
    if (chi < 0 && !is_integer(rho / -chi))
        throw InvalidParameters("linear rates with chi < 0 need rho/|chi| integral");
    BirthRates b;
    b.kind = Kind::Linear;
    b.chi = chi;
    b.rho = rho;
    return b;
}

BirthRates BirthRates::weights(std::function<Rational(unsigned long)> f) {
    if (f(0) <= 0) throw InvalidParameters("weights need w_0 > 0");
    BirthRates b;
    b.kind = Kind::Weights;
    b.fn = std::move(f);
    return b;
}

Rational BirthRates::rate(unsigned long k) const {
    switch (kind) {
        case Kind::Explicit:
            return k < rates.size() ? rates[k] : Rational(0);
        case Kind::Linear: {
            Rational r = chi * Rational(static_cast<long long>(k)) + rho;
            return r > 0 ? r : Rational(0);
        }
        case Kind::Weights:
            return fn(k);
    }
    return 0;
}

LawTable birth_stopped_law(const BirthRates& r, const Rational& alpha, double tol, long max_k,
                           bool exact) {
    if (alpha <= 0) throw InvalidParameters("alpha must be positive");
    LawTable t;
    if (r.kind == BirthRates::Kind::Linear) {
        if (r.chi == 0)
            t.label = "Geo(" + to_string(alpha / (alpha + r.rho)) + ")";
        else
            t.label = "HG(" + to_string(r.rho / r.chi) + ",1;" + to_string((r.rho + alpha) / r.chi + 1) + ")";
    } else {
        t.label = "stopped-birth";
    }
    double mass = 0;
    if (exact) {
        Rational surv = 1;
        for (long k = 0; k <= max_k; ++k) {
            Rational lam = r.rate(static_cast<unsigned long>(k));
            if (lam == 0) {
                t.push(k, surv);
                break;
            }
            t.push(k, Rational(surv * alpha / (lam + alpha)));
            mass += t.p.back();
            surv *= lam / (lam + alpha);
            if (mass >= 1 - tol) break;
        }
    } else {
        double a = to_double(alpha), surv = 1;
        for (long k = 0; k <= max_k; ++k) {
            double lam = to_double(r.rate(static_cast<unsigned long>(k)));
            if (lam == 0) {
                t.push(k, surv);
                break;
            }
            t.push(k, surv * a / (lam + a));
            mass += t.p.back();
            surv *= lam / (lam + a);
            if (mass >= 1 - tol) break;
        }
    }
    return t;
}

double birth_marginal(double chi, double rho, double t, long k) {
    if (k < 0) return 0;
    if (t <= 0) return k == 0 ? 1.0 : 0.0;
    if (chi > 0) {
        boost::math::negative_binomial_distribution<double> d(rho / chi, std::exp(-chi * t));
        return boost::math::pdf(d, static_cast<double>(k));
    }
    if (chi < 0) {
        double n = std::round(rho / -chi);
        if (k > n) return 0;
        boost::math::binomial_distribution<double> d(n, -std::expm1(chi * t));
        return boost::math::pdf(d, static_cast<double>(k));
    }
    boost::math::poisson_distribution<double> d(rho * t);
    return boost::math::pdf(d, static_cast<double>(k));
}

double birth_mean(double chi, double rho, double x0, double t) {
    if (chi == 0) return rho * t + x0;
    return (rho / chi + x0) * std::exp(chi * t) - rho / chi;
}

Rational order_stat_laplace(unsigned m, unsigned k, const Rational& theta) {
    if (k < 1 || k > m) throw std::invalid_argument("order_stat_laplace: need 1 <= k <= m");
    if (theta <= -Rational(m - k + 1)) throw std::invalid_argument("order_stat_laplace: theta out of range");
    Rational r = 1;
    for (unsigned i = m - k + 1; i <= m; ++i) r *= Rational(i) / (i + theta);
    return r;
}

double order_stat_density(unsigned m, unsigned k, double x) {
    if (k < 1 || k > m) throw std::invalid_argument("order_stat_density: need 1 <= k <= m");
    if (x < 0) return 0;
    double lc = std::lgamma(m + 1.0) - std::lgamma(m - k + 1.0) - std::lgamma(static_cast<double>(k));
    double v = lc - (m - k + 1.0) * x;
    if (k > 1) v += (k - 1.0) * std::log(-std::expm1(-x));
    return std::exp(v);
}

}  // namespace fringe
