#pragma once

#include "fringe/law.hpp"
#include "fringe/rational.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fringe {

struct InvalidParameters : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parameters of the general hypergeometric law HG(a,b;c), P(X=k) ~ (a)_k (b)_k / ((c)_k k!).
// Construction succeeds only for the known existence cases (see README).
class HGParams {
public:
    HGParams(Rational a, Rational b, Rational c);
    const Rational& a() const { return a_; }
    const Rational& b() const { return b_; }
    const Rational& c() const { return c_; }
    // Largest support point, or nullopt for unbounded support.
    std::optional<long> max_support() const;
    // X = X' + shift with X' ~ HG(a',b';c'); nonzero only for c in Z<=0 with a < c.
    long shift() const { return shift_; }
    std::string str() const;

private:
    Rational a_, b_, c_;
    long shift_ = 0;
};

// Exact pmf; throws InvalidParameters when the normalizing constant is not rational.
Rational hg_pmf(const HGParams& p, long k);
double hg_pmf_float(const HGParams& p, long k);
bool hg_pmf_is_exact(const HGParams& p);
// Table until cumulative mass >= 1 - tol or k = max_k.
LawTable hg_law(const HGParams& p, double tol = 1e-9, long max_k = 1000000);

// E (X)_m (falling factorial); nullopt means the moment is infinite.
std::optional<Rational> hg_factorial_moment(const HGParams& p, unsigned m);
std::optional<Rational> hg_mean(const HGParams& p);
std::optional<Rational> hg_variance(const HGParams& p);

struct PowerTail {
    double constant;
    double exponent;
};
// pmf(k) ~ constant * k^exponent; throws for bounded support.
PowerTail hg_tail(const HGParams& p);

// Birth rates lambda_0, lambda_1, ... of a pure birth process started at 0.
struct BirthRates {
    enum class Kind { Explicit, Linear, Weights };
    Kind kind = Kind::Linear;
    std::vector<Rational> rates;                 // Explicit: lambda_k = 0 beyond the list
    Rational chi = 0, rho = 1;                   // Linear: lambda_k = chi k + rho
    std::function<Rational(unsigned long)> fn;   // Weights

    static BirthRates explicit_list(std::vector<Rational> r);
    static BirthRates linear(Rational chi, Rational rho);
    static BirthRates weights(std::function<Rational(unsigned long)> f);
    Rational rate(unsigned long k) const;
};

// Law of X_tau for tau ~ Exp(alpha) independent of the birth process.
LawTable birth_stopped_law(const BirthRates& r, const Rational& alpha, double tol = 1e-9,
                           long max_k = 1000000, bool exact = true);
// P(X_t = k) for linear rates started at 0.
double birth_marginal(double chi, double rho, double t, long k);
double birth_mean(double chi, double rho, double x0, double t);

// E exp(-theta V_{m,k}), V_{m,k} the k-th smallest of m iid Exp(1).
Rational order_stat_laplace(unsigned m, unsigned k, const Rational& theta);
double order_stat_density(unsigned m, unsigned k, double x);

}  // namespace fringe
