#pragma once

#include "fringe/exp_poly.hpp"

#include <cstddef>
#include <stdexcept>

namespace fringe {

// Raised when the exp-polynomial recursion would exceed its term budget.
struct BlowUp : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::size_t kDefaultTermCap = 2'000'000;

// *_{i=1}^{m-1} i e^{-it}: density of the time a fresh node of an m-ary
// search tree needs to fill up.
ExpPolynomial fill_density(unsigned m);

// h_k(t) for the m-ary search tree; memoized, safe to call concurrently.
ExpPolynomial h_k(unsigned m, unsigned k, std::size_t term_cap = kDefaultTermCap);

// Limit fraction of nodes with rank >= k; computed from h_{k-1}.
Rational p_protected(unsigned m, unsigned k, std::size_t term_cap = kDefaultTermCap);
// Same quantity through 2 * Laplace(h_k, 1); kept as an independent route.
Rational p_protected_via_hk(unsigned m, unsigned k, std::size_t term_cap = kDefaultTermCap);

Rational p2_closed(unsigned m);
double p2_asymptotic(unsigned m);

// Random recursive tree: limit fraction of k-protected nodes.
double rrt_protected(unsigned k, double tol = 1e-10);
// p_k(t) of the recursive-tree recursion, evaluated numerically.
double rrt_pk(unsigned k, double t);

struct AncestorConstants {
    double bst_maximal_clade;
    double bst_no_unary_ancestor;
    double rrt_no_unary_ancestor;
};
AncestorConstants ancestor_constants();

// True iff every prime factor of the denominator of r is <= bound.
bool denominator_primes_at_most(const Rational& r, unsigned long bound);
bool denominator_prime_check(unsigned m, unsigned k);

}  // namespace fringe
