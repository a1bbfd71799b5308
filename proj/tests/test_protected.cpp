#include <doctest.h>

#include "fringe/protected.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace fringe;

TEST_CASE("printed table, small entries") {
    CHECK(p_protected(2, 2) == parse_rational("11/30"));
    CHECK(p_protected(2, 3) == parse_rational("1249/8100"));
    CHECK(p_protected(3, 2) == parse_rational("19/140"));
    CHECK(p_protected(4, 2) == parse_rational("54731/1021020"));
    CHECK(p_protected(5, 2) == parse_rational("3491/145860"));
    CHECK(p_protected(6, 2) == parse_rational("760687429/61618399920"));
    CHECK(p_protected(7, 2) == parse_rational("30706935422593/4254556530624400"));
    CHECK(p_protected(8, 2) == parse_rational("351290243384177/75964420635503400"));
}

TEST_CASE("rank zero and one") {
    for (unsigned m = 2; m <= 10; ++m) {
        CHECK(p_protected(m, 0) == 1);
        CHECK(p_protected(m, 1) == rat(2, m + 1));
    }
}

TEST_CASE("closed form for k = 2 matches the recursion") {
    for (unsigned m = 2; m <= 8; ++m) CHECK(p2_closed(m) == p_protected(m, 2));
}

TEST_CASE("two routes agree") {
    for (unsigned m = 2; m <= 4; ++m)
        for (unsigned k = 0; k <= 2; ++k) CHECK(p_protected_via_hk(m, k) == p_protected(m, k));
    CHECK(p_protected_via_hk(2, 3) == p_protected(2, 3));
}

TEST_CASE("h_k runs from 0 to 1") {
    for (unsigned m = 2; m <= 4; ++m)
        for (unsigned k = 0; k <= 2; ++k) {
            auto h = h_k(m, k);
            CHECK(ep_at_zero(h) == 0);
            CHECK(h.coef(0, 0) == 1);
            double prev = 0;
            for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
                double v = ep_eval(h, t);
                CHECK(v >= prev);
                CHECK(v <= 1);
                prev = v;
            }
        }
    // fill density integrates to one and starts at zero when m > 2
    for (unsigned m = 2; m <= 6; ++m) {
        auto f = fill_density(m);
        CHECK(ep_laplace(f, 0) == 1);
        if (m > 2) CHECK(ep_at_zero(f) == 0);
    }
}

TEST_CASE("protection fractions decrease in k and in m") {
    for (unsigned m = 2; m <= 5; ++m) {
        Rational prev = 2;
        for (unsigned k = 0; k <= 2; ++k) {
            auto p = p_protected(m, k);
            CHECK(p > 0);
            CHECK(p < prev);
            prev = p;
        }
    }
    for (unsigned m = 2; m < 8; ++m) CHECK(p_protected(m + 1, 2) < p_protected(m, 2));
}

TEST_CASE("asymptotic form of P_2(m)") {
    double prev = INFINITY;
    for (unsigned m : {4u, 8u, 16u, 24u}) {
        double ratio = to_double(p2_closed(m)) / p2_asymptotic(m);
        double err = std::abs(ratio - 1);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 0.1);
}

TEST_CASE("denominators only have small primes") {
    for (unsigned m = 2; m <= 6; ++m)
        for (unsigned k = 1; k <= 2; ++k) CHECK(denominator_prime_check(m, k));
    CHECK(denominator_prime_check(2, 3));
    CHECK(denominator_primes_at_most(rat(1, 2 * 3 * 5 * 7), 7));
    CHECK_FALSE(denominator_primes_at_most(rat(1, 11), 7));
}

TEST_CASE("term budget") {
    CHECK_THROWS_AS(h_k(5, 3, 50), BlowUp);
}

TEST_CASE("recursive tree") {
    CHECK(rrt_protected(0) == 1);
    CHECK(rrt_protected(1) == doctest::Approx(0.5));
    CHECK(rrt_protected(2) == doctest::Approx(0.5 - std::exp(-1.0)).epsilon(1e-12));
    for (double t : {0.0, 0.7, 3.0}) {
        CHECK(rrt_pk(1, t) == doctest::Approx(1 - std::exp(-t)));
        CHECK(rrt_pk(2, t) == doctest::Approx(std::exp(std::exp(-t) - 1) - std::exp(-t)));
    }
}

TEST_CASE("recursive tree, rank 3 against nested quadrature") {
    using boost::math::quadrature::gauss_kronrod;
    auto p2 = [](double s) { return std::exp(std::exp(-s) - 1) - std::exp(-s); };
    auto p3 = [&](double t) {
        double in = gauss_kronrod<double, 31>::integrate(p2, 0.0, t, 8, 1e-14);
        return std::exp(-t) * std::expm1(in);
    };
    double want = gauss_kronrod<double, 31>::integrate([&](double t) { return std::exp(-t) * p3(t); }, 0.0, 40.0,
                                                       10, 1e-12);
    CHECK(rrt_protected(3) == doctest::Approx(want).epsilon(1e-7));
    CHECK(rrt_pk(3, 2.0) == doctest::Approx(p3(2.0)).epsilon(1e-6));
    CHECK(rrt_protected(3) < rrt_protected(2));
    CHECK(rrt_protected(4) < rrt_protected(3));
}

TEST_CASE("ancestor constants") {
    auto c = ancestor_constants();
    double e2 = std::exp(-2.0);
    CHECK(c.bst_maximal_clade == doctest::Approx((1 - e2) / 4).epsilon(1e-12));
    CHECK(c.bst_no_unary_ancestor == doctest::Approx((1 - e2) / 2).epsilon(1e-12));
    CHECK(c.rrt_no_unary_ancestor == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-12));
}
