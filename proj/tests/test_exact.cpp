#include <doctest.h>

#include "fringe/exp_poly.hpp"
#include "fringe/rational.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace fringe;

TEST_CASE("rational text round trip") {
    for (const char* s : {"0", "7", "-3", "11/30", "-1249/8100", "54731/1021020"})
        CHECK(to_string(parse_rational(s)) == s);
    CHECK(parse_rational("4/6") == rat(2, 3));
    CHECK(parse_rational("+5") == rat(5));
    CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational("abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
}

TEST_CASE("rational helpers") {
    CHECK(factorial(0) == 1);
    CHECK(factorial(10) == 3628800);
    CHECK(harmonic(4) == rat(25, 12));
    CHECK(rising(rat(1, 2), 3) == rat(15, 8));
    CHECK(rising(rat(-2), 3) == 0);
    CHECK(rising(rat(5), 0) == 1);
    CHECK(is_integer(rat(4, 2)));
    CHECK_FALSE(is_integer(rat(1, 2)));
    CHECK(is_nonpositive_integer(rat(-3)));
    CHECK(is_nonpositive_integer(rat(0)));
    CHECK_FALSE(is_nonpositive_integer(rat(1)));
    CHECK(to_double(rat(1, 3)) == doctest::Approx(1.0 / 3));
    // lowest terms with a positive denominator
    Rational r = rat(6, -4);
    CHECK(numer(r) == -3);
    CHECK(denom(r) == 2);
}

TEST_CASE("exp-polynomial algebra") {
    auto e1 = ExpPolynomial::monomial(1, 0, 1);
    CHECK(ep_mul(e1, e1) == ExpPolynomial::monomial(1, 0, 2));
    CHECK(ep_pow(e1, 3) == ExpPolynomial::monomial(1, 0, 3));
    CHECK(ep_pow(e1, 0) == ExpPolynomial::constant(1));
    CHECK(ep_sub(e1, e1).empty());
    CHECK(ep_add(e1, ep_neg(e1)).empty());
    CHECK(ep_scale(e1, 0).empty());

    // e^{-t} * e^{-t} = t e^{-t};  e^{-t} * e^{-2t} = e^{-t} - e^{-2t}
    CHECK(ep_convolve(e1, e1) == ExpPolynomial::monomial(1, 1, 1));
    auto e2 = ExpPolynomial::monomial(1, 0, 2);
    CHECK(ep_convolve(e1, e2) == ep_sub(e1, e2));

    // d/dt t^2 e^{-3t} = 2t e^{-3t} - 3 t^2 e^{-3t}
    auto d = ep_derivative(ExpPolynomial::monomial(1, 2, 3));
    CHECK(d.coef(1, 3) == 2);
    CHECK(d.coef(2, 3) == -3);
    CHECK(d.size() == 2);

    auto p = ep_add(ExpPolynomial::monomial(rat(3, 2), 2, 1), ExpPolynomial::constant(rat(-1, 7)));
    CHECK(p.max_rate() == 1);
    CHECK(p.min_rate() == 0);
    CHECK(p.max_tpow() == 2);
    CHECK(ep_at_zero(p) == rat(-1, 7));
}

TEST_CASE("laplace transform of monomials") {
    // int t^j e^{-(a+theta) t} = j! / (a+theta)^{j+1}
    for (unsigned j = 0; j < 5; ++j)
        for (unsigned a = 0; a < 4; ++a) {
            Rational theta = rat(1, 2);
            Rational want = Rational(factorial(j));
            for (unsigned i = 0; i <= j; ++i) want /= rat(a) + theta;
            CHECK(ep_laplace(ExpPolynomial::monomial(1, j, a), theta) == want);
        }
    CHECK_THROWS_AS(ep_laplace(ExpPolynomial::constant(1), 0), std::domain_error);
    CHECK(ep_laplace(ExpPolynomial::monomial(1, 0, 1), -1 + rat(1, 2)) == 2);
}

TEST_CASE("convolution agrees with quadrature") {
    using boost::math::quadrature::gauss_kronrod;
    auto a = ep_add(ExpPolynomial::monomial(2, 1, 1), ExpPolynomial::monomial(rat(-1, 3), 0, 2));
    auto b = ep_add(ExpPolynomial::monomial(1, 2, 3), ExpPolynomial::constant(rat(1, 5)));
    auto c = ep_convolve(a, b);
    for (double t : {0.3, 1.0, 2.5, 6.0}) {
        double q = gauss_kronrod<double, 31>::integrate(
            [&](double s) { return ep_eval(a, s) * ep_eval(b, t - s); }, 0.0, t, 10, 1e-13);
        CHECK(ep_eval(c, t) == doctest::Approx(q).epsilon(1e-10));
    }
    // commutative and bilinear
    CHECK(ep_convolve(a, b) == ep_convolve(b, a));
    CHECK(ep_convolve(ep_add(a, b), b) == ep_add(c, ep_convolve(b, b)));
}

TEST_CASE("exp-polynomial json") {
    auto p = ep_add(ExpPolynomial::monomial(rat(-11, 30), 3, 4), ExpPolynomial::monomial(rat(2), 0, 1));
    auto text = ep_to_json(p);
    CHECK(ep_from_json(text) == p);
    CHECK(ep_to_json(ep_from_json(text)) == text);
    CHECK(ep_to_json(ExpPolynomial{}) == "[]");
    CHECK(ep_eval(p, 0.0) == doctest::Approx(2.0));
}
