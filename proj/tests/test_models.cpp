#include <doctest.h>

#include "fringe/model.hpp"
#include "fringe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace fringe;

namespace {

const std::vector<std::string> kSpecs = {"rrt",      "bst",     "pa:linear:1,1", "pa:linear:-1,3", "mary:3",
                                         "emst:3",   "mst:3",   "mst:4",         "mstgen:2,1",     "pyramid",
                                         "frag:binary-uniform", "pa:weights:k+1", "pa:weights:list:1,1,1"};

// Monte Carlo mean of sum_i exp(-theta xi_i) over sampled lives.
std::pair<double, double> mc_laplace(const ModelSpec& spec, double theta, int lives, double horizon,
                                     std::uint64_t seed) {
    auto rng = make_rng(seed);
    double s = 0, s2 = 0;
    for (int i = 0; i < lives; ++i) {
        auto life = sample_life(spec, rng, horizon);
        double x = 0;
        for (auto& c : life.children) x += std::exp(-theta * c.age);
        s += x;
        s2 += x * x;
    }
    double m = s / lives;
    return {m, std::sqrt((s2 / lives - m * m) / lives)};
}

}  // namespace

TEST_CASE("model specs parse and round trip") {
    for (const auto& s : kSpecs) {
        CAPTURE(s);
        auto spec = parse_model(s);
        CHECK(parse_model(spec.name).name == spec.name);
        CHECK(parse_model(spec.name).family == spec.family);
    }
    CHECK(parse_model("mst:3").m == 3);
    CHECK(parse_model("mstgen:2,1").ell == 1);
    CHECK(parse_model("pa:linear:1,1").chi == 1);
    CHECK(model_grammar().size() >= 10);
}

TEST_CASE("bad specs are rejected") {
    for (const char* s : {"", "tree", "mst:1", "mst:x", "mary:1", "pa:linear:1", "pa:linear:0,0", "mstgen:2",
                          "emst:", "pa:weights:", "pa:weights:k+", "frag:ternary"}) {
        CAPTURE(s);
        CHECK_THROWS_AS(parse_model(s), std::invalid_argument);
    }
}

TEST_CASE("weight expressions") {
    auto f = parse_weight_expr("2*k + log(k+1) - sqrt(4) + exp(0)");
    CHECK(f(0) == doctest::Approx(-1));
    CHECK(f(3) == doctest::Approx(6 + std::log(4.0) - 1));
    CHECK(parse_weight_expr("(k+1)^2")(2) == doctest::Approx(9));
    CHECK(parse_weight_expr("-k")(2) == doctest::Approx(-2));
    CHECK(parse_weight_expr("2^3^2")(0) == doctest::Approx(512));
    CHECK_THROWS(parse_weight_expr("k+*2"));
    CHECK_THROWS(parse_weight_expr("foo(k)"));
    CHECK_THROWS(parse_weight_expr("(k"));

    auto lin = make_weights("k+1");
    CHECK_FALSE(lin.explosive);
    CHECK(lin.slope == doctest::Approx(1).epsilon(1e-3));
    CHECK(lin(10) == doctest::Approx(11));
    CHECK(make_weights("(k+1)^2").explosive);
    CHECK_FALSE(make_weights("(k+1)^0.5").explosive);
    auto list = make_weights("list:1,2,0.5");
    CHECK(list.finite);
    CHECK(list(2) == doctest::Approx(0.5));
    CHECK(list(3) == 0);
}

TEST_CASE("malthusian parameters") {
    CHECK(malthusian(parse_model("rrt")).value == doctest::Approx(1));
    CHECK(malthusian(parse_model("bst")).value == doctest::Approx(1));
    CHECK(*malthusian(parse_model("bst")).exact == 1);
    CHECK(malthusian(parse_model("pyramid")).value == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-14));
    CHECK(malthusian(parse_model("pa:linear:1,1")).value == doctest::Approx(2));
    for (const auto& s : kSpecs) {
        CAPTURE(s);
        auto spec = parse_model(s);
        double a = malthusian(spec).value;
        CHECK(a > 0);
        CHECK(mu_hat(spec, a) == doctest::Approx(1).epsilon(1e-10));
        CHECK(a > abscissa(spec));
        // mu_hat is decreasing, with a matching derivative
        double h = 1e-5;
        double fd = (mu_hat(spec, a + h) - mu_hat(spec, a - h)) / (2 * h);
        CHECK(mu_hat_prime(spec, a) < 0);
        CHECK(mu_hat_prime(spec, a) == doctest::Approx(fd).epsilon(1e-5));
        if (auto e = mu_hat_exact(spec, rat(5, 2))) CHECK(to_double(*e) == doctest::Approx(mu_hat(spec, 2.5)));
        if (auto e = mu_hat_prime_exact(spec, rat(5, 2)))
            CHECK(to_double(*e) == doctest::Approx(mu_hat_prime(spec, 2.5)));
    }
}

TEST_CASE("node weights") {
    CHECK(*m_psi(parse_model("mst:3")).exact == rat(5, 3));
    CHECK(m_psi(parse_model("rrt")).value == doctest::Approx(1));
    CHECK(beta(parse_model("bst")).value == doctest::Approx(0.5));
    CHECK(beta(parse_model("rrt")).value == doctest::Approx(1));
}

TEST_CASE("sampled lives reproduce the Laplace transform") {
    for (const auto& s : kSpecs) {
        CAPTURE(s);
        auto spec = parse_model(s);
        double a = malthusian(spec).value;
        for (double theta : {a, a + 1}) {
            // linear weights give e^{chi t} children by age t; cut those lives early
            bool pa = spec.family == Family::LinearPA || spec.family == Family::GeneralPA;
            auto [m, se] = mc_laplace(spec, theta, pa ? 4000 : 40000, pa ? 9.0 : 14.0, 7);
            CHECK(std::abs(m - mu_hat(spec, theta)) < 4 * se + (pa ? 2e-4 : 1e-5));
        }
    }
}

TEST_CASE("life histories are well formed") {
    auto rng = make_rng(3);
    for (const auto& s : kSpecs) {
        CAPTURE(s);
        auto spec = parse_model(s);
        for (int i = 0; i < 200; ++i) {
            auto life = sample_life(spec, rng, 8.0);
            CHECK(std::is_sorted(life.children.begin(), life.children.end(),
                                 [](const ChildBirth& x, const ChildBirth& y) { return x.age < y.age; }));
            if (spec.arity()) CHECK(life.children.size() <= spec.arity());
            if (spec.family == Family::BST || spec.family == Family::MST) {
                std::set<int> slots;
                for (auto& c : life.children) slots.insert(c.slot);
                CHECK(slots.size() == life.children.size());
            }
            CHECK(life.initial_keys == spec.initial_keys());
        }
    }
}

TEST_CASE("heir index law") {
    for (const char* s : {"rrt", "bst", "mst:3", "pyramid"}) {
        auto law = heir_index_law(parse_model(s));
        CHECK(law.mass() == doctest::Approx(1).epsilon(1e-9));
    }
    // bst: both slots equally likely to be filled first
    auto b = heir_index_law(parse_model("bst"));
    CHECK(b.prob(1) == doctest::Approx(2.0 / 3));
}

TEST_CASE("ancestor lives are tilted towards early heirs") {
    auto spec = parse_model("rrt");
    auto rng = make_rng(11);
    double s = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) s += sample_ancestor_life(spec, rng, 40.0).heir_age();
    // Poisson(1) clock tilted by e^{-t}: the heir age is Exp(1)
    CHECK(s / n == doctest::Approx(1).epsilon(0.02));
}
