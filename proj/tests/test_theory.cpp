#include <doctest.h>

#include "fringe/theory.hpp"

#include <algorithm>
#include <cmath>

using namespace fringe;

namespace {

const std::vector<std::string> kSpecs = {"rrt",   "bst",   "pa:linear:1,1", "pa:linear:-1,3", "mary:3",  "emst:3",
                                         "mst:3", "mst:4", "mstgen:2,1",    "mstgen:3,1",     "pyramid", "pa:linear:1/2,1"};

Rational exact_mean(const LawTable& t) {
    Rational s = 0;
    for (std::size_t i = 0; i < t.exact.size(); ++i) s += t.exact[i] * t.support[i];
    return s;
}

Rational exact_mass(const LawTable& t) {
    Rational s = 0;
    for (auto& q : t.exact) s += q;
    return s;
}

}  // namespace

TEST_CASE("height and saturation constants") {
    CHECK(gamma_height(parse_model("bst")).gamma.value == doctest::Approx(4.311070).epsilon(1e-6));
    CHECK(std::abs(gamma_saturation(parse_model("bst")).gamma.value - 0.37336) < 1e-4);
    CHECK(std::abs(gamma_height(parse_model("rrt")).gamma.value - std::exp(1.0)) < 1e-10);
    auto pyr = rate_functions(parse_model("pyramid"));
    CHECK(std::abs(pyr.alpha.value - (std::sqrt(5.0) - 1) / 2) < 1e-12);
}

TEST_CASE("defining equation residuals") {
    for (unsigned m = 3; m <= 10; ++m) {
        auto spec = parse_model("mst:" + std::to_string(m));
        auto g = gamma_height(spec), s = gamma_saturation(spec);
        CAPTURE(m);
        CHECK(g.gamma.source == "solved");
        CHECK(std::abs(gamma_residual(spec, g.theta)) < 1e-10);
        CHECK(std::abs(gamma_residual(spec, s.theta)) < 1e-10);
    }
    for (const auto& name : kSpecs) {
        auto spec = parse_model(name);
        CAPTURE(name);
        auto g = gamma_height(spec);
        if (g.gamma.source == "solved") CHECK(std::abs(gamma_residual(spec, g.theta)) < 1e-10);
    }
}

TEST_CASE("ordering of the depth scales") {
    for (const auto& name : kSpecs) {
        CAPTURE(name);
        auto r = rate_functions(parse_model(name));
        double b = 1 / r.beta.value;
        CHECK(r.gamma_minus.gamma.value <= r.a_bar_i.value + 1e-12);
        CHECK(r.a_bar_i.value < b);
        CHECK(b < r.gamma.gamma.value);
        CHECK(r.a_bar_minus <= r.gamma_minus.gamma.value);
        CHECK(height_constant(r.spec()) == doctest::Approx(r.gamma.gamma.value / r.alpha.value));
        CHECK(saturation_constant(r.spec()) == doctest::Approx(r.gamma_minus.gamma.value / r.alpha.value));
    }
}

TEST_CASE("rate functions") {
    for (const auto& name : kSpecs) {
        CAPTURE(name);
        auto spec = parse_model(name);
        auto r = rate_functions(spec);
        double b = 1 / r.beta.value, g = r.gamma.gamma.value;
        // the typical depth ratio is where the hat transform reaches alpha
        CHECK(r.alpha_hat_star(b) == doctest::Approx(r.alpha.value).epsilon(1e-7));
        for (double x : {0.3 * b, 0.8 * b, 1.2 * b, (b + g) / 2}) CHECK(r.alpha_hat_star(x) < r.alpha.value);
        // zero at gamma, positive below
        CHECK(std::abs(r.alpha_star(g)) < 1e-7);
        CHECK(r.alpha_star(b) > 0);
        CHECK(r.alpha_star(0) == doctest::Approx(r.alpha.value));
        CHECK_THROWS_AS(r.alpha_star(g * 1.01), std::domain_error);
        CHECK_THROWS_AS(r.alpha_hat_star(g * 1.01), std::domain_error);
        CHECK_THROWS_AS(r.alpha_star(-1), std::domain_error);
        CHECK_THROWS_AS(r.alpha_check_star(1), std::domain_error);
        // concavity: inf of affine functions
        for (double x : {0.2 * g, 0.5 * g, 0.7 * g}) {
            double h = 0.05 * g;
            CHECK(r.alpha_star(x - h) + r.alpha_star(x + h) <= 2 * r.alpha_star(x) + 1e-9);
            CHECK(r.alpha_hat_star(x - h) + r.alpha_hat_star(x + h) <= 2 * r.alpha_hat_star(x) + 1e-9);
        }
        if (auto c = r.alpha_hat_star_closed(b)) {
            for (double x : {0.1 * b, 0.5 * b, b, 1.5 * b, 0.99 * g})
                CHECK(*r.alpha_hat_star_closed(x) == doctest::Approx(r.alpha_hat_star(x)).epsilon(1e-8));
        }
        // below a_i, the tilde transform is linear in x
        double mu0 = mu_hat(spec, 0);
        if (std::isfinite(mu0) && r.a_bar_i.value > 0)
            for (double x : {0.25, 0.5, 1.0})
                CHECK(r.alpha_tilde_star(x * r.a_bar_i.value) ==
                      doctest::Approx(x * r.a_bar_i.value * std::log(mu0)).epsilon(1e-8));
        if (r.A < 0) CHECK(std::abs(r.alpha_check_star(-r.gamma_minus.gamma.value)) < 1e-7);
        CHECK(r.alpha_of_zeta(0) == doctest::Approx(r.alpha.value).epsilon(1e-10));
        CHECK(r.alpha_of_zeta(1) < r.alpha.value);
    }
}

TEST_CASE("depth and path length constants") {
    auto bst = depth_and_pathlength(parse_model("bst"));
    CHECK(*bst.depth.exact == 2);
    CHECK(*bst.pathlength.exact == 2);
    auto rrt = depth_and_pathlength(parse_model("rrt"));
    CHECK(*rrt.depth.exact == 1);
    for (const auto& name : kSpecs) {
        auto spec = parse_model(name);
        auto r = rate_functions(spec);
        CHECK(depth_and_pathlength(spec).depth.value == doctest::Approx(1 / (r.alpha.value * r.beta.value)));
    }
}

TEST_CASE("degree laws have mean one") {
    for (const auto& name : kSpecs) {
        CAPTURE(name);
        auto spec = parse_model(name);
        auto law = degree_law(spec);
        if (spec.arity() && spec.family != Family::Pyramid) {
            REQUIRE(law.is_exact());
            CHECK(exact_mass(law) == 1);
            CHECK(exact_mean(law) == 1);
        } else {
            // truncated power or geometric tail
            CHECK(law.mass() == doctest::Approx(1).epsilon(1e-8));
            CHECK(law.mean() == doctest::Approx(1).epsilon(1e-3));
        }
    }
    auto rrt = degree_law(parse_model("rrt"), {1e-15, 60});
    for (long k = 0; k < 20; ++k) CHECK(rrt.exact[k] == rat(1, 1LL << (k + 1)));
    CHECK(degree_law(parse_model("bst")).exact == std::vector<Rational>{rat(1, 3), rat(1, 3), rat(1, 3)});
    CHECK(degree_law(parse_model("mst:3")).exact == std::vector<Rational>{rat(1, 2), rat(1, 6), rat(1, 6), rat(1, 6)});
    auto pyr = degree_law(parse_model("pyramid"));
    double s5 = std::sqrt(5.0);
    CHECK(pyr.prob(0) == doctest::Approx((3 - s5) / 2));
    CHECK(pyr.prob(1) == doctest::Approx(s5 - 2));
    CHECK(pyr.prob(2) == doctest::Approx((3 - s5) / 2));
    auto pa = degree_law(parse_model("pa:weights:k+1"), {1e-6, 100000});
    CHECK(pa.prob(0) == doctest::Approx(2.0 / 3).epsilon(1e-6));
}

TEST_CASE("fringe size laws") {
    auto rrt = fringe_size_law(parse_model("rrt"), {1e-12, 50});
    for (long k = 1; k < 40; ++k) CHECK(rrt.exact[k - 1] == rat(1, k * (k + 1)));
    CHECK(exact_mass(rrt) == rat(50, 51));
    auto bst = fringe_size_law(parse_model("bst"), {1e-12, 50});
    for (long k = 1; k < 40; ++k) CHECK(bst.prob(k) == doctest::Approx(2.0 / ((k + 1) * (k + 2))));
    auto mst = fringe_size_law(parse_model("mst:3"), {1e-12, 50});
    for (long k = 1; k < 40; ++k) CHECK(mst.prob(k) == doctest::Approx(2.0 / ((k + 1) * (k + 2))));
    for (const char* s : {"rrt", "bst", "pa:linear:1,1", "pa:linear:1/2,1", "mst:3", "emst:4"}) {
        CAPTURE(s);
        auto law = fringe_size_law(parse_model(s), {1e-12, 2000});
        CHECK(law.mass() == doctest::Approx(1).epsilon(2e-3));
        CHECK(law.mass() <= 1 + 1e-12);
    }
    CHECK_THROWS_AS(fringe_size_law(parse_model("pyramid")), NoClosedForm);
}

TEST_CASE("key count laws") {
    for (const char* s : {"emst:3", "mst:3", "mst:5", "mstgen:2,1", "mstgen:3,1"}) {
        CAPTURE(s);
        auto spec = parse_model(s);
        auto law = key_count_law(spec);
        CHECK(exact_mass(law) == 1);
        // keys per node is the node weight
        CHECK(law.mean() == doctest::Approx(m_psi(spec).value));
    }
    CHECK(key_count_law(parse_model("mst:3")).exact == std::vector<Rational>{rat(1, 3), rat(2, 3)});
    CHECK_THROWS_AS(key_count_law(parse_model("bst")), std::invalid_argument);
}

TEST_CASE("restricted laws") {
    auto mst = restricted_laws(parse_model("mst:3"));
    CHECK(mst.at("key_owner_keys").exact == std::vector<Rational>{rat(1, 5), rat(4, 5)});
    CHECK(mst.at("key_owner_outdegree").exact ==
          std::vector<Rational>{rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)});
    // the printed random-leaf law, 4/((j+1)(j+2)(j+3)), indexed from j = k - 1
    auto bst = restricted_laws(parse_model("bst"), {1e-9, 200}).at("empty_slot_parent_size");
    for (std::size_t i = 0; i < bst.support.size(); ++i) {
        long j = bst.support[i] - 1;
        CHECK(bst.exact[i] == rat(4, (j + 1) * (j + 2) * (j + 3)));
    }
    auto rrt = restricted_laws(parse_model("rrt"));
    CHECK(rrt.at("leaf_parent_size").mass() == doctest::Approx(1).epsilon(1e-4));
    // 1/i tail, cut at i = 2000
    CHECK(rrt.at("leaf_parent_nonleaves").mass() == doctest::Approx(1).epsilon(2e-3));
    auto p = rrt.at("leaf_parent_nonleaves").p;
    CHECK(std::is_sorted(p.rbegin(), p.rend()));
    CHECK(rrt_leaf_nonleaf_prob(1) == doctest::Approx(6 - 2 * std::exp(1.0)).epsilon(1e-10));
    CHECK(rrt_leaf_nonleaf_prob(2) == doctest::Approx(11 - 4 * std::exp(1.0)).epsilon(1e-9));
    CHECK_THROWS_AS(restricted_laws(parse_model("pyramid")), UnsupportedModel);
}

TEST_CASE("fragmentation constants") {
    auto f = fragmentation_constants();
    CHECK(f.beta == 0.5);
    CHECK(f.p_size1 == 0.25);
    CHECK(std::abs(f.p_size2 - 0.17464) < 1e-5);
    CHECK(f.degree.prob(0) == doctest::Approx(0.25));
    CHECK(f.degree.prob(1) == doctest::Approx(0.5));
    CHECK(f.child_degree[0] + f.child_degree[1] + f.child_degree[2] == doctest::Approx(1));
}
