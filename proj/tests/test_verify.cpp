#include <doctest.h>

#include "fringe/rng.hpp"
#include "fringe/theory.hpp"
#include "fringe/verify.hpp"

#include <cmath>

using namespace fringe;

namespace {

Rational exact_mass(const LawTable& t) {
    Rational s = 0;
    for (auto& q : t.exact) s += q;
    return s;
}

std::vector<std::int64_t> subtree_sizes(const SimTree& t) {
    std::vector<std::int64_t> size(t.size(), 1);
    for (int v = int(t.size()) - 1; v > 0; --v) size[t.nodes[v].parent] += size[v];
    return size;
}

}  // namespace

TEST_CASE("serial and parallel reports are byte-identical") {
    auto spec = parse_model("bst");
    std::vector<std::string> checks{"degree", "fringe_size", "protected:2", "height", "depth", "maximal_clades",
                                    "restricted:leaf"};
    VerifyOptions par;
    par.threads = 3;
    VerifyOptions ser;
    ser.serial = true;
    auto a = run_verification(spec, 3000, 7, 99, checks, par).to_json().dump();
    auto b = run_verification(spec, 3000, 7, 99, checks, ser).to_json().dump();
    auto c = run_verification(spec, 3000, 7, 99, checks, par).to_json().dump();
    CHECK(a == b);
    CHECK(a == c);
    auto d = run_verification(spec, 3000, 7, 100, checks, par).to_json().dump();
    CHECK(a != d);
}

TEST_CASE("summaries do not depend on the thread count") {
    auto spec = parse_model("mst:3");
    auto x = simulate_reps(spec, 2000, 5, 3, false, true, 1);
    auto y = simulate_reps(spec, 2000, 5, 3, false, true, 4);
    auto z = simulate_reps_serial(spec, 2000, 5, 3, false, true);
    REQUIRE(x.size() == 5);
    for (int r = 0; r < 5; ++r) {
        CHECK(x[r].stats.degree_hist == y[r].stats.degree_hist);
        CHECK(x[r].stats.degree_hist == z[r].stats.degree_hist);
        CHECK(x[r].stats.total_path_length == z[r].stats.total_path_length);
        CHECK(x[r].restricted == z[r].restricted);
    }
}

TEST_CASE("a modest run passes the pmf checks") {
    auto rep = run_verification(parse_model("bst"), 20000, 10, 1, {"degree", "fringe_size", "protected:2"});
    CHECK(rep.pass());
    CHECK(rep.at("degree").metric == "TV");
    CHECK(rep.at("degree").value < 0.01);
    CHECK(rep.at("protected:2").metric == "z-score");
    auto j = rep.to_json();
    CHECK(j["model"] == "bst");
    CHECK(j["checks"].size() == 3);
}

TEST_CASE("bad requests") {
    auto bst = parse_model("bst");
    CHECK_THROWS_AS(run_verification(bst, 100, 2, 1, {"nonsense"}), UnsupportedCheck);
    CHECK_THROWS_AS(run_verification(bst, 100, 2, 1, {"restricted:key"}), UnsupportedCheck);
    CHECK_THROWS_AS(run_verification(parse_model("pyramid"), 100, 2, 1, {"protected:2"}), UnsupportedCheck);
    CHECK_THROWS_AS(run_verification(bst, 1, 2, 1, {"degree"}), std::invalid_argument);
    CHECK_THROWS_AS(run_verification(bst, 100, 0, 1, {"degree"}), std::invalid_argument);
    CHECK_THROWS_AS(exact_oracle(bst, kOracleMaxN + 1, "leaves"), std::invalid_argument);
    CHECK_THROWS_AS(exact_oracle(parse_model("rrt"), 3, "leaves"), UnsupportedModel);
    CHECK_THROWS_AS(exact_oracle(bst, 3, "height"), std::invalid_argument);
}

TEST_CASE("oracle small cases by hand") {
    auto bst = parse_model("bst");
    // three keys: the two middle-first orders give a cherry, the rest a path
    auto j3 = exact_oracle(bst, 3, "joint");
    CHECK(j3.support == std::vector<long>{1 * kJointBase + 1, 2 * kJointBase});
    CHECK(j3.exact == std::vector<Rational>{rat(2, 3), rat(1, 3)});
    CHECK(exact_oracle(bst, 1, "leaves").exact == std::vector<Rational>{1});
    // m = 3 with two keys is one node
    auto m2 = exact_oracle(parse_model("mst:3"), 2, "joint");
    CHECK(m2.support == std::vector<long>{kJointBase});
    // with three keys the root is full and has one child
    auto m3 = exact_oracle(parse_model("mst:3"), 3, "protected2");
    CHECK(m3.support == std::vector<long>{0});
}

TEST_CASE("oracle against known means") {
    auto bst = parse_model("bst");
    for (int n = 2; n <= 8; ++n) {
        auto law = exact_oracle(bst, n, "leaves");
        CHECK(exact_mass(law) == 1);
        Rational mean = 0;
        for (std::size_t i = 0; i < law.support.size(); ++i) mean += law.exact[i] * law.support[i];
        // E leaves = (n+1)/3
        CHECK(mean == rat(n + 1, 3));
        // probabilities are multiples of 1/n!
        for (auto& q : law.exact) CHECK(BigInt(factorial(n) % denom(q)) == 0);
    }
}

TEST_CASE("oracle statistic matches the tree statistics") {
    auto rng = make_rng(12);
    for (const char* s : {"bst", "mst:3"}) {
        auto spec = parse_model(s);
        for (int i = 0; i < 50; ++i) {
            auto t = grow(spec, StopRule::weight(7), rng);
            auto st = stats(t, 4, spec.arity());
            CHECK(oracle_statistic(t, "leaves") == st.degree_hist[0]);
            CHECK(oracle_statistic(t, "protected2") == st.protected_count(2));
            CHECK(oracle_statistic(t, "joint") == st.degree_hist[0] * kJointBase + st.protected_count(2));
        }
    }
}

TEST_CASE("simulated small trees follow the oracle") {
    for (auto [s, n] : {std::pair{"bst", 5}, {"bst", 6}, {"mst:3", 5}}) {
        CAPTURE(s);
        auto chi = oracle_chi_square(parse_model(s), n, 40000, 5, "joint");
        CHECK(chi.p_value > 1e-3);
        CHECK(chi.dof > 0);
    }
    auto a = simulate_statistic(parse_model("bst"), 5, 10000, 8, "joint", 1);
    auto b = simulate_statistic(parse_model("bst"), 5, 10000, 8, "joint", 3);
    CHECK(a == b);
}

TEST_CASE("sin-tree fringes match the limit fringe law") {
    auto spec = parse_model("bst");
    auto law = fringe_size_law(spec);
    auto rng = make_rng(21);
    std::vector<std::int64_t> counts(22, 0);
    const int samples = 30000;
    for (int i = 0; i < samples; ++i) {
        auto m = sample_sin_tree(spec, 1, rng);
        auto size = subtree_sizes(m.tree);
        ++counts[std::min<std::int64_t>(size[m.tree.marked], 21)];
    }
    CHECK(tv_distance(law_from_counts(counts, "sin"), law, 20) < 0.015);
}

TEST_CASE("extended fringes of a large tree match the sin-tree") {
    auto spec = parse_model("rrt");
    auto rng = make_rng(22);
    auto tree = grow(spec, StopRule::weight(100000), rng);
    std::vector<std::int64_t> emp(32, 0), sin(32, 0);
    for (int i = 0; i < 20000; ++i) {
        auto e = sample_extended_fringe(tree, 1, rng);
        if (!e.too_shallow) ++emp[std::min<std::size_t>(e.tree.size(), 31)];
        auto s = sample_sin_tree(spec, 1, rng);
        ++sin[std::min<std::size_t>(s.tree.size(), 31)];
    }
    CHECK(tv_distance(law_from_counts(emp, "tree"), law_from_counts(sin, "sin"), 30) < 0.025);
}
