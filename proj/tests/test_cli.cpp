#include <doctest.h>

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#ifndef FRINGE_BIN
#error "FRINGE_BIN must point at the CLI binary"
#endif

namespace {

struct Run {
    int code;
    std::string out;
};

// stdout only; stderr goes to a scratch file
Run run(const std::string& args) {
    std::string cmd = std::string(FRINGE_BIN) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), got);
    int st = pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

nlohmann::json parse(const Run& r) {
    REQUIRE(r.code == 0);
    return nlohmann::json::parse(r.out);
}

}  // namespace

TEST_CASE("protected") {
    CHECK(run("protected --m 3 --k 2").out == "19/140\n");
    CHECK(run("protected --m 2 --k 1 --exact").out == "2/3\n");
    CHECK(std::stod(run("protected --m 2 --k 2 --float").out) == doctest::Approx(11.0 / 30));
    CHECK(std::stod(run("protected --rrt --k 2").out) == doctest::Approx(0.5 - std::exp(-1.0)));
    CHECK(run("protected --m 1 --k 2").code == 2);
    CHECK(run("protected --m 2 --k 2 --exact --float").code == 2);
}

TEST_CASE("theory") {
    auto j = parse(run("theory --model bst --max-k 10"));
    CHECK(j["gamma"].get<double>() == doctest::Approx(4.31107).epsilon(1e-6));
    CHECK(j["laws"]["degree"]["p"][0] == "1/3");
    CHECK(j["laws"]["fringe_size"]["support"].size() <= 10);
    CHECK(j["constants"]["depth_const"]["exact"] == "2");
    auto p = parse(run("theory --model pyramid"));
    CHECK(p["laws"]["fringe_size"].is_null());
    CHECK(p["alpha"].get<double>() == doctest::Approx((std::sqrt(5.0) - 1) / 2));
    CHECK(run("theory --model nope").code == 2);
    CHECK(run("theory").code == 2);
}

TEST_CASE("height") {
    auto j = parse(run("height --model rrt"));
    CHECK(j["gamma"].get<double>() == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    auto b = parse(run("height --model mst:3"));
    CHECK(std::fabs(b["residual"].get<double>()) < 1e-10);
}

TEST_CASE("simulate is reproducible") {
    auto a = run("simulate --model mst:3 --n 800 --seed 5");
    auto b = run("simulate --model mst:3 --n 800 --seed 5");
    auto c = run("simulate --model mst:3 --n 800 --seed 6");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
    auto j = nlohmann::json::parse(a.out);
    CHECK(j["total_weight"] == 800);
    auto csv = run("simulate --model mst:3 --n 800 --seed 5 --format csv");
    CHECK(csv.out.rfind("field,index,value", 0) == 0);
    CHECK(run("simulate --model rrt --stop-time 3 --seed 1").code == 0);
    CHECK(run("simulate --model bst --n 10 --format xml").code == 2);
}

TEST_CASE("files") {
    std::string path = "cli_test_theory.json";
    std::remove(path.c_str());
    CHECK(run("theory --model rrt --max-k 5 --out " + path).code == 0);
    std::ifstream in(path);
    auto j = nlohmann::json::parse(in);
    CHECK(j["model"] == "rrt");
    std::remove(path.c_str());

    std::string dump = "cli_test_tree.txt";
    CHECK(run("simulate --model bst --n 30 --seed 2 --dump-tree " + dump).code == 0);
    std::ifstream t(dump);
    CHECK(t.good());
    std::remove(dump.c_str());
}

TEST_CASE("verify") {
    auto r = run("verify --model bst --n 3000 --reps 4 --seed 1 --checks degree,fringe_size");
    auto j = parse(r);
    CHECK(j["checks"].size() == 2);
    auto s = run("verify --model bst --n 3000 --reps 4 --seed 1 --checks degree,fringe_size --serial");
    CHECK(s.out == r.out);
    CHECK(run("verify --model bst --n 100 --reps 2 --checks nonsense").code == 2);
    CHECK(run("verify --model bst --n 100 --reps 2 --checks restricted:key").code == 2);
    // an impossible tolerance is reported as a failure through the exit code
    CHECK(run("verify --model bst --n 40 --reps 2 --checks depth").code == 1);
}

TEST_CASE("oracle") {
    auto j = parse(run("oracle --model bst --n 4"));
    CHECK(j["law"]["p"] == nlohmann::json::array({"1/3", "1/2", "1/6"}));
    auto c = parse(run("oracle --model mst:3 --n 5 --reps 20000 --seed 3"));
    CHECK(c["chi_square"]["p_value"].get<double>() > 1e-3);
    CHECK(run("oracle --model bst --n 12").code == 2);
    CHECK(run("oracle --model rrt --n 4").code == 2);
}
