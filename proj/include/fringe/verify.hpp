#pragma once

#include "fringe/law.hpp"
#include "fringe/model.hpp"
#include "fringe/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fringe {

struct UnsupportedCheck : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Check {
    std::string name;
    nlohmann::json theoretical;
    nlohmann::json empirical;
    std::string metric;  // "TV", "chi2", "z-score", "rel-err", "abs-err"
    double value = 0;
    double threshold = 0;
    bool pass = false;
    std::string note;

    nlohmann::json to_json() const;
};

struct VerificationReport {
    std::string model;
    std::int64_t n = 0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<Check> checks;

    bool pass() const;
    const Check& at(const std::string& name) const;
    nlohmann::json to_json() const;
};

struct VerifyOptions {
    int threads = 0;           // 0: OpenMP default
    bool serial = false;       // use the serial reference loop
    double tv_threshold = 0.02;
    double chi2_alpha = 1e-3;  // reject when p < chi2_alpha
    bool chi2 = true;          // also require the chi-square test on pmf checks
    long fringe_kmax = 20;     // support used for fringe-size comparisons
    long sin_samples = 200000; // Monte Carlo size when a law has no closed form
};

// Check names understood by run_verification.
std::vector<std::string> check_names();

// Per-replication summary; produced in parallel, reduced serially in rep order.
struct RepSummary {
    TreeStats stats;
    // conditional laws of restricted statistics given the tree (normalized weights)
    std::map<std::string, std::vector<double>> restricted;
};

RepSummary summarize(const ModelSpec& spec, const SimTree& tree, bool restricted_leaf, bool restricted_key);

// Grow `reps` trees of weight n with streams make_rng(seed, rep).
std::vector<RepSummary> simulate_reps(const ModelSpec& spec, std::int64_t n, int reps, std::uint64_t seed,
                                      bool restricted_leaf, bool restricted_key, int threads = 0);
std::vector<RepSummary> simulate_reps_serial(const ModelSpec& spec, std::int64_t n, int reps, std::uint64_t seed,
                                             bool restricted_leaf, bool restricted_key);

VerificationReport run_verification(const ModelSpec& spec, std::int64_t n, int reps, std::uint64_t seed,
                                    const std::vector<std::string>& checks, const VerifyOptions& opt = {});
// Same, from precomputed summaries.
VerificationReport verify_summaries(const ModelSpec& spec, std::int64_t n, std::uint64_t seed,
                                    const std::vector<RepSummary>& reps, const std::vector<std::string>& checks,
                                    const VerifyOptions& opt = {});

// --- brute-force oracle ----------------------------------------------------

// Statistics: "leaves", "protected2", "joint" (encoded as leaves * 100 + protected2).
constexpr long kJointBase = 100;
constexpr int kOracleMaxN = 9;

// Exact law at n keys, enumerating all n! insertion orders into a search tree.
LawTable exact_oracle(const ModelSpec& spec, int n, const std::string& statistic);
// The same statistic read off a simulated tree.
long oracle_statistic(const SimTree& tree, const std::string& statistic);

// Counts of the statistic over `reps` simulated trees of weight n. Streams are per block of
// reps (not per rep) since these trees are tiny and seeding would dominate.
std::map<long, std::int64_t> simulate_statistic(const ModelSpec& spec, int n, std::int64_t reps, std::uint64_t seed,
                                                const std::string& statistic, int threads = 0);
// Chi-square of simulated counts against the exact oracle law.
ChiSquare oracle_chi_square(const ModelSpec& spec, int n, std::int64_t reps, std::uint64_t seed,
                            const std::string& statistic = "joint", int threads = 0);

}  // namespace fringe
