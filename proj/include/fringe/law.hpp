#pragma once

#include "fringe/rational.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fringe {

// A discrete law on integer support points. Float probabilities are always
// present; exact rationals are carried alongside when known.
struct LawTable {
    std::string label;
    std::vector<long> support;
    std::vector<double> p;
    std::vector<Rational> exact;  // empty or same length as p

    bool is_exact() const { return !exact.empty(); }
    double prob(long k) const;
    double mass() const;
    double mean() const;
    void push(long k, const Rational& q);
    void push(long k, double q);

    nlohmann::json to_json() const;
    static LawTable from_json(const nlohmann::json& j);
};

LawTable law_from_counts(const std::vector<std::int64_t>& counts, const std::string& label);

// Total variation distance. With kmax >= 0, all mass above kmax is merged into one bin.
double tv_distance(const LawTable& a, const LawTable& b, long kmax = -1);

struct ChiSquare {
    double statistic = 0;
    int dof = 0;
    double p_value = 1;
};
// Goodness of fit of observed counts (indexed by outcome) against probabilities over the
// same outcomes. Adjacent bins are pooled until every expected count is at least 5.
ChiSquare chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs);

}  // namespace fringe
