#include "fringe/law.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fringe {

double LawTable::prob(long k) const {
    auto it = std::lower_bound(support.begin(), support.end(), k);
    if (it == support.end() || *it != k) return 0.0;
    return p[it - support.begin()];
}

double LawTable::mass() const {
    double s = 0;
    for (double x : p) s += x;
    return s;
}

double LawTable::mean() const {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += support[i] * p[i];
    return s;
}

void LawTable::push(long k, const Rational& q) {
    if (!support.empty() && k <= support.back()) throw std::logic_error("LawTable support must increase");
    if (exact.size() != p.size()) throw std::logic_error("mixing exact and float entries");
    support.push_back(k);
    p.push_back(to_double(q));
    exact.push_back(q);
}

void LawTable::push(long k, double q) {
    if (!support.empty() && k <= support.back()) throw std::logic_error("LawTable support must increase");
    exact.clear();
    support.push_back(k);
    p.push_back(q);
}

nlohmann::json LawTable::to_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["support"] = support;
    nlohmann::json ps = nlohmann::json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (is_exact())
            ps.push_back(to_string(exact[i]));
        else
            ps.push_back(p[i]);
    }
    j["p"] = ps;
    return j;
}

LawTable LawTable::from_json(const nlohmann::json& j) {
    LawTable t;
    t.label = j.value("label", "");
    auto sup = j.at("support").get<std::vector<long>>();
    const auto& ps = j.at("p");
    if (ps.size() != sup.size()) throw std::invalid_argument("support/p length mismatch");
    bool exact = !ps.empty() && ps[0].is_string();
    for (std::size_t i = 0; i < sup.size(); ++i) {
        if (exact)
            t.push(sup[i], parse_rational(ps[i].get<std::string>()));
        else
            t.push(sup[i], ps[i].get<double>());
    }
    return t;
}

LawTable law_from_counts(const std::vector<std::int64_t>& counts, const std::string& label) {
    LawTable t;
    t.label = label;
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total <= 0) return t;
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] > 0) t.push(static_cast<long>(k), counts[k] / total);
    return t;
}

double tv_distance(const LawTable& a, const LawTable& b, long kmax) {
    std::map<long, double> diff;
    for (std::size_t i = 0; i < a.p.size(); ++i)
        if (kmax < 0 || a.support[i] <= kmax) diff[a.support[i]] += a.p[i];
    for (std::size_t i = 0; i < b.p.size(); ++i)
        if (kmax < 0 || b.support[i] <= kmax) diff[b.support[i]] -= b.p[i];
    double s = 0, head_a = 0, head_b = 0;
    for (auto& [k, d] : diff) s += std::fabs(d);
    if (kmax >= 0) {
        // Both laws are taken as normalized, so the lumped tail is 1 minus the head; this also
        // covers theory tables that were truncated far out in a power-law tail.
        for (std::size_t i = 0; i < a.p.size(); ++i)
            if (a.support[i] <= kmax) head_a += a.p[i];
        for (std::size_t i = 0; i < b.p.size(); ++i)
            if (b.support[i] <= kmax) head_b += b.p[i];
        s += std::fabs(std::max(0.0, 1 - head_a) - std::max(0.0, 1 - head_b));
    }
    return 0.5 * s;
}

ChiSquare chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs) {
    if (observed.size() != probs.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
    double n = 0;
    for (double o : observed) n += o;
    ChiSquare r;
    if (n <= 0) return r;
    std::vector<double> obs, expct;
    double acc_o = 0, acc_e = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        acc_o += observed[i];
        acc_e += probs[i] * n;
        if (acc_e >= 5.0) {
            obs.push_back(acc_o);
            expct.push_back(acc_e);
            acc_o = acc_e = 0;
        }
    }
    if (acc_e > 0 || acc_o > 0) {
        if (expct.empty()) {
            obs.push_back(acc_o);
            expct.push_back(acc_e);
        } else {
            obs.back() += acc_o;
            expct.back() += acc_e;
        }
    }
    r.dof = static_cast<int>(expct.size()) - 1;
    for (std::size_t i = 0; i < expct.size(); ++i) {
        if (expct[i] <= 0) {
            if (obs[i] > 0) r.statistic = INFINITY;
            continue;
        }
        double d = obs[i] - expct[i];
        r.statistic += d * d / expct[i];
    }
    if (r.dof <= 0) {
        r.p_value = std::isinf(r.statistic) ? 0.0 : 1.0;
        return r;
    }
    if (std::isinf(r.statistic)) {
        r.p_value = 0;
        return r;
    }
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

}  // namespace fringe
