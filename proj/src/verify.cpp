#include "fringe/verify.hpp"

#include "fringe/protected.hpp"
#include "fringe/theory.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fringe {

using nlohmann::json;

namespace {

constexpr int kRankMax = 4;
constexpr std::size_t kShownBins = 30;

json law_head(const LawTable& t, std::size_t bins = kShownBins) {
    json j;
    j["label"] = t.label;
    json p = json::array();
    for (std::size_t i = 0; i < t.support.size() && i < bins; ++i) p.push_back({t.support[i], t.p[i]});
    j["pmf"] = p;
    return j;
}

void add_into(std::vector<std::int64_t>& acc, const std::vector<std::int64_t>& h) {
    if (acc.size() < h.size()) acc.resize(h.size(), 0);
    for (std::size_t i = 0; i < h.size(); ++i) acc[i] += h[i];
}

void add_into(std::vector<double>& acc, const std::vector<double>& h) {
    if (acc.size() < h.size()) acc.resize(h.size(), 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) acc[i] += h[i];
}

struct MeanSe {
    double mean = 0, se = 0;
};

MeanSe mean_se(const std::vector<double>& x) {
    MeanSe r;
    if (x.empty()) return r;
    for (double v : x) r.mean += v;
    r.mean /= double(x.size());
    if (x.size() > 1) {
        double ss = 0;
        for (double v : x) ss += (v - r.mean) * (v - r.mean);
        r.se = std::sqrt(ss / double(x.size() - 1) / double(x.size()));
    }
    return r;
}

Check scalar_check(const std::string& name, double theo, double emp, const std::string& metric, double thr) {
    Check c;
    c.name = name;
    c.theoretical = theo;
    c.empirical = emp;
    c.metric = metric;
    c.threshold = thr;
    if (metric == "rel-err") c.value = std::fabs(emp - theo) / std::fabs(theo);
    else c.value = std::fabs(emp - theo);
    c.pass = c.value <= thr;
    return c;
}

// pmf comparison; counts are pooled node counts, so the chi-square test is available.
Check pmf_check(const std::string& name, const LawTable& theo, const std::vector<std::int64_t>& counts,
                const VerifyOptions& opt, long kmax = -1, bool use_chi2 = true) {
    Check c;
    c.name = name;
    c.metric = "TV";
    c.threshold = opt.tv_threshold;
    LawTable emp = law_from_counts(counts, "empirical");
    c.value = tv_distance(emp, theo, kmax);
    c.theoretical = law_head(theo);
    c.empirical = law_head(emp);
    c.pass = c.value <= c.threshold;
    if (use_chi2 && opt.chi2) {
        long top = static_cast<long>(counts.size()) - 1;
        if (kmax >= 0) top = std::min(top, kmax);
        std::vector<double> obs, prob;
        double pm = 0, om = 0, total = 0;
        for (auto v : counts) total += double(v);
        for (long k = 0; k <= top; ++k) {
            obs.push_back(double(counts[k]));
            prob.push_back(theo.prob(k));
            pm += prob.back();
            om += obs.back();
        }
        if (1 - pm > 1e-12 || total - om > 0) {
            obs.push_back(total - om);
            prob.push_back(std::max(0.0, 1 - pm));
        }
        ChiSquare cs = chi_square_gof(obs, prob);
        c.empirical["chi2"] = cs.statistic;
        c.empirical["dof"] = cs.dof;
        c.empirical["p_value"] = cs.p_value;
        if (cs.p_value < opt.chi2_alpha) {
            c.pass = false;
            c.note = "chi-square rejects";
        }
    }
    return c;
}

// TV check for an averaged conditional law (no counts, so no chi-square).
Check averaged_law_check(const std::string& name, const LawTable& theo, const std::vector<double>& avg,
                         const VerifyOptions& opt) {
    LawTable emp;
    emp.label = "empirical";
    for (std::size_t k = 0; k < avg.size(); ++k)
        if (avg[k] > 0) emp.push(static_cast<long>(k), avg[k]);
    Check c;
    c.name = name;
    c.metric = "TV";
    c.threshold = opt.tv_threshold;
    c.value = tv_distance(emp, theo, opt.fringe_kmax);
    c.theoretical = law_head(theo);
    c.empirical = law_head(emp);
    c.pass = c.value <= c.threshold;
    return c;
}

double log_n(std::int64_t n) { return std::log(static_cast<double>(n)); }

// Theoretical limit fraction of k-protected nodes, where one is known.
double protected_theory(const ModelSpec& spec, int k) {
    switch (spec.family) {
        case Family::BST:
            return to_double(p_protected(2, k));
        case Family::MST:
            return to_double(p_protected(spec.m, k));
        case Family::RRT:
            return rrt_protected(k);
        default:
            throw UnsupportedCheck("protected: no limit constant for " + spec.name);
    }
}

// Fringe law by sampling the sin-tree with k = 0 (the fringe tree at an Exp(alpha) age).
LawTable sin_fringe_law(const ModelSpec& spec, std::uint64_t seed, long samples, long kmax) {
    std::vector<std::int64_t> h(kmax + 2, 0);
    const bool keyed = spec.keyed();
#pragma omp parallel for schedule(dynamic, 256)
    for (long i = 0; i < samples; ++i) {
        Rng rng = make_rng(seed ^ 0x5157ull, static_cast<std::uint64_t>(i));
        long size;
        try {
            MarkedTree t = sample_sin_tree(spec, 0, rng);
            size = keyed ? t.tree.total_weight : static_cast<long>(t.tree.size());
        } catch (const CapExceeded&) {
            size = kmax + 1;
        }
        size = std::min(size, kmax + 1);
#pragma omp atomic
        ++h[size];
    }
    LawTable t = law_from_counts(h, "sin-tree Monte Carlo");
    return t;
}

}  // namespace

json Check::to_json() const {
    json j{{"name", name}, {"theoretical", theoretical}, {"empirical", empirical}, {"metric", metric},
           {"value", value}, {"threshold", threshold}, {"pass", pass}};
    if (!note.empty()) j["note"] = note;
    return j;
}

bool VerificationReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check& VerificationReport::at(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("no check named " + name);
}

json VerificationReport::to_json() const {
    json cs = json::array();
    for (const auto& c : checks) cs.push_back(c.to_json());
    return {{"model", model}, {"n", n}, {"reps", reps}, {"seed", seed}, {"pass", pass()}, {"checks", cs}};
}

std::vector<std::string> check_names() {
    return {"degree",    "fringe_size",  "key_count",      "protected:k",     "height",
            "saturation", "profile",     "depth",          "pathlength",      "maximal_clades",
            "unblemished", "node_ratio", "restricted:leaf", "restricted:key"};
}

RepSummary summarize(const ModelSpec& spec, const SimTree& tree, bool restricted_leaf, bool restricted_key) {
    RepSummary r;
    r.stats = stats(tree, kRankMax, spec.arity());
    const int n = static_cast<int>(tree.size());
    auto cap = [](std::int64_t v) { return static_cast<std::size_t>(std::min<std::int64_t>(v, kHistCap)); };
    if (restricted_leaf) {
        std::vector<std::int64_t> size(n, 1), nonleaf(n, 0);
        for (int v = n - 1; v >= 0; --v) {
            nonleaf[v] += tree.outdegree(v) > 0;
            if (v > 0) {
                size[tree.nodes[v].parent] += size[v];
                nonleaf[tree.nodes[v].parent] += nonleaf[v];
            }
        }
        if (spec.family == Family::BST) {
            // parent of a uniformly random empty slot
            std::vector<double> h(kHistCap + 1, 0.0);
            double total = 0;
            for (int v = 0; v < n; ++v) {
                double w = 2.0 - tree.outdegree(v);
                h[cap(size[v])] += w;
                total += w;
            }
            for (auto& x : h) x /= total;
            r.restricted["empty_slot_parent_size"] = std::move(h);
        } else if (spec.family == Family::RRT) {
            // parent of a uniformly random leaf, with the leaf removed
            std::vector<double> hs(kHistCap + 1, 0.0), hn(kHistCap + 1, 0.0);
            double total = 0;
            for (int v = 1; v < n; ++v) {
                if (tree.outdegree(v) != 0) continue;
                int p = tree.nodes[v].parent;
                hs[cap(size[p] - 1)] += 1;
                hn[cap(nonleaf[p])] += 1;
                total += 1;
            }
            for (auto& x : hs) x /= total;
            for (auto& x : hn) x /= total;
            r.restricted["leaf_parent_size"] = std::move(hs);
            r.restricted["leaf_parent_nonleaves"] = std::move(hn);
        } else {
            throw UnsupportedCheck("restricted:leaf is available for bst and rrt only");
        }
    }
    if (restricted_key) {
        if (spec.family != Family::MST && spec.family != Family::EMST)
            throw UnsupportedCheck("restricted:key is available for mst and emst only");
        std::vector<double> hk(spec.m + 1, 0.0), hd(spec.m + 1, 0.0);
        double total = 0;
        for (int v = 0; v < n; ++v) {
            double w = tree.nodes[v].keys;
            hk[tree.nodes[v].keys] += w;
            hd[tree.outdegree(v)] += w;
            total += w;
        }
        for (auto& x : hk) x /= total;
        for (auto& x : hd) x /= total;
        r.restricted["key_owner_keys"] = std::move(hk);
        r.restricted["key_owner_outdegree"] = std::move(hd);
    }
    return r;
}

std::vector<RepSummary> simulate_reps(const ModelSpec& spec, std::int64_t n, int reps, std::uint64_t seed,
                                      bool restricted_leaf, bool restricted_key, int threads) {
    std::vector<RepSummary> out(reps);
    int nt = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (int r = 0; r < reps; ++r) {
        try {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
            SimTree t = grow(spec, StopRule::weight(n), rng);
            out[r] = summarize(spec, t, restricted_leaf, restricted_key);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

std::vector<RepSummary> simulate_reps_serial(const ModelSpec& spec, std::int64_t n, int reps, std::uint64_t seed,
                                             bool restricted_leaf, bool restricted_key) {
    std::vector<RepSummary> out(reps);
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
        SimTree t = grow(spec, StopRule::weight(n), rng);
        out[r] = summarize(spec, t, restricted_leaf, restricted_key);
    }
    return out;
}

VerificationReport run_verification(const ModelSpec& spec, std::int64_t n, int reps, std::uint64_t seed,
                                    const std::vector<std::string>& checks, const VerifyOptions& opt) {
    if (n < 2) throw std::invalid_argument("verify: n must be at least 2");
    if (reps < 1) throw std::invalid_argument("verify: reps must be positive");
    const auto names = check_names();
    for (const auto& c : checks) {
        bool known = c.rfind("protected:", 0) == 0 || std::find(names.begin(), names.end(), c) != names.end();
        if (!known) throw UnsupportedCheck("unknown check '" + c + "'");
    }
    bool want_leaf = std::find(checks.begin(), checks.end(), "restricted:leaf") != checks.end();
    bool want_key = std::find(checks.begin(), checks.end(), "restricted:key") != checks.end();
    auto sums = opt.serial ? simulate_reps_serial(spec, n, reps, seed, want_leaf, want_key)
                           : simulate_reps(spec, n, reps, seed, want_leaf, want_key, opt.threads);
    return verify_summaries(spec, n, seed, sums, checks, opt);
}

VerificationReport verify_summaries(const ModelSpec& spec, std::int64_t n, std::uint64_t seed,
                                    const std::vector<RepSummary>& reps, const std::vector<std::string>& checks,
                                    const VerifyOptions& opt) {
    VerificationReport rep;
    rep.model = spec.name;
    rep.n = n;
    rep.reps = static_cast<int>(reps.size());
    rep.seed = seed;
    const double L = log_n(n);

    auto per_rep = [&](auto f) {
        std::vector<double> v;
        v.reserve(reps.size());
        for (const auto& r : reps) v.push_back(f(r.stats));
        return v;
    };
    auto pooled = [&](auto member) {
        std::vector<std::int64_t> acc;
        for (const auto& r : reps) add_into(acc, r.stats.*member);
        return acc;
    };

    for (const auto& name : checks) {
        if (name == "degree") {
            rep.checks.push_back(pmf_check(name, degree_law(spec), pooled(&TreeStats::degree_hist), opt));
        } else if (name == "fringe_size") {
            auto counts = pooled(spec.keyed() ? &TreeStats::fringe_key_hist : &TreeStats::fringe_size_hist);
            try {
                rep.checks.push_back(pmf_check(name, fringe_size_law(spec), counts, opt, opt.fringe_kmax));
            } catch (const NoClosedForm&) {
                LawTable mc = sin_fringe_law(spec, seed, opt.sin_samples, opt.fringe_kmax);
                Check c = pmf_check(name, mc, counts, opt, opt.fringe_kmax, false);
                c.note = "no closed law; compared with " + std::to_string(opt.sin_samples) + " sin-tree samples";
                rep.checks.push_back(c);
            }
        } else if (name == "key_count") {
            rep.checks.push_back(pmf_check(name, key_count_law(spec), pooled(&TreeStats::key_count_hist), opt));
        } else if (name.rfind("protected:", 0) == 0) {
            int k = std::stoi(name.substr(10));
            if (k < 0 || k > kRankMax) throw UnsupportedCheck("protected:k needs 0 <= k <= 4");
            double theo = protected_theory(spec, k);
            auto f = per_rep([&](const TreeStats& s) { return double(s.protected_count(k)) / double(s.node_count); });
            MeanSe m = mean_se(f);
            Check c;
            c.name = name;
            c.metric = "z-score";
            c.theoretical = theo;
            c.empirical = {{"mean", m.mean}, {"se", m.se}};
            c.threshold = 3;
            c.value = m.se > 0 ? std::fabs(m.mean - theo) / m.se : INFINITY;
            c.pass = c.value <= 3;
            if (!(m.se > 0)) c.note = "needs at least two replications";
            rep.checks.push_back(c);
        } else if (name == "node_ratio") {
            Number mp = m_psi(spec);
            auto f = per_rep([](const TreeStats& s) { return double(s.node_count) / double(s.total_weight); });
            rep.checks.push_back(scalar_check(name, 1 / mp.value, mean_se(f).mean, "rel-err", 0.01));
        } else if (name == "height") {
            double theo = height_constant(spec);
            auto f = per_rep([&](const TreeStats& s) { return s.height / L; });
            Check c = scalar_check(name, theo, mean_se(f).mean, "rel-err", 0.20);
            c.note = "slow convergence; second-order term is of order log log n";
            rep.checks.push_back(c);
        } else if (name == "saturation") {
            if (!spec.arity()) throw UnsupportedCheck("saturation needs a fixed arity");
            double theo = saturation_constant(spec);
            auto f = per_rep([&](const TreeStats& s) { return s.saturation / L; });
            Check c = scalar_check(name, theo, mean_se(f).mean, theo > 0 ? "rel-err" : "abs-err", 0.20);
            c.note = "slow convergence; second-order term is of order log log n";
            rep.checks.push_back(c);
        } else if (name == "depth") {
            double theo = depth_and_pathlength(spec).depth.value;
            auto f = per_rep([&](const TreeStats& s) { return double(s.total_path_length) / double(s.node_count) / L; });
            rep.checks.push_back(scalar_check(name, theo, mean_se(f).mean, "rel-err", 0.03));
        } else if (name == "pathlength") {
            double theo = depth_and_pathlength(spec).pathlength.value;
            auto f = per_rep([&](const TreeStats& s) { return double(s.total_path_length) / (double(n) * L); });
            rep.checks.push_back(scalar_check(name, theo, mean_se(f).mean, "rel-err", 0.05));
        } else if (name == "profile") {
            RateFunctions rf(spec);
            double a = rf.alpha.value, x0 = 1 / (a * rf.beta.value), xmax = 0.9 * rf.gamma.gamma.value / a;
            json theo = json::array(), emp = json::array();
            double worst = 0;
            for (double f : {0.5, 1.0}) {
                double x = f * x0;
                if (x >= xmax) continue;
                long k = std::lround(x * L);
                double t = rf.alpha_hat_star(a * x) / a;
                std::vector<double> v;
                for (const auto& r : reps) {
                    const auto& p = r.stats.profile;
                    double nk = k < static_cast<long>(p.size()) ? double(p[k]) : 0.0;
                    v.push_back(nk > 0 ? std::log(nk) / L : 0.0);
                }
                double e = mean_se(v).mean;
                theo.push_back({{"x", x}, {"k", k}, {"exponent", t}});
                emp.push_back({{"x", x}, {"k", k}, {"exponent", e}});
                worst = std::max(worst, std::fabs(e - t));
            }
            Check c;
            c.name = name;
            c.metric = "abs-err";
            c.theoretical = theo;
            c.empirical = emp;
            c.value = worst;
            c.threshold = 0.25;
            c.pass = worst <= c.threshold;
            c.note = "log n_k / log n at k = x log n; the local-CLT correction alone is about 0.2 at n = 1e5";
            rep.checks.push_back(c);
        } else if (name == "maximal_clades") {
            if (spec.family != Family::BST) throw UnsupportedCheck("maximal_clades: limit known for bst only");
            double theo = ancestor_constants().bst_maximal_clade;
            auto f = per_rep([](const TreeStats& s) { return double(s.maximal_clade_count) / double(s.node_count); });
            rep.checks.push_back(scalar_check(name, theo, mean_se(f).mean, "abs-err", 0.01));
        } else if (name == "unblemished") {
            double theo;
            if (spec.family == Family::BST) theo = ancestor_constants().bst_no_unary_ancestor;
            else if (spec.family == Family::RRT) theo = ancestor_constants().rrt_no_unary_ancestor;
            else throw UnsupportedCheck("unblemished: limit known for bst and rrt only");
            auto f = per_rep([](const TreeStats& s) { return double(s.unblemished_count) / double(s.node_count); });
            rep.checks.push_back(scalar_check(name, theo, mean_se(f).mean, "abs-err", 0.01));
        } else if (name == "restricted:leaf" || name == "restricted:key") {
            auto laws = restricted_laws(spec);
            std::map<std::string, std::vector<double>> avg;
            for (const auto& r : reps)
                for (const auto& [k, h] : r.restricted) add_into(avg[k], h);
            for (auto& [k, h] : avg) {
                if (!laws.count(k)) continue;
                for (auto& x : h) x /= double(reps.size());
                rep.checks.push_back(averaged_law_check(name + ":" + k, laws.at(k), h, opt));
            }
        } else {
            throw UnsupportedCheck("unknown check '" + name + "'");
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// oracle

namespace {

struct OracleNode {
    std::vector<int> keys;
    std::vector<int> child;
};

struct Counts {
    long leaves = 0, prot2 = 0;
};

int rank_of(const std::vector<OracleNode>& t, int v, Counts& c) {
    int r = -1;
    for (int ch : t[v].child)
        if (ch >= 0) {
            int cr = rank_of(t, ch, c);
            r = r < 0 ? cr : std::min(r, cr);
        }
    int mine = r < 0 ? 0 : r + 1;
    if (mine == 0) ++c.leaves;
    if (mine >= 2) ++c.prot2;
    return mine;
}

long encode(const Counts& c, const std::string& statistic) {
    if (statistic == "leaves") return c.leaves;
    if (statistic == "protected2") return c.prot2;
    if (statistic == "joint") return c.leaves * kJointBase + c.prot2;
    throw std::invalid_argument("oracle: unknown statistic '" + statistic + "' (leaves, protected2, joint)");
}

}  // namespace

LawTable exact_oracle(const ModelSpec& spec, int n, const std::string& statistic) {
    unsigned m;
    if (spec.family == Family::BST) m = 2;
    else if (spec.family == Family::MST) m = spec.m;
    else throw UnsupportedModel("oracle: only bst and mst:m are enumerated");
    if (n < 1) throw std::invalid_argument("oracle: n must be positive");
    if (n > kOracleMaxN) throw std::invalid_argument("oracle: n too large to enumerate (max " + std::to_string(kOracleMaxN) + ")");
    encode(Counts{}, statistic);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::map<long, long> tally;
    long total = 0;
    do {
        std::vector<OracleNode> t;
        for (int x : perm) {
            if (t.empty()) {
                t.push_back({{x}, std::vector<int>(m, -1)});
                continue;
            }
            int v = 0;
            while (true) {
                auto& nd = t[v];
                if (nd.keys.size() < m - 1) {
                    nd.keys.insert(std::upper_bound(nd.keys.begin(), nd.keys.end(), x), x);
                    break;
                }
                int i = static_cast<int>(std::upper_bound(nd.keys.begin(), nd.keys.end(), x) - nd.keys.begin());
                if (nd.child[i] < 0) {
                    int id = static_cast<int>(t.size());
                    t[v].child[i] = id;
                    t.push_back({{x}, std::vector<int>(m, -1)});
                    break;
                }
                v = nd.child[i];
            }
        }
        Counts c;
        rank_of(t, 0, c);
        ++tally[encode(c, statistic)];
        ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));

    LawTable out;
    out.label = spec.name + " n=" + std::to_string(n) + " " + statistic;
    for (auto [k, v] : tally) out.push(k, Rational(v) / Rational(total));
    return out;
}

long oracle_statistic(const SimTree& tree, const std::string& statistic) {
    const int n = static_cast<int>(tree.size());
    std::vector<int> rank(n, -1);
    Counts c;
    for (int v = n - 1; v >= 0; --v) {
        int r = -1;
        for (int ch : tree.children(v)) r = r < 0 ? rank[ch] : std::min(r, rank[ch]);
        rank[v] = r < 0 ? 0 : r + 1;
        if (rank[v] == 0) ++c.leaves;
        if (rank[v] >= 2) ++c.prot2;
    }
    return encode(c, statistic);
}

std::map<long, std::int64_t> simulate_statistic(const ModelSpec& spec, int n, std::int64_t reps, std::uint64_t seed,
                                                const std::string& statistic, int threads) {
    constexpr std::int64_t kBlock = 4096;
    const std::int64_t blocks = (reps + kBlock - 1) / kBlock;
    std::vector<std::map<long, std::int64_t>> part(blocks);
    int nt = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (std::int64_t b = 0; b < blocks; ++b) {
        try {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
            std::int64_t end = std::min(reps, (b + 1) * kBlock);
            for (std::int64_t r = b * kBlock; r < end; ++r) {
                SimTree t = grow(spec, StopRule::weight(n), rng);
                ++part[b][oracle_statistic(t, statistic)];
            }
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    std::map<long, std::int64_t> out;
    for (const auto& m : part)
        for (auto [k, v] : m) out[k] += v;
    return out;
}

ChiSquare oracle_chi_square(const ModelSpec& spec, int n, std::int64_t reps, std::uint64_t seed,
                            const std::string& statistic, int threads) {
    LawTable exact = exact_oracle(spec, n, statistic);
    auto counts = simulate_statistic(spec, n, reps, seed, statistic, threads);
    std::vector<double> obs(exact.support.size(), 0.0);
    double stray = 0;
    for (auto [k, v] : counts) {
        auto it = std::find(exact.support.begin(), exact.support.end(), k);
        if (it == exact.support.end()) stray += double(v);
        else obs[it - exact.support.begin()] = double(v);
    }
    if (stray > 0) return {INFINITY, 0, 0.0};  // an outcome the oracle says is impossible
    return chi_square_gof(obs, exact.p);
}

}  // namespace fringe
