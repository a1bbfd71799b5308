#include "fringe/theory.hpp"

#include "fringe/dist.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fringe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_mu(const ModelSpec& s, double th) { return std::log(mu_hat(s, th)); }
double dlog_mu(const ModelSpec& s, double th) { return mu_hat_prime(s, th) / mu_hat(s, th); }

template <class F>
double solve(F f, double lo, double hi) {
    boost::uintmax_t it = 300;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
    if (it >= 300) throw NoConvergence("root solver did not converge");
    return 0.5 * (r.first + r.second);
}

Constant from_number(const Number& n, bool closed) {
    Constant c;
    c.value = n.value;
    c.exact = n.exact;
    c.source = (n.exact || closed) ? "closed-form" : "solved";
    return c;
}

// First point above an open end where mu_hat is finite (truncated series may overflow near A).
double inner_point(const ModelSpec& s, double lo) {
    double d = 1e-9 * std::max(1.0, std::fabs(lo));
    while (!std::isfinite(mu_hat(s, lo + d)) || !std::isfinite(mu_hat_prime(s, lo + d))) {
        d *= 2;
        if (d > 1e6) throw NoConvergence("mu_hat is not finite anywhere near the abscissa");
    }
    return lo + d;
}

bool closed_malthusian(const ModelSpec& s) { return s.family != Family::GeneralPA; }

// Partial sums of sum_{k >= k0} c / ((k+a)(k+a+1)), stopping when the tail c/(k+a) is small.
LawTable telescoping(const std::string& label, const Rational& c, long a, long k0, const LawOptions& opt) {
    LawTable t;
    t.label = label;
    double cd = to_double(c);
    for (long k = k0; k <= opt.max_k; ++k) {
        t.push(k, c / Rational((k + a) * (k + a + 1)));
        if (cd / double(k + a + 1) < opt.tol) break;
    }
    return t;
}

}  // namespace

double gamma_residual(const ModelSpec& spec, double th) { return th * dlog_mu(spec, th) - log_mu(spec, th); }

GammaSolution gamma_height(const ModelSpec& spec) {
    double a = malthusian(spec).value;
    auto g = [&](double th) { return gamma_residual(spec, th); };
    double lo = a + 1e-9 * std::max(1.0, a);
    double hi = 2 * a + 1;
    while (!(g(hi) > 0)) {
        hi *= 2;
        if (hi > 1e12 || mu_hat(spec, hi) == 0) {
            // no positive root: gamma^{-1} is the lower end of supp(xi), which is 0 here
            return {{kInf, std::nullopt, "fallback"}, std::nan("")};
        }
    }
    if (!(g(lo) < 0)) throw NoConvergence("gamma_height: no sign change above alpha");
    double th = solve(g, lo, hi);
    return {{-1 / dlog_mu(spec, th), std::nullopt, "solved"}, th};
}

GammaSolution gamma_saturation(const ModelSpec& spec) {
    double A = abscissa(spec);
    if (A >= 0) return {{0, Rational(0), "closed-form"}, std::nan("")};
    auto g = [&](double th) { return gamma_residual(spec, th); };
    double hi = 0;
    if (!(g(hi) < 0)) throw NoConvergence("gamma_saturation: mu_hat(0) <= 1");
    double d = 0.5 * -A;
    while (!(g(A + d) > 0) && d > 1e-14 * -A) d /= 4;
    if (!(g(A + d) > 0)) {
        // no negative root; use the limit of log mu / |theta| at A
        return {{-A / log_mu(spec, A + d), std::nullopt, "fallback"}, std::nan("")};
    }
    double th = solve(g, A + d, hi);
    return {{-1 / dlog_mu(spec, th), std::nullopt, "solved"}, th};
}

// ---------------------------------------------------------------------------

RateFunctions::RateFunctions(const ModelSpec& spec) : spec_(spec) {
    alpha = from_number(malthusian(spec), closed_malthusian(spec));
    beta = from_number(fringe::beta(spec), closed_malthusian(spec));
    A = abscissa(spec);
    a_bar = kInf;
    a_bar_minus = 0;
    if (A < 0) {
        auto m0 = mu_hat_exact(spec, Rational(0));
        auto d0 = mu_hat_prime_exact(spec, Rational(0));
        if (m0 && d0) {
            Rational r = *m0 / -*d0;
            a_bar_i = {to_double(r), r, "closed-form"};
        } else {
            a_bar_i = {mu_hat(spec, 0) / -mu_hat_prime(spec, 0), std::nullopt, "solved"};
        }
    } else {
        a_bar_i = {0, Rational(0), "closed-form"};
    }
    // mu_hat blows up at A in every family with A > -inf, which sends the ratio to 0
    double d = 1e-9 * std::max(1.0, std::fabs(A));
    double r = mu_hat(spec, A + d) / -mu_hat_prime(spec, A + d);
    a_bar_circ = (std::isfinite(r) && r >= 1e-6) ? r : a_bar_minus;
    gamma = gamma_height(spec);
    gamma_minus = gamma_saturation(spec);
}

RateFunctions rate_functions(const ModelSpec& spec) { return RateFunctions(spec); }

void RateFunctions::refuse_beyond_gamma(double x, const char* who) const {
    if (x > gamma.gamma.value * (1 + 1e-12))
        throw std::domain_error(std::string(who) + ": argument beyond gamma, where the profile law does not hold");
}

double RateFunctions::convex_inf(double c, double lo, bool lo_open, double hi) const {
    if (c == 0) return lo;
    auto f = [&](double th) { return c * log_mu(spec_, th) + th; };
    auto d = [&](double th) { return c * dlog_mu(spec_, th) + 1; };
    double l = lo_open ? inner_point(spec_, lo) : lo;
    if (d(l) >= 0) return f(l);
    if (std::isfinite(hi)) {
        if (d(hi) <= 0) return f(hi);
    } else {
        hi = std::max(l + 1, 2 * std::fabs(l) + 1);
        while (d(hi) <= 0) {
            hi *= 2;
            if (hi > 1e15) throw NoConvergence("rate function: minimizer escapes to infinity");
        }
    }
    return f(solve(d, l, hi));
}

double RateFunctions::alpha_of_zeta(double zeta) const {
    double l = inner_point(spec_, A);
    if (log_mu(spec_, l) <= zeta) return A;
    double hi = std::max(l + 1, 2 * std::fabs(l) + 1);
    while (log_mu(spec_, hi) > zeta) {
        hi *= 2;
        if (hi > 1e15) throw NoConvergence("alpha_of_zeta: no crossing");
    }
    return solve([&](double th) { return log_mu(spec_, th) - zeta; }, l, hi);
}

double RateFunctions::alpha_star(double x) const {
    if (x < 0) throw std::domain_error("alpha_star: x < 0");
    refuse_beyond_gamma(x, "alpha_star");
    return convex_inf(x, alpha.value, false, kInf);
}

double RateFunctions::alpha_check_star(double x) const {
    if (x > 0) throw std::domain_error("alpha_check_star: x > 0");
    return convex_inf(-x, A, true, alpha.value);
}

double RateFunctions::alpha_tilde_star(double x) const {
    if (x < 0) throw std::domain_error("alpha_tilde_star: x < 0");
    refuse_beyond_gamma(x, "alpha_tilde_star");
    if (A >= 0) return convex_inf(x, A, true, alpha.value);
    return convex_inf(x, 0, false, alpha.value);
}

double RateFunctions::alpha_hat_star(double x) const {
    if (x < 0) throw std::domain_error("alpha_hat_star: x < 0");
    refuse_beyond_gamma(x, "alpha_hat_star");
    if (A >= 0) return convex_inf(x, A, true, kInf);
    return convex_inf(x, 0, false, kInf);
}

std::optional<double> RateFunctions::alpha_hat_star_closed(double x) const {
    double chi, rho;
    switch (spec_.family) {
        case Family::RRT:
            chi = 0, rho = 1;
            break;
        case Family::BST:
        case Family::LinearPA:
        case Family::MaryIncreasing:
            chi = spec_.chi_d, rho = spec_.rho_d;
            break;
        default:
            return std::nullopt;
    }
    // mu = rho / (theta - chi); unconstrained minimizer at theta = chi + x
    auto xlogx = [](double v) { return v == 0 ? 0.0 : v * std::log(v); };
    if (chi < 0 && x <= -chi) return x * std::log(rho / -chi);
    return x * std::log(rho) - xlogx(x) + x + chi;
}

// ---------------------------------------------------------------------------

LawTable degree_law(const ModelSpec& spec, const LawOptions& opt) {
    LawTable t;
    switch (spec.family) {
        case Family::RRT:
            return birth_stopped_law(BirthRates::linear(0, 1), Rational(1), opt.tol, opt.max_k);
        case Family::BST:
        case Family::LinearPA:
        case Family::MaryIncreasing: {
            auto a = malthusian(spec);
            return birth_stopped_law(BirthRates::linear(spec.chi, spec.rho), *a.exact, opt.tol, opt.max_k);
        }
        case Family::MST: {
            t.label = "mst-degree";
            unsigned m = spec.m;
            t.push(0, Rational(m - 1, m + 1));
            for (unsigned j = 1; j <= m; ++j) t.push(j, Rational(2, m * (m + 1)));
            return t;
        }
        case Family::EMST:
        case Family::MSTGen:
            t.label = "split-degree";
            t.push(0, Rational(spec.m - 1, spec.m));
            t.push(spec.m, Rational(1, spec.m));
            return t;
        case Family::Pyramid: {
            double s5 = std::sqrt(5.0);
            t.label = "pyramid-degree";
            t.push(0, (3 - s5) / 2);
            t.push(1, s5 - 2);
            t.push(2, (3 - s5) / 2);
            return t;
        }
        case Family::FragBinaryUniform:
            t.label = "Bin(2,1/2)";
            t.push(0, Rational(1, 4));
            t.push(1, Rational(1, 2));
            t.push(2, Rational(1, 4));
            return t;
        case Family::GeneralPA: {
            auto w = spec.weights;
            auto rates = BirthRates::weights([w](unsigned long k) { return Rational((*w)(k)); });
            // alpha is a float root here, so only the float path is meaningful
            return birth_stopped_law(rates, Rational(malthusian(spec).value), opt.tol, opt.max_k, false);
        }
    }
    throw UnsupportedModel("degree_law");
}

LawTable fringe_size_law(const ModelSpec& spec, const LawOptions& opt) {
    switch (spec.family) {
        case Family::RRT:
            return telescoping("1/(n(n+1))", Rational(1), 0, 1, opt);
        case Family::BST:
        case Family::LinearPA:
        case Family::MaryIncreasing: {
            Rational kappa = spec.rho / (spec.chi + spec.rho);
            if (!is_integer(kappa)) {
                // kappa/((n+kappa-1)(n+kappa)) with non-integer shift
                LawTable t;
                t.label = "kappa/((n+kappa-1)(n+kappa)), kappa=" + to_string(kappa);
                double kd = to_double(kappa);
                for (long n = 1; n <= opt.max_k; ++n) {
                    t.push(n, kappa / ((n + kappa - 1) * (n + kappa)));
                    if (kd / (n + kd) < opt.tol) break;
                }
                return t;
            }
            long k = static_cast<long>(numer(kappa));
            return telescoping(k == 2 ? "2/((n+1)(n+2))" : "kappa/((n+kappa-1)(n+kappa))", kappa, k - 1, 1, opt);
        }
        case Family::EMST:
            return telescoping("1/((k+1)(k+2)) keys", Rational(1), 1, 0, opt);
        case Family::MST:
            return telescoping("2/((k+1)(k+2)) keys", Rational(2), 1, 1, opt);
        default:
            throw NoClosedForm("fringe_size_law: no closed form for " + spec.name);
    }
}

LawTable key_count_law(const ModelSpec& spec) {
    LawTable t;
    unsigned m = spec.m;
    switch (spec.family) {
        case Family::EMST:
            t.label = "emst-keys";
            for (unsigned k = 0; k + 1 < m; ++k) t.push(k, Rational(1, (k + 1) * (k + 2)));
            t.push(m - 1, Rational(1, m));
            return t;
        case Family::MST:
            t.label = "mst-keys";
            for (unsigned k = 1; k + 1 < m; ++k) t.push(k, Rational(2, (k + 1) * (k + 2)));
            t.push(m - 1, Rational(2, m));
            return t;
        case Family::MSTGen: {
            t.label = "mstgen-keys";
            unsigned l = spec.ell, K = (m - 1) * (l + 1);
            std::map<unsigned, Rational> mass;
            for (unsigned k = l; k <= l + K - 1; ++k) mass[k] += Rational(l + 1, (k + 1) * (k + 2));
            mass[m - 1] += Rational(1, m);  // internal nodes
            for (auto& [k, q] : mass) t.push(k, q);
            return t;
        }
        default:
            throw std::invalid_argument("key_count_law: " + spec.name + " is not a search tree");
    }
}

namespace {

// p[i] for i <= top in one sweep; e[j] = Eulerian(n, j) / n!, advanced in n.
std::vector<double> leaf_nonleaf_table(unsigned top) {
    std::vector<double> p(top + 1, 0.0), e(top, 0.0), next(top);
    if (top == 0) return p;
    e[0] = 1;  // n = 0
    for (unsigned k = 1; k < 1000000; ++k) {
        // here e holds row n = k-1
        double w = 2.0 / ((k + 1.0) * (k + 2.0)), big = 0;
        for (unsigned i = 1; i <= top; ++i) {
            p[i] += w * e[i - 1];
            big = std::max(big, w * e[i - 1]);
        }
        if (k > 2 * top + 20 && big < 1e-18) break;
        unsigned n = k;
        for (unsigned j = 0; j < top; ++j) {
            double v = (j + 1.0) * e[j];
            if (j > 0) v += double(n - j) * e[j - 1];
            next[j] = v / n;
        }
        e.swap(next);
    }
    return p;
}

}  // namespace

double rrt_leaf_nonleaf_prob(unsigned i) { return leaf_nonleaf_table(i)[i]; }

std::map<std::string, LawTable> restricted_laws(const ModelSpec& spec, const LawOptions& opt) {
    std::map<std::string, LawTable> out;
    switch (spec.family) {
        case Family::BST: {
            // parent of a random empty slot: its subtree size X has X-1 ~ HG(1,1;4)
            LawTable t;
            t.label = "4/(k(k+1)(k+2))";
            for (long k = 1; k <= opt.max_k; ++k) {
                t.push(k, Rational(4) / Rational(k * (k + 1) * (k + 2)));
                if (2.0 / (double(k + 1) * (k + 2)) < opt.tol) break;
            }
            out["empty_slot_parent_size"] = t;
            return out;
        }
        case Family::RRT: {
            out["leaf_parent_size"] = telescoping("2/((k+1)(k+2))", Rational(2), 1, 1, opt);
            LawTable nl;
            nl.label = "leaf-parent non-leaves";
            // the tail decays like 1/i, so the table is cut at a fixed length
            auto p = leaf_nonleaf_table(static_cast<unsigned>(std::clamp<long>(opt.max_k, 1, 2000)));
            double s = 0;
            for (unsigned i = 1; i < p.size() && s < 1 - opt.tol; ++i) {
                nl.push(i, p[i]);
                s += p[i];
            }
            out["leaf_parent_nonleaves"] = nl;
            return out;
        }
        case Family::MST:
        case Family::EMST: {
            // weight each node by its key count
            Rational mpsi = *m_psi(spec).exact;
            LawTable keys = key_count_law(spec), k2;
            k2.label = "key-owner keys";
            for (std::size_t j = 0; j < keys.support.size(); ++j) {
                long k = keys.support[j];
                if (k > 0) k2.push(k, k * keys.exact[j] / mpsi);
            }
            out["key_owner_keys"] = k2;
            LawTable deg = degree_law(spec), d2;
            d2.label = "key-owner outdegree";
            Rational rest = 1;
            // internal (full) nodes have m-1 keys; the others are weighted through the key law
            for (std::size_t j = 0; j < deg.support.size(); ++j) {
                long d = deg.support[j];
                if (d == 0) continue;
                Rational q = (spec.m - 1) * deg.exact[j] / mpsi;
                rest -= q;
            }
            d2.push(0, rest);
            for (std::size_t j = 0; j < deg.support.size(); ++j) {
                long d = deg.support[j];
                if (d > 0) d2.push(d, (spec.m - 1) * deg.exact[j] / mpsi);
            }
            out["key_owner_outdegree"] = d2;
            return out;
        }
        default:
            throw UnsupportedModel("restricted_laws: not available for " + spec.name);
    }
}

FragmentationConstants fragmentation_constants() {
    FragmentationConstants f;
    f.degree = degree_law(parse_model("frag:binary-uniform"));
    const double l2 = std::log(2.0), l3 = std::log(3.0);
    f.child_degree[0] = 1.5 - 8 * l2 + 4 * l3;
    f.child_degree[1] = 1 + 12 * l2 - 8 * l3;
    f.child_degree[2] = -1.5 - 4 * l2 + 4 * l3;
    f.p_size2 = 0.75 - 4 * l2 + 2 * l3;
    return f;
}

DepthConstants depth_and_pathlength(const ModelSpec& spec) {
    Number a = malthusian(spec), b = beta(spec), mp = m_psi(spec);
    DepthConstants d;
    if (a.exact && b.exact) {
        Rational dc = 1 / (*a.exact * *b.exact);
        d.depth = {to_double(dc), dc, "closed-form"};
        Rational pc = dc / *mp.exact;
        d.pathlength = {to_double(pc), pc, "closed-form"};
    } else {
        std::string src = closed_malthusian(spec) ? "closed-form" : "solved";
        d.depth = {1 / (a.value * b.value), std::nullopt, src};
        d.pathlength = {d.depth.value / mp.value, std::nullopt, src};
    }
    return d;
}

double height_constant(const ModelSpec& spec) { return gamma_height(spec).gamma.value / malthusian(spec).value; }

double saturation_constant(const ModelSpec& spec) {
    return gamma_saturation(spec).gamma.value / malthusian(spec).value;
}

}  // namespace fringe
