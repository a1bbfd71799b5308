#pragma once

#include "fringe/law.hpp"
#include "fringe/model.hpp"
#include "fringe/rational.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace fringe {

struct NoClosedForm : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A constant plus where it came from: "closed-form", "solved" or "fallback".
struct Constant {
    double value = 0;
    std::optional<Rational> exact;
    std::string source = "closed-form";
};

struct LawOptions {
    double tol = 1e-9;      // stop infinite laws once the tail is below this
    long max_k = 100000;    // ... or at this support point
};

// Height and saturation solutions of theta (log mu)'(theta) = log mu(theta).
struct GammaSolution {
    Constant gamma;
    double theta = 0;  // the root (NaN for fallbacks)
};
GammaSolution gamma_height(const ModelSpec& spec);
GammaSolution gamma_saturation(const ModelSpec& spec);
// Residual of the defining equation at theta.
double gamma_residual(const ModelSpec& spec, double theta);

class RateFunctions {
public:
    explicit RateFunctions(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }

    Constant alpha, beta;
    double A = 0;             // abscissa of convergence
    double a_bar = 0;         // 1 / inf supp(xi); infinite in every implemented family
    double a_bar_minus = 0;   // 1 / sup supp(xi)
    Constant a_bar_i;
    double a_bar_circ = 0;
    GammaSolution gamma, gamma_minus;

    // inf{theta : log mu(theta) <= zeta}
    double alpha_of_zeta(double zeta) const;
    // inf over theta > alpha of x log mu + theta (x >= 0)
    double alpha_star(double x) const;
    // inf over theta <= alpha of -x log mu + theta (x <= 0)
    double alpha_check_star(double x) const;
    // inf over 0 <= theta <= alpha of x log mu + theta
    double alpha_tilde_star(double x) const;
    // inf over theta >= 0 of x log mu + theta
    double alpha_hat_star(double x) const;
    // Closed form of alpha_hat_star when one is known.
    std::optional<double> alpha_hat_star_closed(double x) const;

private:
    ModelSpec spec_;
    void refuse_beyond_gamma(double x, const char* who) const;
    // inf over lo <= theta <= hi (lo open when lo_open) of c log mu(theta) + theta, c >= 0.
    double convex_inf(double c, double lo, bool lo_open, double hi) const;
};

RateFunctions rate_functions(const ModelSpec& spec);

// Limit law of the outdegree of a uniformly random node.
LawTable degree_law(const ModelSpec& spec, const LawOptions& opt = {});
// Limit law of the fringe subtree size (nodes, or keys for the search trees).
LawTable fringe_size_law(const ModelSpec& spec, const LawOptions& opt = {});
// Limit fraction of nodes with k keys; search-tree families only.
LawTable key_count_law(const ModelSpec& spec);
// Named limit laws seen from a restricted random choice (leaf, key, empty slot).
std::map<std::string, LawTable> restricted_laws(const ModelSpec& spec, const LawOptions& opt = {});

// RRT: probability that the parent's subtree minus the chosen leaf has i non-leaves.
double rrt_leaf_nonleaf_prob(unsigned i);

struct FragmentationConstants {
    double beta = 0.5;
    double W = 2;
    LawTable degree;
    double child_degree[3];  // outdegree of the only child of a root with one child
    double p_size1 = 0.25;
    double p_size2;
};
FragmentationConstants fragmentation_constants();

struct DepthConstants {
    Constant depth;       // mean depth / log n
    Constant pathlength;  // total path length / (n log n)
};
DepthConstants depth_and_pathlength(const ModelSpec& spec);

// gamma / alpha and gamma_minus / alpha.
double height_constant(const ModelSpec& spec);
double saturation_constant(const ModelSpec& spec);

}  // namespace fringe
