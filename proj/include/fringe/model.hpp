#pragma once

#include "fringe/dist.hpp"
#include "fringe/law.hpp"
#include "fringe/rational.hpp"
#include "fringe/rng.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fringe {

enum class Family {
    RRT,
    BST,
    LinearPA,
    GeneralPA,
    MaryIncreasing,
    EMST,
    MST,
    MSTGen,
    Pyramid,
    FragBinaryUniform
};

struct UnsupportedModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ExplosiveModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Attachment weights w_0, w_1, ... for general preferential attachment.
struct PAWeights {
    std::string source;
    std::vector<double> table;           // w_k for k < table.size()
    bool finite = false;                 // w_k = 0 beyond the table
    std::function<double(double)> expr;  // used beyond the table when !finite
    bool explosive = false;
    double growth = 0;                   // log-log slope of w at large k
    double slope = 0;                    // lim w_k / k when growth is ~1

    double operator()(unsigned long k) const;
};

struct ModelSpec {
    Family family = Family::RRT;
    std::string name;  // canonical spec string
    Rational chi = 0, rho = 1;
    double chi_d = 0, rho_d = 1;  // cached conversions of chi, rho
    unsigned m = 2, ell = 0;
    std::shared_ptr<const PAWeights> weights;

    // Maximum outdegree (0 when unbounded).
    unsigned arity() const;
    // True when keys rather than nodes are counted by the weight.
    bool keyed() const;
    unsigned initial_keys() const;
    // Node outdegrees below this count as "not full" for clades and saturation.
    unsigned full_degree() const { return arity(); }
    // Birth rate with k children, for the pure-birth families; nullopt otherwise.
    std::optional<double> pa_rate(unsigned long k) const;
    bool is_pure_birth() const;
};

// Parse a model spec string; throws std::invalid_argument with a message on bad input.
ModelSpec parse_model(const std::string& s);
std::vector<std::string> model_grammar();

// Parser for weight expressions in the variable k: numbers, k, + - * / ^, parentheses,
// and the functions log, exp, sqrt.
std::function<double(double)> parse_weight_expr(const std::string& text);
PAWeights make_weights(const std::string& source);

// --- life histories -------------------------------------------------------

struct ChildBirth {
    double age;
    int slot;  // 1..m for slotted families, 0 otherwise
};

struct LifeHistory {
    unsigned initial_keys = 0;
    std::vector<std::pair<double, unsigned>> key_steps;  // (age, key count from that age on)
    std::vector<ChildBirth> children;                    // sorted by age
    bool truncated = false;                              // horizon cut the life short

    unsigned keys_at(double age) const;
};

struct AncestorLifeHistory {
    LifeHistory base;
    unsigned heir_index = 1;  // 1-based position among children by birth order
    double heir_age() const { return base.children.at(heir_index - 1).age; }
};

// Incremental sampler state; the engine in sim drives this one event at a time.
struct LifeState {
    double age = 0;
    unsigned keys = 0;
    unsigned born = 0;
    unsigned stage = 0;
    std::uint32_t taken = 0;  // bitmask of used slots
    double aux = 0;
};

struct LifeEvent {
    enum Kind { Key, Child, Split } kind;
    double age;
    int slot = 0;
    unsigned new_keys = 0;  // key count of the parent after the event
};

LifeState start_life(const ModelSpec& spec);
// Next event strictly after state.age, or nullopt when the life is over. Updates state.
std::optional<LifeEvent> next_event(const ModelSpec& spec, LifeState& state, Rng& rng);

LifeHistory sample_life(const ModelSpec& spec, Rng& rng,
                        double horizon = std::numeric_limits<double>::infinity());
// Children other than the heir are kept up to `horizon`; with after_heir the horizon is
// measured from the heir's birth instead of from age 0.
AncestorLifeHistory sample_ancestor_life(const ModelSpec& spec, Rng& rng,
                                         double horizon = std::numeric_limits<double>::infinity(),
                                         bool after_heir = false);

// --- Laplace data ---------------------------------------------------------

// Abscissa of convergence A of mu_hat.
double abscissa(const ModelSpec& spec);
double mu_hat(const ModelSpec& spec, double theta);
double mu_hat_prime(const ModelSpec& spec, double theta);
// Exact value at rational theta when a closed rational form exists.
std::optional<Rational> mu_hat_exact(const ModelSpec& spec, const Rational& theta);
std::optional<Rational> mu_hat_prime_exact(const ModelSpec& spec, const Rational& theta);

struct Number {
    double value;
    std::optional<Rational> exact;
};
Number m_psi(const ModelSpec& spec);
// Malthusian parameter (closed where available, otherwise a root of mu_hat = 1).
Number malthusian(const ModelSpec& spec);
Number beta(const ModelSpec& spec);

LawTable heir_index_law(const ModelSpec& spec, double tol = 1e-12, long max_k = 100000);

}  // namespace fringe
