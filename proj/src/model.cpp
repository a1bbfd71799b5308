#include "fringe/model.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace fringe {

// ---------------------------------------------------------------------------
// weight expressions

namespace {

using Fn = std::function<double(double)>;

class ExprParser {
public:
    explicit ExprParser(const std::string& s) : s_(s) {}

    Fn parse() {
        Fn f = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return f;
    }

private:
    const std::string& s_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& msg) {
        throw std::invalid_argument("weight expression '" + s_ + "': " + msg);
    }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    Fn expr() {
        Fn f = term();
        for (;;) {
            if (eat('+')) {
                Fn g = term();
                f = [f, g](double k) { return f(k) + g(k); };
            } else if (eat('-')) {
                Fn g = term();
                f = [f, g](double k) { return f(k) - g(k); };
            } else {
                return f;
            }
        }
    }
    Fn term() {
        Fn f = power();
        for (;;) {
            if (eat('*')) {
                Fn g = power();
                f = [f, g](double k) { return f(k) * g(k); };
            } else if (eat('/')) {
                Fn g = power();
                f = [f, g](double k) { return f(k) / g(k); };
            } else {
                return f;
            }
        }
    }
    Fn power() {
        Fn f = unary();
        if (eat('^')) {
            Fn g = power();
            return [f, g](double k) { return std::pow(f(k), g(k)); };
        }
        return f;
    }
    Fn unary() {
        if (eat('-')) {
            Fn f = unary();
            return [f](double k) { return -f(k); };
        }
        return primary();
    }
    Fn primary() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end");
        if (eat('(')) {
            Fn f = expr();
            if (!eat(')')) fail("missing ')'");
            return f;
        }
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = std::stod(s_.substr(i_), &used);
            i_ += used;
            return [v](double) { return v; };
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i_;
            while (j < s_.size() && std::isalpha(static_cast<unsigned char>(s_[j]))) ++j;
            std::string id = s_.substr(i_, j - i_);
            i_ = j;
            if (id == "k") return [](double k) { return k; };
            double (*fn)(double) = nullptr;
            if (id == "log") fn = [](double x) { return std::log(x); };
            else if (id == "exp") fn = [](double x) { return std::exp(x); };
            else if (id == "sqrt") fn = [](double x) { return std::sqrt(x); };
            else fail("unknown identifier '" + id + "'");
            if (!eat('(')) fail("expected '(' after " + id);
            Fn a = expr();
            if (!eat(')')) fail("missing ')'");
            return [fn, a](double k) { return fn(a(k)); };
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> v;
    std::string t = text;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream in(t);
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double x;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad weight '" + tok + "'");
        }
        if (used != tok.size()) throw std::invalid_argument("bad weight '" + tok + "'");
        v.push_back(x);
    }
    return v;
}

}  // namespace

std::function<double(double)> parse_weight_expr(const std::string& text) { return ExprParser(text).parse(); }

double PAWeights::operator()(unsigned long k) const {
    if (k < table.size()) return table[k];
    if (finite) return 0;
    return expr(static_cast<double>(k));
}

PAWeights make_weights(const std::string& source) {
    PAWeights w;
    w.source = source;
    if (source.rfind("list:", 0) == 0) {
        w.table = parse_number_list(source.substr(5));
        w.finite = true;
    } else if (std::filesystem::is_regular_file(source)) {
        std::ifstream in(source);
        std::stringstream ss;
        ss << in.rdbuf();
        w.table = parse_number_list(ss.str());
        w.finite = true;
    } else {
        w.expr = parse_weight_expr(source);
    }
    if (w.finite) {
        if (w.table.empty()) throw std::invalid_argument("empty weight list");
        // Cut at the first zero: no further children are possible after it.
        auto z = std::find(w.table.begin(), w.table.end(), 0.0);
        w.table.erase(z, w.table.end());
    }
    for (unsigned long k = 0; k < 1000; ++k) {
        double x = w(k);
        if (std::isnan(x) || x < 0) throw std::invalid_argument("weights must be non-negative (w_" + std::to_string(k) + ")");
        if (w.finite && k >= w.table.size()) break;
    }
    if (!(w(0) > 0)) throw std::invalid_argument("weights need w_0 > 0");
    if (!w.finite) {
        double k1 = std::ldexp(1.0, 20), k2 = std::ldexp(1.0, 21);
        double a = w.expr(k1), b = w.expr(k2);
        if (a > 0 && b > 0) w.growth = std::log2(b / a);
        w.explosive = w.growth > 1 + 1e-3;
        if (std::fabs(w.growth - 1) <= 1e-3) w.slope = b / k2;
        // tabulate once; the Laplace series walks this range many times
        w.table.resize((1ul << 20) + 1);
        for (std::size_t k = 0; k < w.table.size(); ++k) w.table[k] = w.expr(static_cast<double>(k));
    }
    return w;
}

// ---------------------------------------------------------------------------
// specs

unsigned ModelSpec::arity() const {
    switch (family) {
        case Family::BST:
        case Family::Pyramid:
        case Family::FragBinaryUniform:
            return 2;
        case Family::MaryIncreasing:
        case Family::EMST:
        case Family::MST:
        case Family::MSTGen:
            return m;
        case Family::LinearPA:
            if (chi < 0) return static_cast<unsigned>(to_double(rho / -chi) + 0.5);
            return 0;
        case Family::GeneralPA:
            return weights->finite ? static_cast<unsigned>(weights->table.size()) : 0;
        case Family::RRT:
            return 0;
    }
    return 0;
}

bool ModelSpec::keyed() const {
    return family == Family::EMST || family == Family::MST || family == Family::MSTGen;
}

unsigned ModelSpec::initial_keys() const {
    switch (family) {
        case Family::EMST:
            return 0;
        case Family::MSTGen:
            return ell;
        default:
            return 1;
    }
}

bool ModelSpec::is_pure_birth() const {
    switch (family) {
        case Family::RRT:
        case Family::BST:
        case Family::LinearPA:
        case Family::GeneralPA:
        case Family::MaryIncreasing:
        case Family::Pyramid:
            return true;
        default:
            return false;
    }
}

std::optional<double> ModelSpec::pa_rate(unsigned long k) const {
    switch (family) {
        case Family::RRT:
            return 1.0;
        case Family::BST:
            return k < 2 ? 2.0 - k : 0.0;
        case Family::MaryIncreasing:
            return k < m ? double(m - k) : 0.0;
        case Family::LinearPA: {
            double r = chi_d * k + rho_d;
            return r > 0 ? r : 0.0;
        }
        case Family::GeneralPA:
        case Family::Pyramid:
            return (*weights)(k);
        default:
            return std::nullopt;
    }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

unsigned parse_uint(const std::string& s, const char* what) {
    std::size_t used = 0;
    long v;
    try {
        v = std::stol(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    }
    if (used != s.size() || v < 0) throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    return static_cast<unsigned>(v);
}

}  // namespace

ModelSpec parse_model(const std::string& s) {
    ModelSpec spec;
    spec.name = s;
    auto need_m = [&](const std::string& arg) {
        unsigned m = parse_uint(arg, "m");
        if (m < 2) throw std::invalid_argument("m must be >= 2");
        if (m > 30) throw std::invalid_argument("m must be <= 30");
        return m;
    };
    if (s == "rrt") {
        spec.family = Family::RRT;
    } else if (s == "bst") {
        spec.family = Family::BST;
        spec.chi = -1;
        spec.rho = 2;
    } else if (s == "pyramid") {
        spec.family = Family::Pyramid;
        spec.weights = std::make_shared<PAWeights>(make_weights("list:1,1"));
    } else if (s == "frag:binary-uniform") {
        spec.family = Family::FragBinaryUniform;
    } else if (s.rfind("pa:linear:", 0) == 0) {
        auto parts = split(s.substr(10), ',');
        if (parts.size() != 2) throw std::invalid_argument("expected pa:linear:<chi>,<rho>");
        spec.family = Family::LinearPA;
        spec.chi = parse_rational(parts[0]);
        spec.rho = parse_rational(parts[1]);
        if (spec.rho <= 0) throw std::invalid_argument("rho must be positive");
        if (spec.chi < 0 && !is_integer(spec.rho / -spec.chi))
            throw std::invalid_argument("chi < 0 requires rho/|chi| to be an integer");
    } else if (s.rfind("pa:weights:", 0) == 0) {
        spec.family = Family::GeneralPA;
        spec.weights = std::make_shared<PAWeights>(make_weights(s.substr(11)));
    } else if (s.rfind("mary:", 0) == 0) {
        spec.family = Family::MaryIncreasing;
        spec.m = need_m(s.substr(5));
        spec.chi = -1;
        spec.rho = spec.m;
    } else if (s.rfind("emst:", 0) == 0) {
        spec.family = Family::EMST;
        spec.m = need_m(s.substr(5));
    } else if (s.rfind("mst:", 0) == 0) {
        spec.family = Family::MST;
        spec.m = need_m(s.substr(4));
    } else if (s.rfind("mstgen:", 0) == 0) {
        auto parts = split(s.substr(7), ',');
        if (parts.size() != 2) throw std::invalid_argument("expected mstgen:<m>,<ell>");
        spec.family = Family::MSTGen;
        spec.m = need_m(parts[0]);
        spec.ell = parse_uint(parts[1], "ell");
        if ((spec.m - 1) * (spec.ell + 1) > 200) throw std::invalid_argument("mstgen: (m-1)(ell+1) must be <= 200");
    } else {
        throw std::invalid_argument("unknown model '" + s + "'");
    }
    spec.chi_d = to_double(spec.chi);
    spec.rho_d = to_double(spec.rho);
    return spec;
}

std::vector<std::string> model_grammar() {
    return {"rrt",
            "bst",
            "pa:linear:<chi>,<rho>",
            "pa:weights:<expr in k | list:w0,w1,... | path>",
            "mary:<m>",
            "emst:<m>",
            "mst:<m>",
            "mstgen:<m>,<ell>",
            "pyramid",
            "frag:binary-uniform"};
}

// ---------------------------------------------------------------------------
// life histories

unsigned LifeHistory::keys_at(double age) const {
    unsigned k = initial_keys;
    for (auto& [a, c] : key_steps) {
        if (a > age) break;
        k = c;
    }
    return k;
}

namespace {

bool slotted(const ModelSpec& spec) {
    return spec.family == Family::BST || spec.family == Family::MaryIncreasing ||
           (spec.family == Family::LinearPA && spec.chi < 0);
}

int pick_free_slot(LifeState& st, unsigned M, Rng& rng) {
    unsigned free = M - std::popcount(st.taken);
    unsigned j = uniform_index(rng, free);
    for (unsigned s = 0; s < M; ++s) {
        if (st.taken & (1u << s)) continue;
        if (j-- == 0) {
            st.taken |= 1u << s;
            return static_cast<int>(s) + 1;
        }
    }
    return 0;
}

unsigned gen_K(const ModelSpec& spec) { return (spec.m - 1) * (spec.ell + 1); }

}  // namespace

LifeState start_life(const ModelSpec& spec) {
    LifeState st;
    st.keys = spec.initial_keys();
    return st;
}

std::optional<LifeEvent> next_event(const ModelSpec& spec, LifeState& st, Rng& rng) {
    switch (spec.family) {
        case Family::RRT:
        case Family::LinearPA:
        case Family::GeneralPA:
        case Family::Pyramid:
        case Family::BST:
        case Family::MaryIncreasing: {
            if (slotted(spec)) {
                unsigned M = spec.arity();
                unsigned free = M - st.born;
                if (free == 0) return std::nullopt;
                double per = spec.family == Family::LinearPA ? -spec.chi_d : 1.0;
                st.age += exp_rand(rng, free * per);
                ++st.born;
                return LifeEvent{LifeEvent::Child, st.age, pick_free_slot(st, M, rng), st.keys};
            }
            double r = *spec.pa_rate(st.born);
            if (!(r > 0)) return std::nullopt;
            st.age += exp_rand(rng, r);
            ++st.born;
            return LifeEvent{LifeEvent::Child, st.age, 0, st.keys};
        }
        case Family::EMST:
        case Family::MSTGen: {
            unsigned K = gen_K(spec);
            if (st.stage >= K) return std::nullopt;
            st.age += exp_rand(rng, spec.ell + st.stage + 1.0);
            ++st.stage;
            if (st.stage < K) {
                st.keys = spec.ell + st.stage;
                return LifeEvent{LifeEvent::Key, st.age, 0, st.keys};
            }
            st.keys = spec.m - 1;
            st.born = spec.m;
            return LifeEvent{LifeEvent::Split, st.age, 0, st.keys};
        }
        case Family::MST: {
            if (st.keys < spec.m - 1) {
                st.age += exp_rand(rng, st.keys + 1.0);
                ++st.keys;
                return LifeEvent{LifeEvent::Key, st.age, 0, st.keys};
            }
            unsigned free = spec.m - st.born;
            if (free == 0) return std::nullopt;
            st.age += exp_rand(rng, double(free));
            ++st.born;
            return LifeEvent{LifeEvent::Child, st.age, pick_free_slot(st, spec.m, rng), st.keys};
        }
        case Family::FragBinaryUniform: {
            if (st.stage == 0) {
                st.aux = uniform01(rng);
                while (st.aux == 0.0) st.aux = uniform01(rng);
                double a1 = -std::log(st.aux), a2 = -std::log1p(-st.aux);
                st.stage = 1;
                st.born = 1;
                if (a1 <= a2) {
                    st.age = a1;
                    st.taken = 1;
                    return LifeEvent{LifeEvent::Child, a1, 1, st.keys};
                }
                st.age = a2;
                st.taken = 2;
                return LifeEvent{LifeEvent::Child, a2, 2, st.keys};
            }
            if (st.stage == 1) {
                st.stage = 2;
                st.born = 2;
                if (st.taken == 1) {
                    st.age = -std::log1p(-st.aux);
                    st.taken = 3;
                    return LifeEvent{LifeEvent::Child, st.age, 2, st.keys};
                }
                st.age = -std::log(st.aux);
                st.taken = 3;
                return LifeEvent{LifeEvent::Child, st.age, 1, st.keys};
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

LifeHistory sample_life(const ModelSpec& spec, Rng& rng, double horizon) {
    if (std::isinf(horizon) && spec.arity() == 0 && spec.family != Family::GeneralPA)
        throw std::invalid_argument("sample_life: infinite life needs a finite horizon");
    if (std::isinf(horizon) && spec.family == Family::GeneralPA && !spec.weights->finite)
        throw std::invalid_argument("sample_life: infinite life needs a finite horizon");
    LifeHistory h;
    h.initial_keys = spec.initial_keys();
    LifeState st = start_life(spec);
    while (auto ev = next_event(spec, st, rng)) {
        if (ev->age > horizon) {
            h.truncated = true;
            break;
        }
        switch (ev->kind) {
            case LifeEvent::Key:
                h.key_steps.emplace_back(ev->age, ev->new_keys);
                break;
            case LifeEvent::Child:
                h.children.push_back({ev->age, ev->slot});
                break;
            case LifeEvent::Split:
                h.key_steps.emplace_back(ev->age, ev->new_keys);
                for (unsigned s = 1; s <= spec.m; ++s) h.children.push_back({ev->age, static_cast<int>(s)});
                break;
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Laplace data

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Series {
    double value, derivative;
};

// sum_{k>=1} prod_{j<k} w_j/(w_j+theta), with a power-law tail correction.
Series pa_series(const PAWeights& w, double theta) {
    const unsigned long kmax = 1ul << 20;
    double t = 1, sum = 0, dsum = 0, inv = 0;
    double t_half = 0, d_half = 0;
    for (unsigned long k = 1; k <= kmax; ++k) {
        double wj = w(k - 1);
        if (wj <= 0) return {sum, dsum};
        if (wj + theta <= 0) return {kInf, -kInf};
        t *= wj / (wj + theta);
        inv += 1 / (wj + theta);
        sum += t;
        dsum -= t * inv;
        if (t < 1e-18 * sum && t * inv < 1e-18 * std::fabs(dsum)) return {sum, dsum};
        if (k == kmax / 2) {
            t_half = t;
            d_half = t * inv;
        }
    }
    double K = static_cast<double>(kmax);
    double s = std::log(t_half / t) / std::log(2.0);
    double sd = std::log(d_half / (t * inv)) / std::log(2.0);
    if (!(s > 1 + 1e-6) || !(sd > 1 + 1e-6)) return {kInf, -kInf};
    sum += t * (K / (s - 1) - 0.5);
    dsum -= t * inv * (K / (sd - 1) - 0.5);
    return {sum, dsum};
}

void require_nonexplosive(const ModelSpec& spec) {
    if (spec.family == Family::GeneralPA && spec.weights->explosive)
        throw ExplosiveModel("weights '" + spec.weights->source + "' are explosive (sum of 1/w_k is finite)");
}

}  // namespace

double abscissa(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::RRT:
            return 0;
        case Family::LinearPA:
            return to_double(spec.chi);
        case Family::MSTGen:
            return -(spec.ell + 1.0);
        case Family::GeneralPA: {
            require_nonexplosive(spec);
            const auto& w = *spec.weights;
            if (w.finite) return -*std::min_element(w.table.begin(), w.table.end());
            if (w.growth < 1 - 1e-3) return 0;
            return w.slope;
        }
        default:
            return -1;
    }
}

double mu_hat(const ModelSpec& spec, double th) {
    if (th <= abscissa(spec)) return kInf;
    switch (spec.family) {
        case Family::RRT:
            return 1 / th;
        case Family::BST:
        case Family::FragBinaryUniform:
            return 2 / (1 + th);
        case Family::MaryIncreasing:
            return spec.m / (1 + th);
        case Family::LinearPA:
            return to_double(spec.rho) / (th - to_double(spec.chi));
        case Family::EMST:
        case Family::MST:
        case Family::MSTGen: {
            double r = spec.m;
            for (unsigned i = 1; i <= gen_K(spec); ++i) r *= (spec.ell + i) / (spec.ell + i + th);
            return r;
        }
        case Family::Pyramid:
            return 1 / (1 + th) + 1 / ((1 + th) * (1 + th));
        case Family::GeneralPA:
            return pa_series(*spec.weights, th).value;
    }
    return kInf;
}

double mu_hat_prime(const ModelSpec& spec, double th) {
    if (th <= abscissa(spec)) return -kInf;
    switch (spec.family) {
        case Family::RRT:
            return -1 / (th * th);
        case Family::BST:
        case Family::FragBinaryUniform:
            return -2 / ((1 + th) * (1 + th));
        case Family::MaryIncreasing:
            return -double(spec.m) / ((1 + th) * (1 + th));
        case Family::LinearPA: {
            double d = th - to_double(spec.chi);
            return -to_double(spec.rho) / (d * d);
        }
        case Family::EMST:
        case Family::MST:
        case Family::MSTGen: {
            double s = 0;
            for (unsigned i = 1; i <= gen_K(spec); ++i) s += 1 / (spec.ell + i + th);
            return -mu_hat(spec, th) * s;
        }
        case Family::Pyramid:
            return -1 / ((1 + th) * (1 + th)) - 2 / std::pow(1 + th, 3);
        case Family::GeneralPA:
            return pa_series(*spec.weights, th).derivative;
    }
    return -kInf;
}

std::optional<Rational> mu_hat_exact(const ModelSpec& spec, const Rational& th) {
    if (spec.family == Family::GeneralPA) return std::nullopt;
    if (to_double(th) <= abscissa(spec)) throw std::domain_error("mu_hat: theta at or below the abscissa");
    switch (spec.family) {
        case Family::RRT:
            return 1 / th;
        case Family::BST:
        case Family::FragBinaryUniform:
            return 2 / (1 + th);
        case Family::MaryIncreasing:
            return Rational(spec.m) / (1 + th);
        case Family::LinearPA:
            return spec.rho / (th - spec.chi);
        case Family::EMST:
        case Family::MST:
        case Family::MSTGen: {
            Rational r = spec.m;
            for (unsigned i = 1; i <= gen_K(spec); ++i) r *= Rational(spec.ell + i) / (spec.ell + i + th);
            return r;
        }
        case Family::Pyramid:
            return 1 / (1 + th) + 1 / ((1 + th) * (1 + th));
        default:
            return std::nullopt;
    }
}

std::optional<Rational> mu_hat_prime_exact(const ModelSpec& spec, const Rational& th) {
    if (spec.family == Family::GeneralPA) return std::nullopt;
    if (to_double(th) <= abscissa(spec)) throw std::domain_error("mu_hat: theta at or below the abscissa");
    switch (spec.family) {
        case Family::RRT:
            return -1 / (th * th);
        case Family::BST:
        case Family::FragBinaryUniform:
            return -2 / ((1 + th) * (1 + th));
        case Family::MaryIncreasing:
            return -Rational(spec.m) / ((1 + th) * (1 + th));
        case Family::LinearPA:
            return -spec.rho / ((th - spec.chi) * (th - spec.chi));
        case Family::EMST:
        case Family::MST:
        case Family::MSTGen: {
            Rational s = 0;
            for (unsigned i = 1; i <= gen_K(spec); ++i) s += 1 / (spec.ell + i + th);
            return -*mu_hat_exact(spec, th) * s;
        }
        case Family::Pyramid:
            return -1 / ((1 + th) * (1 + th)) - 2 / ((1 + th) * (1 + th) * (1 + th));
        default:
            return std::nullopt;
    }
}

Number m_psi(const ModelSpec& spec) {
    Rational r = 1;
    if (spec.family == Family::MST) {
        r = 2 * (harmonic(spec.m) - 1);
    } else if (spec.family == Family::EMST || spec.family == Family::MSTGen) {
        // psi starts at ell; the j-th key arrival happens before tau with prob (ell+1)/(ell+j+1)
        unsigned K = gen_K(spec), l = spec.ell;
        r = l;
        for (unsigned j = 1; j + 1 <= K; ++j) r += Rational(l + 1, l + j + 1);
        r += Rational(l + 1, l + K + 1) * (Rational(spec.m - 1) - Rational(l + K - 1));
    }
    return {to_double(r), r};
}

Number malthusian(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::LinearPA: {
            Rational a = spec.chi + spec.rho;
            return {to_double(a), a};
        }
        case Family::MaryIncreasing:
            return {double(spec.m - 1), Rational(spec.m - 1)};
        case Family::Pyramid:
            return {(std::sqrt(5.0) - 1) / 2, std::nullopt};
        case Family::GeneralPA:
            break;
        default:
            return {1.0, Rational(1)};
    }
    require_nonexplosive(spec);
    double A = abscissa(spec);
    double lo = A + 1e-9 * std::max(1.0, std::fabs(A));
    double hi = std::max(1.0, A + 1.0);
    while (mu_hat(spec, hi) > 1) hi *= 2;
    if (!(mu_hat(spec, lo) > 1)) throw std::runtime_error("malthusian: no root above the abscissa");
    auto f = [&](double th) { return std::log(mu_hat(spec, th)); };
    // near A the truncated series may report +inf; bisect until both ends are finite
    while (!std::isfinite(f(lo))) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) > 0) lo = mid;
        else hi = mid;
    }
    boost::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), it);
    return {0.5 * (r.first + r.second), std::nullopt};
}

Number beta(const ModelSpec& spec) {
    Number a = malthusian(spec);
    if (a.exact) {
        if (auto d = mu_hat_prime_exact(spec, *a.exact)) return {to_double(-*d), -*d};
    }
    if (spec.family == Family::Pyramid) return {(3 * std::sqrt(5.0) - 5) / 2, std::nullopt};
    return {-mu_hat_prime(spec, a.value), std::nullopt};
}

// ---------------------------------------------------------------------------
// ancestors

namespace {

struct PACache {
    std::once_flag once;
    double alpha = 0;
    std::vector<double> cum;  // cumulative q_i
};

std::mutex pa_cache_mutex;
std::map<const PAWeights*, std::shared_ptr<PACache>> pa_cache;

const PACache& pa_heir_table(const ModelSpec& spec) {
    std::shared_ptr<PACache> c;
    {
        std::lock_guard<std::mutex> lock(pa_cache_mutex);
        auto& slot = pa_cache[spec.weights.get()];
        if (!slot) slot = std::make_shared<PACache>();
        c = slot;
    }
    std::call_once(c->once, [&] {
        c->alpha = malthusian(spec).value;
        double t = 1, s = 0;
        const auto& w = *spec.weights;
        for (unsigned long k = 1; k < 10000000; ++k) {
            double wj = w(k - 1);
            if (wj <= 0) break;
            t *= wj / (wj + c->alpha);
            s += t;
            c->cum.push_back(s);
            if (1 - s < 1e-15) break;
        }
    });
    return *c;
}

// Drop non-heir children born after age H.
void trim(AncestorLifeHistory& a, double H) {
    std::vector<ChildBirth> kept;
    unsigned heir = 0;
    for (std::size_t i = 0; i < a.base.children.size(); ++i) {
        bool is_heir = i + 1 == a.heir_index;
        if (!is_heir && a.base.children[i].age > H) {
            a.base.truncated = true;
            continue;
        }
        kept.push_back(a.base.children[i]);
        if (is_heir) heir = static_cast<unsigned>(kept.size());
    }
    a.base.children = std::move(kept);
    a.heir_index = heir;
}

// Heir at an exponential age, other children by an independent pure birth process with the
// shifted rates w_{k+1}.
AncestorLifeHistory linear_ancestor(const ModelSpec& spec, Rng& rng, double horizon, bool after_heir) {
    AncestorLifeHistory a;
    a.base.initial_keys = 1;
    double heir = exp_rand(rng, to_double(spec.rho));
    double H = after_heir ? heir + horizon : horizon;
    std::vector<double> others;
    double age = 0;
    for (unsigned long k = 0;; ++k) {
        double r = to_double(spec.chi) * (k + 1) + to_double(spec.rho);
        if (r <= 0) break;
        age += exp_rand(rng, r);
        if (age > H) {
            a.base.truncated = true;
            break;
        }
        others.push_back(age);
    }
    std::size_t before = std::lower_bound(others.begin(), others.end(), heir) - others.begin();
    a.heir_index = static_cast<unsigned>(before) + 1;
    for (std::size_t i = 0; i < others.size(); ++i) {
        if (i == before) a.base.children.push_back({heir, 0});
        a.base.children.push_back({others[i], 0});
    }
    if (before == others.size()) a.base.children.push_back({heir, 0});
    return a;
}

// Slotted families: heir slot uniform with an exponentially tilted wait, other slots untouched.
AncestorLifeHistory slotted_ancestor(Rng& rng, double start, double heir_rate, double other_rate, unsigned M) {
    AncestorLifeHistory a;
    int heir_slot = static_cast<int>(uniform_index(rng, M)) + 1;
    std::vector<ChildBirth> kids;
    for (int s = 1; s <= static_cast<int>(M); ++s)
        kids.push_back({start + exp_rand(rng, s == heir_slot ? heir_rate : other_rate), s});
    std::sort(kids.begin(), kids.end(), [](const ChildBirth& x, const ChildBirth& y) { return x.age < y.age; });
    for (std::size_t i = 0; i < kids.size(); ++i)
        if (kids[i].slot == heir_slot) a.heir_index = static_cast<unsigned>(i) + 1;
    a.base.children = std::move(kids);
    return a;
}

AncestorLifeHistory ancestor_untrimmed(const ModelSpec& spec, Rng& rng, double horizon, bool after_heir) {
    switch (spec.family) {
        case Family::RRT:
            return linear_ancestor(spec, rng, horizon, after_heir);
        case Family::LinearPA:
            if (spec.chi >= 0) return linear_ancestor(spec, rng, horizon, after_heir);
            [[fallthrough]];
        case Family::BST:
        case Family::MaryIncreasing: {
            auto a = slotted_ancestor(rng, 0.0, to_double(spec.rho), to_double(-spec.chi), spec.arity());
            a.base.initial_keys = 1;
            return a;
        }
        case Family::EMST:
        case Family::MSTGen: {
            AncestorLifeHistory a;
            a.base.initial_keys = spec.ell;
            unsigned K = gen_K(spec);
            double age = 0;
            for (unsigned i = 1; i <= K; ++i) {
                age += exp_rand(rng, spec.ell + i + 1.0);
                a.base.key_steps.emplace_back(age, i < K ? spec.ell + i : spec.m - 1);
            }
            for (unsigned s = 1; s <= spec.m; ++s) a.base.children.push_back({age, static_cast<int>(s)});
            a.heir_index = uniform_index(rng, spec.m) + 1;
            return a;
        }
        case Family::MST: {
            double age = 0;
            std::vector<std::pair<double, unsigned>> steps;
            for (unsigned i = 2; i <= spec.m - 1; ++i) {
                age += exp_rand(rng, i + 1.0);
                steps.emplace_back(age, i);
            }
            auto a = slotted_ancestor(rng, age, 2.0, 1.0, spec.m);
            a.base.initial_keys = 1;
            a.base.key_steps = std::move(steps);
            return a;
        }
        case Family::FragBinaryUniform: {
            AncestorLifeHistory a;
            a.base.initial_keys = 1;
            double u = uniform01(rng);
            while (u == 0.0) u = uniform01(rng);
            double vh = std::sqrt(u);
            double ah = -std::log(vh), ao = -std::log1p(-vh);
            int hs = static_cast<int>(uniform_index(rng, 2)) + 1;
            if (ah <= ao) {
                a.base.children = {{ah, hs}, {ao, 3 - hs}};
                a.heir_index = 1;
            } else {
                a.base.children = {{ao, 3 - hs}, {ah, hs}};
                a.heir_index = 2;
            }
            return a;
        }
        case Family::GeneralPA:
        case Family::Pyramid: {
            require_nonexplosive(spec);
            const PACache& c = pa_heir_table(spec);
            const auto& w = *spec.weights;
            double u = uniform01(rng) * c.cum.back();
            unsigned I = static_cast<unsigned>(std::upper_bound(c.cum.begin(), c.cum.end(), u) - c.cum.begin()) + 1;
            if (I > c.cum.size()) I = static_cast<unsigned>(c.cum.size());
            AncestorLifeHistory a;
            a.base.initial_keys = 1;
            a.heir_index = I;
            double age = 0, H = horizon;
            for (unsigned long j = 1;; ++j) {
                double wj = w(j - 1);
                if (wj <= 0) break;
                age += exp_rand(rng, j <= I ? wj + c.alpha : wj);
                if (j == I && after_heir) H = age + horizon;
                if (j > I && age > H) {
                    a.base.truncated = true;
                    break;
                }
                a.base.children.push_back({age, 0});
            }
            return a;
        }
    }
    throw UnsupportedModel("no ancestor law for " + spec.name);
}

}  // namespace

AncestorLifeHistory sample_ancestor_life(const ModelSpec& spec, Rng& rng, double horizon, bool after_heir) {
    AncestorLifeHistory a = ancestor_untrimmed(spec, rng, horizon, after_heir);
    trim(a, after_heir ? a.heir_age() + horizon : horizon);
    return a;
}

LawTable heir_index_law(const ModelSpec& spec, double tol, long max_k) {
    LawTable t;
    t.label = "heir-index";
    switch (spec.family) {
        case Family::EMST:
        case Family::MSTGen:
            for (unsigned i = 1; i <= spec.m; ++i) t.push(i, Rational(1, spec.m));
            return t;
        case Family::MST:
            for (unsigned i = 1; i <= spec.m; ++i) t.push(i, Rational(2 * (spec.m - i + 1), spec.m * (spec.m + 1)));
            return t;
        case Family::FragBinaryUniform:
            t.push(1, rat(3, 4));
            t.push(2, rat(1, 4));
            return t;
        default:
            break;
    }
    Number a = malthusian(spec);
    if (a.exact && spec.family != Family::GeneralPA) {
        Rational q = 1, s = 0;
        for (long i = 1; i <= max_k; ++i) {
            Rational w = spec.chi * (i - 1) + spec.rho;
            if (spec.family == Family::RRT) w = 1;
            if (w <= 0) break;
            q *= w / (w + *a.exact);
            t.push(i, q);
            s += q;
            if (1 - to_double(s) < tol) break;
        }
        return t;
    }
    double q = 1, s = 0;
    for (long i = 1; i <= max_k; ++i) {
        double w = *spec.pa_rate(i - 1);
        if (w <= 0) break;
        q *= w / (w + a.value);
        t.push(i, q);
        s += q;
        if (1 - s < tol) break;
    }
    return t;
}

}  // namespace fringe
