// fringe: command line front end.
#include "fringe/protected.hpp"
#include "fringe/sim.hpp"
#include "fringe/theory.hpp"
#include "fringe/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using namespace fringe;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ModelSpec model_or_usage(const std::string& s) {
    try {
        return parse_model(s);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void apply_threads(int threads) {
    if (const char* env = std::getenv("FRINGE_THREADS")) {
        try {
            threads = std::stoi(env);
        } catch (...) {
            throw UsageError("FRINGE_THREADS must be an integer");
        }
    }
    if (threads > 0) omp_set_num_threads(threads);
}

// null for non-finite numbers, which JSON cannot carry
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json constant(const Constant& c) {
    json j{{"value", num(c.value)}, {"source", c.source}};
    if (c.exact) j["exact"] = to_string(*c.exact);
    return j;
}

void emit(const json& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << j.dump(2) << "\n";
}

json theory_json(const ModelSpec& spec, long max_k) {
    RateFunctions rf(spec);
    LawOptions lo;
    lo.max_k = max_k;
    DepthConstants dc = depth_and_pathlength(spec);
    Number mp = m_psi(spec);
    json j;
    j["model"] = spec.name;
    j["alpha"] = rf.alpha.value;
    j["beta"] = rf.beta.value;
    j["m_psi"] = mp.value;
    j["gamma"] = num(rf.gamma.gamma.value);
    j["gamma_minus"] = num(rf.gamma_minus.gamma.value);
    j["a_bar_i"] = rf.a_bar_i.value;
    j["A"] = rf.A;
    j["depth_const"] = dc.depth.value;
    j["pathlength_const"] = dc.pathlength.value;
    j["height_const"] = num(rf.gamma.gamma.value / rf.alpha.value);
    j["saturation_const"] = num(rf.gamma_minus.gamma.value / rf.alpha.value);
    j["constants"] = {{"alpha", constant(rf.alpha)},
                      {"beta", constant(rf.beta)},
                      {"m_psi", constant({mp.value, mp.exact, "closed-form"})},
                      {"gamma", constant(rf.gamma.gamma)},
                      {"gamma_minus", constant(rf.gamma_minus.gamma)},
                      {"a_bar_i", constant(rf.a_bar_i)},
                      {"depth_const", constant(dc.depth)},
                      {"pathlength_const", constant(dc.pathlength)}};
    json laws;
    LawTable deg = degree_law(spec, lo);
    laws["degree"] = deg.to_json();
    j["degree_law"] = deg.label;
    try {
        laws["fringe_size"] = fringe_size_law(spec, lo).to_json();
    } catch (const NoClosedForm&) {
        laws["fringe_size"] = nullptr;
    }
    if (spec.keyed()) laws["key_count"] = key_count_law(spec).to_json();
    try {
        for (auto& [name, law] : restricted_laws(spec, lo)) laws["restricted"][name] = law.to_json();
    } catch (const UnsupportedModel&) {
    }
    j["laws"] = laws;
    return j;
}

json stats_json(const TreeStats& s) {
    return {{"node_count", s.node_count},
            {"total_weight", s.total_weight},
            {"height", s.height},
            {"saturation", s.saturation},
            {"total_path_length", s.total_path_length},
            {"clade_count", s.clade_count},
            {"maximal_clade_count", s.maximal_clade_count},
            {"unblemished_count", s.unblemished_count},
            {"degree_hist", s.degree_hist},
            {"fringe_size_hist", s.fringe_size_hist},
            {"fringe_key_hist", s.fringe_key_hist},
            {"key_count_hist", s.key_count_hist},
            {"rank_hist", s.rank_hist},
            {"profile", s.profile}};
}

std::string stats_csv(const TreeStats& s) {
    std::ostringstream o;
    o << "field,index,value\n";
    o << "node_count,," << s.node_count << "\n"
      << "total_weight,," << s.total_weight << "\n"
      << "height,," << s.height << "\n"
      << "saturation,," << s.saturation << "\n"
      << "total_path_length,," << s.total_path_length << "\n"
      << "clade_count,," << s.clade_count << "\n"
      << "maximal_clade_count,," << s.maximal_clade_count << "\n"
      << "unblemished_count,," << s.unblemished_count << "\n";
    auto hist = [&](const char* name, const std::vector<std::int64_t>& h) {
        for (std::size_t i = 0; i < h.size(); ++i)
            if (h[i]) o << name << "," << i << "," << h[i] << "\n";
    };
    hist("degree_hist", s.degree_hist);
    hist("fringe_size_hist", s.fringe_size_hist);
    hist("fringe_key_hist", s.fringe_key_hist);
    hist("key_count_hist", s.key_count_hist);
    hist("rank_hist", s.rank_hist);
    hist("profile", s.profile);
    return o.str();
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string help_footer() {
    std::string f = "\nModel specs:\n";
    for (const auto& g : model_grammar()) f += "  " + g + "\n";
    f += "\nVerify checks:\n ";
    for (const auto& c : check_names()) f += " " + c;
    f += "\n\nFRINGE_THREADS overrides --threads. Seeds default to 0.\n";
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fringe trees of random trees: limit laws, simulation and checks"};
    app.footer(help_footer());
    app.require_subcommand(1);

    int threads = 0;
    std::string model, out, format = "json", checks = "degree", statistic = "joint", dump;
    std::int64_t n = 100000;
    int reps = 100, m = 2, k = 2;
    std::uint64_t seed = 0;
    long max_k = 200;
    double stop_time = -1;
    bool exact = false, as_float = false, rrt = false, serial = false;
    std::int64_t oracle_reps = 0;

    auto* th = app.add_subcommand("theory", "Limit constants and laws (JSON)");
    th->add_option("--model", model, "model spec")->required();
    th->add_option("--max-k", max_k, "truncate infinite laws at this support point")->check(CLI::PositiveNumber);
    th->add_option("--out", out, "output file (default stdout)");

    auto* sim = app.add_subcommand("simulate", "Grow one tree and print its statistics");
    sim->add_option("--model", model, "model spec")->required();
    sim->add_option("--n", n, "stop at this total weight")->check(CLI::PositiveNumber);
    sim->add_option("--stop-time", stop_time, "stop at this time instead of at weight n");
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sim->add_option("--out", out, "output file (default stdout)");
    sim->add_option("--dump-tree", dump, "also write the tree as 'id parent slot birth keys' lines");

    auto* pr = app.add_subcommand("protected", "Limit fraction of k-protected nodes");
    pr->add_option("--m", m, "branching factor of the search tree")->check(CLI::Range(2, 30));
    pr->add_option("--k", k, "protection level")->check(CLI::Range(0, 12));
    auto* fe = pr->add_flag("--exact", exact, "print the exact rational (default)");
    pr->add_flag("--float", as_float, "print a decimal")->excludes(fe);
    pr->add_flag("--rrt", rrt, "random recursive tree instead of a search tree (decimal only)");

    auto* he = app.add_subcommand("height", "Height and saturation constants (JSON)");
    he->add_option("--model", model, "model spec")->required();

    auto* ve = app.add_subcommand("verify", "Replicated simulation checked against the theory");
    ve->add_option("--model", model, "model spec")->required();
    ve->add_option("--n", n, "tree weight")->check(CLI::Range(std::int64_t(2), std::int64_t(100000000)));
    ve->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
    ve->add_option("--seed", seed, "random seed");
    ve->add_option("--checks", checks, "comma separated check names");
    ve->add_option("--json", out, "write the report here (default stdout)");
    ve->add_flag("--serial", serial, "use the serial reference loop");

    auto* orc = app.add_subcommand("oracle", "Exact small-n law by enumerating insertion orders");
    orc->add_option("--model", model, "bst or mst:<m>")->required();
    orc->add_option("--n", n, "number of keys")->required()->check(CLI::Range(1, kOracleMaxN));
    orc->add_option("--statistic", statistic, "leaves, protected2 or joint")
        ->check(CLI::IsMember({"leaves", "protected2", "joint"}));
    orc->add_option("--reps", oracle_reps, "also simulate this many trees and run a chi-square test");
    orc->add_option("--seed", seed, "random seed for --reps");

    for (auto* sc : {th, sim, pr, he, ve, orc}) sc->add_option("--threads", threads, "OpenMP threads (0: default)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        apply_threads(threads);
        if (th->parsed()) {
            emit(theory_json(model_or_usage(model), max_k), out);
        } else if (sim->parsed()) {
            ModelSpec spec = model_or_usage(model);
            Rng rng = make_rng(seed);
            StopRule stop = stop_time >= 0 ? StopRule::time(stop_time) : StopRule::weight(n);
            SimTree t = grow(spec, stop, rng);
            TreeStats s = stats(t, 4, spec.arity());
            if (!dump.empty()) {
                std::ofstream f(dump);
                if (!f) throw std::runtime_error("cannot write " + dump);
                dump_tree(f, t, spec.name, seed);
            }
            if (format == "csv") {
                std::string csv = stats_csv(s);
                if (out.empty() || out == "-") std::cout << csv;
                else std::ofstream(out) << csv;
            } else {
                json j = stats_json(s);
                j["model"] = spec.name;
                j["seed"] = seed;
                j["stop_time"] = t.stop_time;
                emit(j, out);
            }
            std::cerr << spec.name << ": " << s.node_count << " nodes, height " << s.height << "\n";
        } else if (pr->parsed()) {
            if (rrt) {
                std::cout.precision(17);
                std::cout << rrt_protected(k) << "\n";
            } else {
                Rational p = p_protected(m, k);
                if (as_float) {
                    std::cout.precision(17);
                    std::cout << to_double(p) << "\n";
                } else {
                    std::cout << to_string(p) << "\n";
                }
            }
        } else if (he->parsed()) {
            ModelSpec spec = model_or_usage(model);
            GammaSolution g = gamma_height(spec), gm = gamma_saturation(spec);
            double a = malthusian(spec).value;
            json j{{"model", spec.name},
                   {"gamma", num(g.gamma.value)},
                   {"gamma_minus", num(gm.gamma.value)},
                   {"height_const", num(g.gamma.value / a)},
                   {"saturation_const", num(gm.gamma.value / a)},
                   {"gamma_source", g.gamma.source},
                   {"gamma_minus_source", gm.gamma.source}};
            if (!std::isnan(g.theta)) j["theta"] = g.theta, j["residual"] = gamma_residual(spec, g.theta);
            if (!std::isnan(gm.theta)) j["theta_minus"] = gm.theta, j["residual_minus"] = gamma_residual(spec, gm.theta);
            emit(j, "");
        } else if (ve->parsed()) {
            ModelSpec spec = model_or_usage(model);
            VerifyOptions opt;
            opt.serial = serial;
            VerificationReport r;
            try {
                r = run_verification(spec, n, reps, seed, split_csv(checks), opt);
            } catch (const UnsupportedCheck& e) {
                throw UsageError(e.what());
            }
            emit(r.to_json(), out);
            for (const auto& c : r.checks)
                std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.metric << "=" << c.value
                          << " (threshold " << c.threshold << ")\n";
            return r.pass() ? 0 : 1;
        } else if (orc->parsed()) {
            ModelSpec spec = model_or_usage(model);
            LawTable law = exact_oracle(spec, static_cast<int>(n), statistic);
            json j{{"model", spec.name}, {"n", n}, {"statistic", statistic}, {"law", law.to_json()}};
            if (statistic == "joint") j["encoding"] = "leaves * 100 + protected2";
            if (oracle_reps > 0) {
                ChiSquare cs = oracle_chi_square(spec, static_cast<int>(n), oracle_reps, seed, statistic);
                j["chi_square"] = {{"reps", oracle_reps}, {"seed", seed}, {"statistic", num(cs.statistic)},
                                   {"dof", cs.dof}, {"p_value", cs.p_value}};
            }
            emit(j, "");
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedModel& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
