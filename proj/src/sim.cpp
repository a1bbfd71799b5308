#include "fringe/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>

namespace fringe {

void SimTree::finalize() {
    const int n = static_cast<int>(nodes.size());
    child_start.assign(n + 1, 0);
    for (int v = 1; v < n; ++v) ++child_start[nodes[v].parent + 1];
    for (int v = 0; v < n; ++v) child_start[v + 1] += child_start[v];
    child_list.assign(child_start[n], 0);
    std::vector<int> fill(child_start.begin(), child_start.end() - 1);
    for (int v = 1; v < n; ++v) child_list[fill[nodes[v].parent]++] = v;
    for (int v = 0; v < n; ++v) {
        auto b = child_list.begin() + child_start[v], e = child_list.begin() + child_start[v + 1];
        std::sort(b, e, [&](int x, int y) {
            return nodes[x].birth < nodes[y].birth || (nodes[x].birth == nodes[y].birth && x < y);
        });
    }
    for (int v = 0; v < n; ++v) nodes[v].depth = v == 0 ? 0 : nodes[nodes[v].parent].depth + 1;
}

StopRule StopRule::weight(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("WeightAtLeast needs n >= 1");
    StopRule r;
    r.kind = WeightAtLeast;
    r.n = n;
    return r;
}

StopRule StopRule::time(double t) {
    if (!(t > 0)) throw std::invalid_argument("TimeAtMost needs t > 0");
    StopRule r;
    r.kind = TimeAtMost;
    r.t = t;
    return r;
}

namespace {

// Lazy event-driven growth: each live node has exactly one pending event in the heap.
class Engine {
public:
    Engine(const ModelSpec& spec, Rng& rng, SimTree& tree, std::size_t cap, bool soft = false)
        : spec_(spec), rng_(rng), tree_(tree), cap_(cap), soft_(soft) {}

    int add(int parent, int slot, double birth, unsigned keys) {
        if (!soft_ && tree_.nodes.size() >= cap_) throw CapExceeded("node cap of " + std::to_string(cap_) + " exceeded");
        SimNode nd;
        nd.parent = parent;
        nd.slot = slot;
        nd.birth = birth;
        nd.keys = keys;
        tree_.nodes.push_back(nd);
        tree_.total_weight += keys;
        states_.emplace_back();
        pending_.push_back(LifeEvent{LifeEvent::Key, 0});
        return static_cast<int>(tree_.nodes.size()) - 1;
    }

    void start(int id) {
        states_[id] = start_life(spec_);
        schedule(id);
    }

    void run(const StopRule& stop) {
        double last = tree_.stop_time;
        if (stop.kind == StopRule::WeightAtLeast) {
            while (tree_.total_weight < stop.n && !heap_.empty()) {
                Item it = heap_.top();
                heap_.pop();
                apply(it);
                last = it.time;
            }
            tree_.stop_time = last;
        } else {
            while (!heap_.empty() && heap_.top().time <= stop.t) {
                Item it = heap_.top();
                heap_.pop();
                // soft cap: past it only the root keeps living
                if (soft_ && tree_.nodes.size() >= cap_) {
                    tree_.truncated = true;
                    if (it.node != 0) continue;
                }
                apply(it);
            }
            tree_.stop_time = stop.t;
        }
    }

private:
    struct Item {
        double time;
        std::uint64_t seq;
        int node;
        bool operator>(const Item& o) const { return time > o.time || (time == o.time && seq > o.seq); }
    };

    const ModelSpec& spec_;
    Rng& rng_;
    SimTree& tree_;
    std::size_t cap_;
    bool soft_;
    std::vector<LifeState> states_;
    std::vector<LifeEvent> pending_;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap_;
    std::uint64_t seq_ = 0;

    void schedule(int id) {
        auto ev = next_event(spec_, states_[id], rng_);
        if (!ev) return;
        pending_[id] = *ev;
        heap_.push({tree_.nodes[id].birth + ev->age, seq_++, id});
    }

    void apply(const Item& it) {
        LifeEvent ev = pending_[it.node];
        SimNode& nd = tree_.nodes[it.node];
        switch (ev.kind) {
            case LifeEvent::Key:
                tree_.total_weight += static_cast<std::int64_t>(ev.new_keys) - nd.keys;
                nd.keys = ev.new_keys;
                break;
            case LifeEvent::Child: {
                int c = add(it.node, ev.slot, it.time, spec_.initial_keys());
                start(c);
                break;
            }
            case LifeEvent::Split: {
                tree_.total_weight += static_cast<std::int64_t>(ev.new_keys) - nd.keys;
                nd.keys = ev.new_keys;
                for (unsigned s = 1; s <= spec_.m; ++s) {
                    int c = add(it.node, static_cast<int>(s), it.time, spec_.initial_keys());
                    start(c);
                }
                break;
            }
        }
        schedule(it.node);
    }
};

}  // namespace

SimTree grow(const ModelSpec& spec, const StopRule& stop, Rng& rng, std::size_t node_cap) {
    SimTree tree;
    Engine eng(spec, rng, tree, node_cap);
    int root = eng.add(-1, 0, 0.0, spec.initial_keys());
    eng.start(root);
    eng.run(stop);
    tree.finalize();
    return tree;
}

std::int64_t TreeStats::protected_count(int k) const {
    std::int64_t s = 0;
    for (std::size_t r = static_cast<std::size_t>(std::max(k, 0)); r < rank_hist.size(); ++r) s += rank_hist[r];
    return s;
}

namespace {

void bump(std::vector<std::int64_t>& h, std::size_t k, std::size_t cap) {
    if (cap && k > cap) k = cap;
    if (h.size() <= k) h.resize(k + 1, 0);
    ++h[k];
}

}  // namespace

TreeStats stats(const SimTree& tree, int rank_max, unsigned arity, std::size_t hist_cap) {
    TreeStats s;
    const int n = static_cast<int>(tree.size());
    s.node_count = n;
    s.total_weight = tree.total_weight;
    s.rank_hist.assign(static_cast<std::size_t>(rank_max) + 2, 0);
    std::vector<std::int64_t> size(n, 1), keys(n, 0);
    std::vector<int> rank(n, 0);
    for (int v = n - 1; v >= 0; --v) {
        keys[v] += tree.nodes[v].keys;
        auto ch = tree.children(v);
        if (!ch.empty()) {
            int r = std::numeric_limits<int>::max();
            for (int c : ch) r = std::min(r, rank[c]);
            rank[v] = r + 1;
        }
        if (v > 0) {
            size[tree.nodes[v].parent] += size[v];
            keys[tree.nodes[v].parent] += keys[v];
        }
    }
    std::vector<char> anc_clade(n, 0), anc_unary(n, 0);
    s.saturation = arity ? std::numeric_limits<int>::max() : -1;
    for (int v = 0; v < n; ++v) {
        const SimNode& nd = tree.nodes[v];
        unsigned deg = tree.outdegree(v);
        bool clade = arity && deg < arity;
        if (v > 0) {
            int p = nd.parent;
            anc_clade[v] = anc_clade[p] || (arity && tree.outdegree(p) < arity);
            anc_unary[v] = anc_unary[p] || tree.outdegree(p) == 1;
        }
        bump(s.degree_hist, deg, 0);
        bump(s.fringe_size_hist, static_cast<std::size_t>(size[v]), hist_cap);
        bump(s.fringe_key_hist, static_cast<std::size_t>(keys[v]), hist_cap);
        bump(s.key_count_hist, nd.keys, 0);
        bump(s.profile, nd.depth, 0);
        std::size_t r = std::min<std::size_t>(rank[v], static_cast<std::size_t>(rank_max) + 1);
        ++s.rank_hist[r];
        s.height = std::max<int>(s.height, static_cast<int>(nd.depth));
        s.total_path_length += nd.depth;
        if (clade) {
            ++s.clade_count;
            if (!anc_clade[v]) ++s.maximal_clade_count;
            s.saturation = std::min<int>(s.saturation, static_cast<int>(nd.depth));
        }
        if (!anc_unary[v]) ++s.unblemished_count;
    }
    return s;
}

LawTable hist_law(const std::vector<std::int64_t>& h, const std::string& label) { return law_from_counts(h, label); }

LawTable fringe_size_hist(const SimTree& tree, bool by_keys) {
    TreeStats s = stats(tree, 0, 0, 0);
    return hist_law(by_keys ? s.fringe_key_hist : s.fringe_size_hist, by_keys ? "fringe-keys" : "fringe-size");
}

MarkedTree extended_fringe_of(const SimTree& tree, int v, int k) {
    MarkedTree out;
    int a = v;
    for (int i = 0; i < k; ++i) {
        if (tree.nodes[a].parent < 0) {
            out.too_shallow = true;
            return out;
        }
        a = tree.nodes[a].parent;
    }
    std::vector<int> order{a};
    std::vector<int> map(tree.size(), -1);
    map[a] = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (int c : tree.children(order[i])) {
            map[c] = static_cast<int>(order.size());
            order.push_back(c);
        }
    }
    for (int u : order) {
        SimNode nd = tree.nodes[u];
        nd.parent = u == a ? -1 : map[nd.parent];
        out.tree.nodes.push_back(nd);
        out.tree.total_weight += nd.keys;
    }
    out.tree.stop_time = tree.stop_time;
    out.tree.marked = map[v];
    out.tree.finalize();
    return out;
}

MarkedTree sample_extended_fringe(const SimTree& tree, int k, Rng& rng) {
    int v = static_cast<int>(uniform_index(rng, static_cast<unsigned>(tree.size())));
    return extended_fringe_of(tree, v, k);
}

MarkedTree sample_sin_tree(const ModelSpec& spec, int k, Rng& rng) {
    double alpha = malthusian(spec).value;
    double tau = exp_rand(rng, alpha);
    while (!(tau > 0)) tau = exp_rand(rng, alpha);
    // ancestors o^{-1}, ..., o^{-k}; o is born at time 0
    std::vector<AncestorLifeHistory> anc;
    std::vector<double> birth{0.0};
    for (int j = 1; j <= k; ++j) {
        double horizon = tau - birth.back();  // measured from the heir's birth
        anc.push_back(sample_ancestor_life(spec, rng, horizon, true));
        birth.push_back(birth.back() - anc.back().heir_age());
    }
    MarkedTree out;
    SimTree& t = out.tree;
    Engine eng(spec, rng, t, kDefaultNodeCap);
    // ids: 0 = o^{-k}, ..., k-1 = o^{-1}, k = o
    for (int j = k; j >= 1; --j) {
        int parent = j == k ? -1 : k - j - 1;
        int slot = j == k ? 0 : anc[j].base.children[anc[j].heir_index - 1].slot;
        eng.add(parent, slot, birth[j], anc[j - 1].base.keys_at(tau - birth[j]));
    }
    int o_slot = k ? anc[0].base.children[anc[0].heir_index - 1].slot : 0;
    int o = eng.add(k ? k - 1 : -1, o_slot, 0.0, spec.initial_keys());
    eng.start(o);
    for (int j = 1; j <= k; ++j) {
        const auto& a = anc[j - 1];
        for (std::size_t i = 0; i < a.base.children.size(); ++i) {
            if (i + 1 == a.heir_index) continue;
            double b = birth[j] + a.base.children[i].age;
            if (b > tau) continue;
            int c = eng.add(k - j, a.base.children[i].slot, b, spec.initial_keys());
            eng.start(c);
        }
    }
    eng.run(StopRule::time(tau));
    t.marked = o;
    t.finalize();
    return out;
}

int sample_restricted(const SimTree& tree, Restricted which, Rng& rng, unsigned arity) {
    const int n = static_cast<int>(tree.size());
    std::vector<double> w(n, 0.0);
    for (int v = 0; v < n; ++v) {
        switch (which) {
            case Restricted::Leaf:
                w[v] = tree.outdegree(v) == 0;
                break;
            case Restricted::KeyOwner:
                w[v] = tree.nodes[v].keys;
                break;
            case Restricted::EmptySlot:
                w[v] = arity > tree.outdegree(v) ? arity - tree.outdegree(v) : 0;
                break;
        }
    }
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0)) throw EmptySelection("no node qualifies for restricted sampling");
    std::discrete_distribution<int> d(w.begin(), w.end());
    return d(rng);
}

SimTree grow_fragmentation_fringe(Rng& rng, std::size_t soft_cap) {
    static const ModelSpec spec = parse_model("frag:binary-uniform");
    double tau = exp_rand(rng, 1.0);
    while (!(tau > 0)) tau = exp_rand(rng, 1.0);
    if (soft_cap == 0) return grow(spec, StopRule::time(tau), rng);
    SimTree tree;
    Engine eng(spec, rng, tree, soft_cap, true);
    int root = eng.add(-1, 0, 0.0, spec.initial_keys());
    eng.start(root);
    eng.run(StopRule::time(tau));
    tree.finalize();
    return tree;
}

void dump_tree(std::ostream& out, const SimTree& tree, const std::string& spec, std::uint64_t seed) {
    out << "# spec=" << spec << " seed=" << seed << " nodes=" << tree.size() << " stop_time=" << tree.stop_time
        << "\n";
    out.precision(17);
    for (std::size_t v = 0; v < tree.size(); ++v) {
        const SimNode& nd = tree.nodes[v];
        out << v << ' ' << nd.parent << ' ' << nd.slot << ' ' << nd.birth << ' ' << nd.keys << '\n';
    }
}

}  // namespace fringe
