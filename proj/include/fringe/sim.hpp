#pragma once

#include "fringe/law.hpp"
#include "fringe/model.hpp"
#include "fringe/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fringe {

struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptySelection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimNode {
    int parent = -1;
    int slot = 0;
    double birth = 0;
    unsigned keys = 0;
    unsigned depth = 0;
};

// Arena tree. Parents always have smaller ids than their children, so a reverse
// scan over ids visits children before parents.
struct SimTree {
    std::vector<SimNode> nodes;
    std::vector<int> child_start;  // CSR offsets, size nodes+1
    std::vector<int> child_list;   // children sorted by birth time
    double stop_time = 0;
    std::int64_t total_weight = 0;
    int marked = -1;
    bool truncated = false;  // soft node cap hit; only the root was grown to the end

    std::size_t size() const { return nodes.size(); }
    std::span<const int> children(int v) const {
        return {child_list.data() + child_start[v], child_list.data() + child_start[v + 1]};
    }
    unsigned outdegree(int v) const { return static_cast<unsigned>(child_start[v + 1] - child_start[v]); }
    // Rebuilds child lists and depths from the parent links.
    void finalize();
};

struct StopRule {
    enum Kind { WeightAtLeast, TimeAtMost } kind = WeightAtLeast;
    std::int64_t n = 1;
    double t = 0;

    static StopRule weight(std::int64_t n);
    static StopRule time(double t);
};

constexpr std::size_t kDefaultNodeCap = 100'000'000;

SimTree grow(const ModelSpec& spec, const StopRule& stop, Rng& rng, std::size_t node_cap = kDefaultNodeCap);

struct TreeStats {
    std::vector<std::int64_t> degree_hist;
    std::vector<std::int64_t> fringe_size_hist;  // by node count, capped (last bin = overflow)
    std::vector<std::int64_t> fringe_key_hist;   // by key count, capped
    std::vector<std::int64_t> key_count_hist;
    std::vector<std::int64_t> rank_hist;         // rank 0..rank_max, then overflow
    std::vector<std::int64_t> profile;
    int height = 0;
    int saturation = -1;  // -1 when the family has no fixed arity
    std::int64_t total_path_length = 0;
    std::int64_t clade_count = 0;
    std::int64_t maximal_clade_count = 0;
    std::int64_t unblemished_count = 0;
    std::int64_t node_count = 0;
    std::int64_t total_weight = 0;

    // Nodes with rank >= k.
    std::int64_t protected_count(int k) const;
};

constexpr std::size_t kHistCap = 4096;

// `arity` is the full outdegree m for clade/saturation purposes (0 = not m-ary).
TreeStats stats(const SimTree& tree, int rank_max, unsigned arity, std::size_t hist_cap = kHistCap);

// Empirical law of a histogram.
LawTable hist_law(const std::vector<std::int64_t>& h, const std::string& label);
LawTable fringe_size_hist(const SimTree& tree, bool by_keys = false);

struct MarkedTree {
    SimTree tree;
    bool too_shallow = false;
};

// T^{v,-k} for a uniformly random v.
MarkedTree sample_extended_fringe(const SimTree& tree, int k, Rng& rng);
MarkedTree extended_fringe_of(const SimTree& tree, int v, int k);
// Limit object of the above: ancestors chained through heirs, all stopped at tau ~ Exp(alpha).
MarkedTree sample_sin_tree(const ModelSpec& spec, int k, Rng& rng);

// Leaf: uniform over outdegree-0 nodes. KeyOwner: node of a uniformly random key.
// EmptySlot: parent of a uniformly random external node (needs the arity).
enum class Restricted { Leaf, KeyOwner, EmptySlot };
int sample_restricted(const SimTree& tree, Restricted which, Rng& rng, unsigned arity = 0);

// Sizes have infinite mean (size ~ e^tau, tau ~ Exp(1)). With soft_cap > 0 growth of
// everything but the root stops at that many nodes, so size <= cap and the root degree stay exact.
SimTree grow_fragmentation_fringe(Rng& rng, std::size_t soft_cap = 0);

void dump_tree(std::ostream& out, const SimTree& tree, const std::string& spec, std::uint64_t seed);

}  // namespace fringe
