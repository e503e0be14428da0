#pragma once

#include <cstdint>
#include <deque>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "gwrc/laws.hpp"

namespace gwrc {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xFFFFFFFFu;

enum class TreeMode : std::uint8_t { Plain, Augmented };

struct NodeRecord {
  NodeId id = kNoNode;
  NodeId parent = kNoNode;          // kNoNode for the root
  NodeId first_child = kNoNode;     // kNoNode until expanded; children are contiguous
  std::uint32_t index = 0;          // iota(x) = deg(x) - 1
  std::uint32_t depth = 0;
  double edge_to_parent = 0.0;      // undefined for the root
  std::uint64_t stream_key = 0;     // derived from (master seed, path)

  bool is_root() const noexcept { return parent == kNoNode; }
  // Children held in the structure: index for interior nodes, index+1 for the
  // root (plain root: k children, index k-1; augmented root: k+1 neighbours,
  // index k).
  std::uint32_t n_children() const noexcept { return is_root() ? index + 1 : index; }
  std::uint32_t offspring_count() const noexcept { return n_children(); }
};

struct Neighbor {
  NodeId id;
  double weight;
  bool to_parent;
};

/// Seeded, memoized, on-demand weighted Galton-Watson tree. Node contents are
/// a pure function of (seed, laws, mode, path from root), so any expansion
/// order -- including concurrent expansion from several threads -- produces
/// identical records. Records are never evicted.
class LazyTree {
 public:
  LazyTree(TreeMode mode, OffspringLaw offspring, ConductanceLawTable table,
           std::uint64_t seed);

  NodeId root() const noexcept { return 0; }
  NodeRecord record(NodeId id) const;

  // Materializes the children of `id` (memoized) and returns them with their
  // edge conductances, in position order.
  std::vector<std::pair<NodeId, double>> expand(NodeId id);

  // Memoized expansion; returns the first child slot (children contiguous).
  NodeId ensure_children(NodeId id);

  // Children with edge conductances into a reusable buffer, one lock.
  void child_edges(NodeId id, std::vector<std::pair<NodeId, double>>& out);

  // Single-lock neighbor gather for walk steps: parent edge first (when
  // present), then children in position order. Expands `id` if needed.
  void neighbors(NodeId id, std::vector<Neighbor>& out);

  // Sum of edge conductances at `id` (expands it).
  double pi(NodeId id);

  TreeMode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const OffspringLaw& offspring() const noexcept { return offspring_; }
  const ConductanceLawTable& table() const noexcept { return table_; }
  std::size_t materialized() const;

 private:
  NodeId expand_locked(NodeId id);

  TreeMode mode_;
  OffspringLaw offspring_;
  ConductanceLawTable table_;
  std::uint64_t seed_;
  mutable std::shared_mutex mu_;
  std::deque<NodeRecord> nodes_;
};

/// Fully materialized snapshot: a finite weighted tree with per-node boundary
/// flags marking truncation leaves. Node numbering is the BFS discovery order
/// of construction and is preserved by rerooting.
class FiniteWeightedTree {
 public:
  struct Link {
    std::uint32_t to;
    double weight;
    bool operator==(const Link&) const = default;
  };

  static FiniteWeightedTree from_lazy(LazyTree& tree, std::uint32_t depth,
                                      std::size_t node_cap);

  // Hand-built trees for tests and oracles: parents[i] < i (root = 0),
  // weights[i] is the edge to the parent, boundary flags per node. `index`
  // defaults to view degree - 1 when not supplied.
  static FiniteWeightedTree from_parts(const std::vector<std::int64_t>& parents,
                                       const std::vector<double>& weights,
                                       const std::vector<bool>& boundary,
                                       const std::vector<std::uint32_t>& index = {});

  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(parent_.size()); }
  std::uint32_t root() const noexcept { return root_; }

  std::int64_t parent(std::uint32_t v) const { return parent_[v]; }
  double edge_to_parent(std::uint32_t v) const { return edge_[v]; }
  std::uint32_t depth(std::uint32_t v) const { return depth_[v]; }
  std::uint32_t index(std::uint32_t v) const { return index_[v]; }
  bool boundary(std::uint32_t v) const { return boundary_[v]; }
  const std::vector<Link>& links(std::uint32_t v) const { return adj_[v]; }
  std::vector<std::uint32_t> children(std::uint32_t v) const;

  double pi(std::uint32_t v) const;
  std::size_t edge_count() const noexcept { return parent_.size() - 1; }

  // Same underlying weighted graph, parent/child orientation recomputed from
  // `new_root`. Node ids are unchanged, so rerooting twice restores the
  // original view exactly.
  FiniteWeightedTree rerooted(std::uint32_t new_root) const;

  std::string to_json() const;

  bool operator==(const FiniteWeightedTree&) const = default;

 private:
  void orient_from(std::uint32_t new_root);

  std::uint32_t root_ = 0;
  std::vector<std::int64_t> parent_;   // -1 for root
  std::vector<double> edge_;           // edge to parent, 0 for root
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint32_t> index_;
  std::vector<bool> boundary_;
  std::vector<std::vector<Link>> adj_;  // fixed undirected adjacency
};

inline constexpr std::size_t kDefaultNodeCap = 10'000'000;

// Snapshot of all nodes with depth <= `depth`. Nodes at the cut carry the
// boundary flag. Throws BudgetExceeded when the expected node count
// (geometric sum of offspring means) overshoots `node_cap`.
FiniteWeightedTree truncate_view(LazyTree& tree, std::uint32_t depth,
                                 std::size_t node_cap = kDefaultNodeCap);

FiniteWeightedTree reroot(const FiniteWeightedTree& view, std::uint32_t new_root);

// Order-independent structural digest over (index, depth, edge bits) of every
// node reachable within `depth`; used by determinism checks.
std::uint64_t traversal_hash(LazyTree& tree, std::uint32_t depth);

// Expected node count of a depth-d snapshot, used for budget pre-checks.
double expected_nodes(const OffspringLaw& offspring, TreeMode mode, std::uint32_t depth);

}  // namespace gwrc
