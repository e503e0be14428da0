#include "gwrc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <queue>

#include <json.hpp>

namespace gwrc {

namespace {

// Salt layout under a node key: low values are reserved for per-node draws,
// children occupy 16 + position.
constexpr std::uint64_t kSaltIndex = 1;
constexpr std::uint64_t kSaltEdge = 2;
constexpr std::uint64_t kSaltRoot = 3;
constexpr std::uint64_t kChildBase = 16;

std::uint32_t draw_index(std::uint64_t node_key, const OffspringLaw& law) {
  RandomStream rs(derive_key(node_key, kSaltIndex));
  return law.sample(rs);
}

double draw_edge(std::uint64_t child_key, const ConductanceLawTable& table,
                 std::uint32_t parent_index, std::uint32_t child_index) {
  RandomStream rs(derive_key(child_key, kSaltEdge));
  return table.sample(parent_index, child_index, rs);
}

}  // namespace

LazyTree::LazyTree(TreeMode mode, OffspringLaw offspring, ConductanceLawTable table,
                   std::uint64_t seed)
    : mode_(mode), offspring_(std::move(offspring)), table_(std::move(table)), seed_(seed) {
  std::uint64_t root_key =
      derive_key(derive_key(mix64(seed), mode == TreeMode::Augmented ? 1 : 2), kSaltRoot);
  std::uint32_t k = draw_index(root_key, offspring_);

  NodeRecord root;
  root.id = 0;
  root.parent = kNoNode;
  root.depth = 0;
  root.stream_key = root_key;
  // Augmented root: index k, k+1 neighbour subtrees. Plain root: k children,
  // graph index k-1.
  root.index = mode == TreeMode::Augmented ? k : k - 1;
  nodes_.push_back(root);
}

NodeRecord LazyTree::record(NodeId id) const {
  std::shared_lock lk(mu_);
  if (id >= nodes_.size()) fail(Errc::NodeUnknown, "node " + std::to_string(id) + " not materialized");
  return nodes_[id];
}

NodeId LazyTree::expand_locked(NodeId id) {
  if (id >= nodes_.size()) fail(Errc::NodeUnknown, "node " + std::to_string(id) + " not materialized");
  NodeRecord& rec = nodes_[id];
  if (rec.first_child != kNoNode) return rec.first_child;

  const std::uint32_t n = rec.n_children();
  const NodeId first = static_cast<NodeId>(nodes_.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint64_t child_key = derive_key(rec.stream_key, kChildBase + i);
    NodeRecord child;
    child.id = first + i;
    child.parent = id;
    child.depth = rec.depth + 1;
    child.stream_key = child_key;
    // Offspring count fixes the child's index first; the edge law is keyed by
    // both endpoint indices.
    child.index = draw_index(child_key, offspring_);
    child.edge_to_parent = draw_edge(child_key, table_, rec.index, child.index);
    nodes_.push_back(child);
  }
  nodes_[id].first_child = first;
  return first;
}

std::vector<std::pair<NodeId, double>> LazyTree::expand(NodeId id) {
  std::vector<std::pair<NodeId, double>> out;
  child_edges(id, out);
  return out;
}

NodeId LazyTree::ensure_children(NodeId id) {
  {
    std::shared_lock lk(mu_);
    if (id >= nodes_.size())
      fail(Errc::NodeUnknown, "node " + std::to_string(id) + " not materialized");
    if (nodes_[id].first_child != kNoNode) return nodes_[id].first_child;
  }
  std::unique_lock lk(mu_);
  return expand_locked(id);
}

void LazyTree::child_edges(NodeId id, std::vector<std::pair<NodeId, double>>& out) {
  NodeId first = ensure_children(id);
  out.clear();
  std::shared_lock lk(mu_);
  const std::uint32_t n = nodes_[id].n_children();
  for (std::uint32_t i = 0; i < n; ++i)
    out.emplace_back(first + i, nodes_[first + i].edge_to_parent);
}

void LazyTree::neighbors(NodeId id, std::vector<Neighbor>& out) {
  NodeId first = ensure_children(id);
  out.clear();
  std::shared_lock lk(mu_);
  const NodeRecord& rec = nodes_[id];
  if (!rec.is_root()) out.push_back({rec.parent, rec.edge_to_parent, true});
  for (std::uint32_t i = 0; i < rec.n_children(); ++i)
    out.push_back({first + i, nodes_[first + i].edge_to_parent, false});
}

double LazyTree::pi(NodeId id) {
  std::vector<Neighbor> buf;
  neighbors(id, buf);
  double s = 0.0;
  for (const Neighbor& nb : buf) s += nb.weight;
  return s;
}

std::size_t LazyTree::materialized() const {
  std::shared_lock lk(mu_);
  return nodes_.size();
}

double expected_nodes(const OffspringLaw& offspring, TreeMode mode, std::uint32_t depth) {
  const double mu = offspring.mean();
  const double width0 = mode == TreeMode::Augmented ? mu + 1.0 : mu;
  double total = 1.0, level = 1.0;
  for (std::uint32_t d = 1; d <= depth; ++d) {
    level *= (d == 1 ? width0 : mu);
    total += level;
    if (total > 1e18) return total;
  }
  return total;
}

FiniteWeightedTree FiniteWeightedTree::from_lazy(LazyTree& tree, std::uint32_t depth,
                                                 std::size_t node_cap) {
  FiniteWeightedTree view;
  std::vector<NodeId> lazy_of;  // view id -> lazy id
  lazy_of.push_back(tree.root());
  view.parent_.push_back(-1);
  view.edge_.push_back(0.0);
  view.depth_.push_back(0);
  view.index_.push_back(tree.record(tree.root()).index);
  view.boundary_.push_back(depth == 0);

  for (std::uint32_t v = 0; v < lazy_of.size(); ++v) {
    if (view.depth_[v] >= depth) continue;
    for (const auto& [cid, w] : tree.expand(lazy_of[v])) {
      if (lazy_of.size() >= node_cap * 4)
        fail(Errc::BudgetExceeded, "snapshot exceeded hard node cap");
      NodeRecord rec = tree.record(cid);
      lazy_of.push_back(cid);
      view.parent_.push_back(v);
      view.edge_.push_back(w);
      view.depth_.push_back(view.depth_[v] + 1);
      view.index_.push_back(rec.index);
      view.boundary_.push_back(rec.depth == depth);
    }
  }

  view.adj_.resize(view.size());
  for (std::uint32_t v = 1; v < view.size(); ++v) {
    auto p = static_cast<std::uint32_t>(view.parent_[v]);
    view.adj_[p].push_back({v, view.edge_[v]});
    view.adj_[v].push_back({p, view.edge_[v]});
  }
  view.root_ = 0;
  return view;
}

FiniteWeightedTree truncate_view(LazyTree& tree, std::uint32_t depth, std::size_t node_cap) {
  double expected = expected_nodes(tree.offspring(), tree.mode(), depth);
  if (expected > static_cast<double>(node_cap))
    fail(Errc::BudgetExceeded, "expected " + std::to_string(expected) + " nodes at depth " +
                               std::to_string(depth) + ", cap " + std::to_string(node_cap));
  return FiniteWeightedTree::from_lazy(tree, depth, node_cap);
}

FiniteWeightedTree FiniteWeightedTree::from_parts(const std::vector<std::int64_t>& parents,
                                                  const std::vector<double>& weights,
                                                  const std::vector<bool>& boundary,
                                                  const std::vector<std::uint32_t>& index) {
  const std::size_t n = parents.size();
  if (weights.size() != n || boundary.size() != n || n == 0 || parents[0] != -1)
    fail(Errc::MalformedTree, "from_parts: inconsistent arrays");
  FiniteWeightedTree view;
  view.parent_ = parents;
  view.edge_ = weights;
  view.boundary_.assign(boundary.begin(), boundary.end());
  view.depth_.assign(n, 0);
  view.adj_.resize(n);
  for (std::size_t v = 1; v < n; ++v) {
    if (parents[v] < 0 || static_cast<std::size_t>(parents[v]) >= v)
      fail(Errc::MalformedTree, "from_parts: parents must precede children");
    if (!(weights[v] > 0.0)) fail(Errc::MalformedTree, "from_parts: nonpositive edge weight");
    auto p = static_cast<std::uint32_t>(parents[v]);
    view.depth_[v] = view.depth_[p] + 1;
    view.adj_[p].push_back({static_cast<std::uint32_t>(v), weights[v]});
    view.adj_[v].push_back({p, weights[v]});
  }
  if (index.empty()) {
    view.index_.resize(n);
    for (std::size_t v = 0; v < n; ++v)
      view.index_[v] = static_cast<std::uint32_t>(view.adj_[v].size()) -
                       (view.adj_[v].empty() ? 0 : 1);
  } else {
    if (index.size() != n) fail(Errc::MalformedTree, "from_parts: index size mismatch");
    view.index_ = index;
  }
  view.root_ = 0;
  return view;
}

std::vector<std::uint32_t> FiniteWeightedTree::children(std::uint32_t v) const {
  std::vector<std::uint32_t> out;
  for (const Link& l : adj_[v])
    if (parent_[l.to] == static_cast<std::int64_t>(v)) out.push_back(l.to);
  return out;
}

double FiniteWeightedTree::pi(std::uint32_t v) const {
  double s = 0.0;
  for (const Link& l : adj_[v]) s += l.weight;
  return s;
}

void FiniteWeightedTree::orient_from(std::uint32_t new_root) {
  const std::uint32_t n = size();
  std::vector<std::int64_t> parent(n, -2);
  std::vector<double> edge(n, 0.0);
  std::vector<std::uint32_t> depth(n, 0);
  std::queue<std::uint32_t> q;
  parent[new_root] = -1;
  q.push(new_root);
  while (!q.empty()) {
    std::uint32_t v = q.front();
    q.pop();
    for (const Link& l : adj_[v]) {
      if (parent[l.to] != -2) continue;
      parent[l.to] = v;
      edge[l.to] = l.weight;
      depth[l.to] = depth[v] + 1;
      q.push(l.to);
    }
  }
  parent_ = std::move(parent);
  edge_ = std::move(edge);
  depth_ = std::move(depth);
  root_ = new_root;
}

FiniteWeightedTree FiniteWeightedTree::rerooted(std::uint32_t new_root) const {
  if (new_root >= size()) fail(Errc::NodeUnknown, "reroot: node out of range");
  FiniteWeightedTree out = *this;
  out.orient_from(new_root);
  return out;
}

FiniteWeightedTree reroot(const FiniteWeightedTree& view, std::uint32_t new_root) {
  return view.rerooted(new_root);
}

std::string FiniteWeightedTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json edges = nlohmann::json::array();
  for (std::uint32_t v = 0; v < size(); ++v) {
    nlohmann::json n;
    n["id"] = v;
    if (parent_[v] < 0)
      n["parent"] = nullptr;
    else
      n["parent"] = parent_[v];
    n["index"] = index_[v];
    n["depth"] = depth_[v];
    nodes.push_back(n);
    if (parent_[v] >= 0)
      edges.push_back({{"a", parent_[v]}, {"b", v}, {"xi", edge_[v]}});
  }
  nlohmann::json j;
  j["nodes"] = nodes;
  j["edges"] = edges;
  return j.dump();
}

std::uint64_t traversal_hash(LazyTree& tree, std::uint32_t depth) {
  // FNV-1a over a canonical DFS byte stream.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mixin = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  struct Item {
    NodeId id;
    std::uint32_t depth_left;
  };
  std::vector<Item> stack{{tree.root(), depth}};
  while (!stack.empty()) {
    auto [id, left] = stack.back();
    stack.pop_back();
    NodeRecord rec = tree.record(id);
    mixin(&rec.index, sizeof rec.index);
    if (!rec.is_root()) {
      std::uint64_t bits;
      std::memcpy(&bits, &rec.edge_to_parent, sizeof bits);
      mixin(&bits, sizeof bits);
    }
    if (left == 0) continue;
    auto kids = tree.expand(id);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it)
      stack.push_back({it->first, left - 1});
  }
  return h;
}

}  // namespace gwrc
