#include "gwrc/conductance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace gwrc {

namespace {

double fold_view(const FiniteWeightedTree& view, std::uint32_t v, Boundary boundary) {
  const std::vector<std::uint32_t> kids = view.children(v);
  double c = 0.0;
  for (std::uint32_t child : kids)
    c += series(view.edge_to_parent(child), fold_view(view, child, boundary));
  if (view.boundary(v)) return boundary == Boundary::Wired ? kInfinite : c;
  if (kids.empty() && view.index(v) > 0)
    fail(Errc::MalformedTree, "leaf " + std::to_string(v) +
                                  " has positive index but no boundary flag");
  return c;
}

struct FoldCtx {
  LazyTree& tree;
  double seed;
  std::size_t visited = 0;
  std::size_t abort_at = 0;
  std::vector<std::vector<std::pair<NodeId, double>>> scratch;
};

// Pair fold (free-seeded lower, wired upper) over the children of `v`, to
// relative depth `depth_left`. The walk direction is always parent -> child,
// so the root-neighbour case and interior subtrees share this path.
std::pair<double, double> fold_down(FoldCtx& ctx, NodeId v, std::uint32_t depth_left,
                                    std::uint32_t level) {
  if (depth_left == 0) return {ctx.seed, kInfinite};
  if (++ctx.visited > ctx.abort_at)
    fail(Errc::BudgetExceeded, "conductance fold exceeded hard node cap");
  auto& kids = ctx.scratch[level];
  ctx.tree.child_edges(v, kids);
  double lo = 0.0, hi = 0.0;
  const std::size_t n = kids.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto [cid, w] = kids[i];  // deeper levels use their own scratch slot
    auto [clo, chi] = fold_down(ctx, cid, depth_left - 1, level + 1);
    lo += series(w, clo);
    hi += series(w, chi);
  }
  return {lo, hi};
}

std::pair<double, double> pair_fold(LazyTree& tree, NodeId v, std::uint32_t depth,
                                    double seed, std::size_t cap) {
  FoldCtx ctx{tree, seed};
  ctx.abort_at = cap * 4 + 64;
  ctx.scratch.resize(depth + 1);
  return fold_down(ctx, v, depth, 0);
}

// Generic variant that walks every direction except `from`; only the
// re-rooted probes need it.
std::pair<double, double> fold_around(FoldCtx& ctx, std::vector<std::vector<Neighbor>>& nbuf,
                                      NodeId v, NodeId from, std::uint32_t depth_left,
                                      std::uint32_t level) {
  if (depth_left == 0) return {ctx.seed, kInfinite};
  if (++ctx.visited > ctx.abort_at)
    fail(Errc::BudgetExceeded, "conductance fold exceeded hard node cap");
  auto& nbrs = nbuf[level];
  ctx.tree.neighbors(v, nbrs);
  double lo = 0.0, hi = 0.0;
  const std::size_t n = nbrs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Neighbor nb = nbrs[i];
    if (nb.id == from) continue;
    auto [clo, chi] = fold_around(ctx, nbuf, nb.id, v, depth_left - 1, level + 1);
    lo += series(nb.weight, clo);
    hi += series(nb.weight, chi);
  }
  return {lo, hi};
}

bool met(double lower, double upper, double tol) {
  return (upper - lower) / std::max(upper, kRelWidthFloor) <= tol;
}

double expected_subtree_nodes(const OffspringLaw& law, std::uint32_t depth) {
  const double mu = law.mean();
  double total = 1.0, level = 1.0;
  for (std::uint32_t d = 1; d <= depth; ++d) {
    level *= mu;
    total += level;
    if (total > 1e18) break;
  }
  return total;
}

}  // namespace

double effective_conductance_exact(const FiniteWeightedTree& view, Boundary boundary) {
  return fold_view(view, view.root(), boundary);
}

std::vector<double> root_split_conductance(const FiniteWeightedTree& view, Boundary boundary) {
  std::vector<double> out;
  for (std::uint32_t child : view.children(view.root()))
    out.push_back(series(view.edge_to_parent(child), fold_view(view, child, boundary)));
  return out;
}

double free_fold_seed(const OffspringLaw& offspring, const ConductanceLawTable& table) {
  if (offspring.min_k() < 2) return 0.0;
  double xi_min = kInfinite;
  for (const auto& [k, pk] : offspring.support())
    for (const auto& [m, pm] : offspring.support())
      xi_min = std::min(xi_min, table(k, m).min_support());
  if (!(xi_min > 0.0) || is_infinite(xi_min)) return 0.0;
  return xi_min * static_cast<double>(offspring.min_k() - 1);
}

namespace {

// Deepening ladder shared by the public bracket and the estimator internals.
// `next_depth` maps the current depth to the next round's depth.
CondInterval bracket_ladder(LazyTree& tree, NodeId subtree_root, double tolerance,
                            std::uint32_t max_depth, std::size_t node_cap,
                            const std::function<std::uint32_t(std::uint32_t)>& next_depth) {
  if (!(tolerance > 0.0)) fail(Errc::BadParameter, "conductance_bounds: tolerance must be > 0");

  const NodeRecord rec = tree.record(subtree_root);
  const double seed = free_fold_seed(tree.offspring(), tree.table());
  const bool whole_tree = rec.is_root();

  auto round_nodes = [&](std::uint32_t d) {
    return whole_tree ? expected_nodes(tree.offspring(), tree.mode(), d)
                      : expected_subtree_nodes(tree.offspring(), d);
  };

  if (round_nodes(std::min(next_depth(0), max_depth)) > static_cast<double>(node_cap))
    fail(Errc::BudgetExceeded, "conductance_bounds: node cap too small for one round");

  CondInterval out;
  out.lower = seed;
  std::uint32_t d = 0;
  while (d < max_depth) {
    std::uint32_t next = std::min(next_depth(d), max_depth);
    if (round_nodes(next) > static_cast<double>(node_cap)) break;
    auto [lo, hi] = pair_fold(tree, subtree_root, next, seed, node_cap);
    d = next;
    out.upper = std::min(out.upper, hi);
    out.lower = std::min(std::max(out.lower, lo), out.upper);
    out.depth_used = d;
    if (met(out.lower, out.upper, tolerance)) {
      out.tolerance_met = true;
      break;
    }
  }
  return out;
}

// Coarse start, fine finish: 5, 10, 12, 14, ... Depth rounds cost their full
// subtree, so overshooting the stopping depth by 5 wastes ~30x the work the
// last two levels would.
std::uint32_t estimator_schedule(std::uint32_t d) { return d < 10 ? d + 5 : d + 2; }

}  // namespace

CondInterval conductance_bounds(LazyTree& tree, NodeId subtree_root, double tolerance,
                                std::uint32_t max_depth, std::size_t node_cap,
                                std::uint32_t stride) {
  const std::uint32_t step = stride == 0 ? kDepthStride : stride;
  return bracket_ladder(tree, subtree_root, tolerance, max_depth, node_cap,
                        [step](std::uint32_t d) { return d + step; });
}

RootSplit root_star_bounds(LazyTree& tree, double tolerance, std::uint32_t max_depth,
                           std::size_t node_cap, std::uint32_t stride) {
  RootSplit split;
  auto kids = tree.expand(tree.root());
  split.xi.reserve(kids.size());
  split.subtree.reserve(kids.size());
  split.star.reserve(kids.size());
  const std::size_t per_child_cap = node_cap / std::max<std::size_t>(kids.size(), 1);
  for (const auto& [cid, w] : kids) {
    split.xi.push_back(w);
    split.subtree.push_back(bracket_ladder(tree, cid, tolerance, max_depth, per_child_cap,
                                           estimator_schedule));
    const CondInterval& b = split.subtree.back();
    split.star.push_back({series(w, b.lower), series(w, b.upper)});
  }
  split.total = {0.0, 0.0};
  for (const Interval& s : split.star) {
    split.total.lo += s.lo;
    split.total.hi += s.hi;
  }
  return split;
}

Interval escape_probability(LazyTree& tree, std::uint32_t child_pos, double tolerance,
                            std::uint32_t max_depth, std::size_t node_cap) {
  auto kids = tree.expand(tree.root());
  if (child_pos >= kids.size()) fail(Errc::NodeUnknown, "escape_probability: no such root edge");
  auto [cid, xi] = kids[child_pos];
  CondInterval b = conductance_bounds(tree, cid, tolerance, max_depth, node_cap);
  // eta = C/(xi+C), increasing in C
  double lo = b.lower / (xi + b.lower);
  double hi = is_infinite(b.upper) ? 1.0 : b.upper / (xi + b.upper);
  return {lo, hi};
}

std::vector<Interval> theta_distribution(LazyTree& tree, double tolerance,
                                         std::uint32_t max_depth, std::size_t node_cap) {
  RootSplit split = root_star_bounds(tree, tolerance, max_depth, node_cap);
  double sum_lo = split.total.lo, sum_hi = split.total.hi;
  if (!(sum_hi > 0.0))
    fail(Errc::DegenerateDenominator, "theta_distribution: all upper bounds are zero");
  std::vector<Interval> out;
  out.reserve(split.star.size());
  for (const Interval& s : split.star) {
    // ratio is increasing in this subtree's conductance, decreasing in the rest
    double den_lo = s.lo + (sum_hi - s.hi);
    double den_hi = s.hi + (sum_lo - s.lo);
    double lo = den_lo > 0.0 ? s.lo / den_lo : 0.0;
    double hi = den_hi > 0.0 ? s.hi / den_hi : 1.0;
    out.push_back({std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)});
  }
  return out;
}

Interval conductance_around(LazyTree& tree, NodeId center, std::uint32_t depth) {
  FoldCtx ctx{tree, free_fold_seed(tree.offspring(), tree.table())};
  ctx.abort_at = kDefaultNodeCap;
  std::vector<std::vector<Neighbor>> nbuf(depth + 1);
  auto [lo, hi] = fold_around(ctx, nbuf, center, kNoNode, depth, 0);
  return {lo, hi};
}

}  // namespace gwrc
