#pragma once

#include <cstdint>
#include <vector>

#include "gwrc/tree.hpp"

namespace gwrc {

enum class Boundary : std::uint8_t { Wired, Free };

// Two-resistor series step: 1/(1/xi + 1/c) with the conventions 1/inf = 0 and
// c <= 0 => 0.
inline double series(double xi, double c) noexcept {
  if (!(c > 0.0)) return 0.0;
  if (is_infinite(c)) return xi;
  return 1.0 / (1.0 / xi + 1.0 / c);
}

/// Certified bracket on the effective conductance to infinity of one subtree.
/// `lower` comes from the free-boundary truncation (unexplored subtrees
/// replaced by the worst continuation the laws allow), `upper` from the wired
/// truncation (unexplored subtrees shorted to infinity). Deepening can only
/// raise `lower` and lower `upper`.
struct CondInterval {
  double lower = 0.0;
  double upper = kInfinite;
  std::uint32_t depth_used = 0;
  bool tolerance_met = false;

  double midpoint() const noexcept { return 0.5 * (lower + upper); }
  double halfwidth() const noexcept { return 0.5 * (upper - lower); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
  double halfwidth() const noexcept { return 0.5 * (hi - lo); }
};

// Post-order series/parallel fold over a finite snapshot. A node carrying the
// truncation flag has an unexplored continuation: shorted to infinity under
// Wired, conducting nothing under Free. Throws MalformedTree when a leaf with
// a positive generation index lacks its boundary flag.
double effective_conductance_exact(const FiniteWeightedTree& view, Boundary boundary);

// Per-root-neighbour conductances C(T*_j) (subtree plus its root edge) of a
// snapshot; their sum is the root conductance.
std::vector<double> root_split_conductance(const FiniteWeightedTree& view, Boundary boundary);

// Largest c such that every possible subtree of these laws has effective
// conductance >= c: min offspring k0 and essential-infimum edge weight w0 give
// w0*(k0-1) for k0 >= 2, otherwise 0 (a plain free truncation).
double free_fold_seed(const OffspringLaw& offspring, const ConductanceLawTable& table);

inline constexpr std::uint32_t kDefaultMaxDepth = 60;
inline constexpr std::uint32_t kDepthStride = 5;
inline constexpr double kRelWidthFloor = 1e-300;

// Deepening wired/free bracket for the subtree hanging below `subtree_root`
// (away from its parent; pass the tree root for the whole tree). Stops at the
// requested relative width, at max_depth, or when the node budget would be
// exceeded by another round; the first round must fit or BudgetExceeded is
// thrown.
CondInterval conductance_bounds(LazyTree& tree, NodeId subtree_root, double tolerance,
                                std::uint32_t max_depth = kDefaultMaxDepth,
                                std::size_t node_cap = kDefaultNodeCap,
                                std::uint32_t stride = kDepthStride);

/// Brackets for every root-neighbour subtree of `tree`, assembled into
/// C(T*_j) intervals and their total.
struct RootSplit {
  std::vector<double> xi;               // edge conductances at the root
  std::vector<CondInterval> subtree;    // C(T_j)
  std::vector<Interval> star;           // C(T*_j) = series(xi_j, C(T_j))
  Interval total;                       // sum_j C(T*_j) = C(T)
};

RootSplit root_star_bounds(LazyTree& tree, double tolerance,
                           std::uint32_t max_depth = kDefaultMaxDepth,
                           std::size_t node_cap = kDefaultNodeCap,
                           std::uint32_t stride = kDepthStride);

// Probability that the walk entering subtree j never returns to the root:
// C(T_j)/(xi_j + C(T_j)), by monotone propagation of the subtree bracket.
Interval escape_probability(LazyTree& tree, std::uint32_t child_pos, double tolerance,
                            std::uint32_t max_depth = kDefaultMaxDepth,
                            std::size_t node_cap = kDefaultNodeCap);

// Interval enclosure of P[Theta = j] = C(T*_j)/C(T) for every root neighbour.
std::vector<Interval> theta_distribution(LazyTree& tree, double tolerance,
                                         std::uint32_t max_depth = kDefaultMaxDepth,
                                         std::size_t node_cap = kDefaultNodeCap);

// Bounded-depth bracket of the conductance to infinity seen from `center`
// looking in every direction (the re-rooted tree); used by the stationarity
// probes.
Interval conductance_around(LazyTree& tree, NodeId center, std::uint32_t depth);

}  // namespace gwrc
