#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gwrc/tree.hpp"

namespace gwrc {

/// Conductance-biased walk state on a LazyTree. One state per worker; the
/// underlying tree may be shared.
struct WalkState {
  NodeId current = 0;
  std::uint64_t step_count = 0;
  std::uint32_t distance = 0;
  // root-neighbour position of the branch the walk currently occupies,
  // -1 while at the root
  std::int32_t anchor = -1;
  RandomStream rng;
  std::vector<Neighbor> scratch;
};

WalkState make_walk(const LazyTree& tree, std::uint64_t walk_seed);

// One transition: neighbour y of the current node chosen with probability
// xi(x,y)/pi_x; children materialize on demand; distance changes by exactly 1.
void step(LazyTree& tree, WalkState& state);

struct Checkpoint {
  std::uint64_t step;
  std::uint64_t distance;
};

struct Trajectory {
  std::vector<Checkpoint> checkpoints;
  std::uint64_t steps = 0;
  std::uint32_t final_distance = 0;
  std::int32_t final_branch = -1;   // root-neighbour subtree holding X_n
  NodeId first_step = kNoNode;      // X_1
};

// Walk of n_steps from the root. checkpoint_every > 0 records every that many
// steps; 0 selects the geometric schedule 1, 2, 4, ... (final step always
// recorded).
Trajectory run_trajectory(LazyTree& tree, std::uint64_t n_steps,
                          std::uint64_t checkpoint_every, std::uint64_t walk_seed);

inline constexpr std::uint64_t kCapped = ~0ull;

// First step index at which the distance reaches `level`, or kCapped when not
// reached within `cap` steps. kCapped is a value, not an error: heavy-tailed
// regimes legitimately censor.
std::uint64_t hitting_time_level(LazyTree& tree, std::uint32_t level, std::uint64_t cap,
                                 std::uint64_t walk_seed);

// Index of the root-neighbour subtree holding the walk when it first reaches
// distance `confirm_level` without an intervening return to the root since it
// last left it. Converges to the escape direction as the level grows.
std::uint32_t escape_direction(LazyTree& tree, std::uint32_t confirm_level,
                               std::uint64_t walk_seed);

// As above, sampled at several confirm levels along a single trajectory
// (levels must be increasing). Used by consistency checks.
std::vector<std::uint32_t> escape_direction_multi(LazyTree& tree,
                                                  const std::vector<std::uint32_t>& levels,
                                                  std::uint64_t walk_seed);

// Maximum detailed-balance defect over the edges of a snapshot:
// max |pi_x q(x,y) - xi(x,y)|, |pi_x q(x,y) - pi_y q(y,x)| with q = xi/pi.
double reversibility_check(const FiniteWeightedTree& view);

// Same defect for an arbitrary kernel q(x,y); negative controls feed a
// perturbed kernel through this overload.
double reversibility_check(const FiniteWeightedTree& view,
                           const std::function<double(std::uint32_t, std::uint32_t)>& kernel);

// One conductance-biased step on a finite snapshot (no absorption).
std::uint32_t view_step(const FiniteWeightedTree& view, std::uint32_t from, RandomStream& rng);

}  // namespace gwrc
