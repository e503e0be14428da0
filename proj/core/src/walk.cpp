#include "gwrc/walk.hpp"

#include <algorithm>
#include <cmath>

namespace gwrc {

WalkState make_walk(const LazyTree& tree, std::uint64_t walk_seed) {
  WalkState st;
  st.current = tree.root();
  st.rng = RandomStream(walk_seed);
  return st;
}

void step(LazyTree& tree, WalkState& state) {
  tree.neighbors(state.current, state.scratch);
  double pi = 0.0;
  for (const Neighbor& nb : state.scratch) pi += nb.weight;

  double u = state.rng.next_unit() * pi;
  const Neighbor* chosen = &state.scratch.back();
  double acc = 0.0;
  for (const Neighbor& nb : state.scratch) {
    acc += nb.weight;
    if (u < acc) {
      chosen = &nb;
      break;
    }
  }

  if (state.distance == 0) {
    // leaving the root: remember which branch we enter
    state.anchor = static_cast<std::int32_t>(chosen - state.scratch.data());
  }
  if (chosen->to_parent) {
    --state.distance;
  } else {
    ++state.distance;
  }
  if (state.distance == 0) state.anchor = -1;
  state.current = chosen->id;
  ++state.step_count;
}

Trajectory run_trajectory(LazyTree& tree, std::uint64_t n_steps,
                          std::uint64_t checkpoint_every, std::uint64_t walk_seed) {
  WalkState st = make_walk(tree, walk_seed);
  Trajectory out;
  std::uint64_t next_mark = checkpoint_every > 0 ? checkpoint_every : 1;
  for (std::uint64_t n = 1; n <= n_steps; ++n) {
    step(tree, st);
    if (n == 1) out.first_step = st.current;
    const bool scheduled = (n == next_mark);
    if (scheduled || n == n_steps) out.checkpoints.push_back({n, st.distance});
    if (scheduled) next_mark = checkpoint_every > 0 ? next_mark + checkpoint_every : next_mark * 2;
  }
  out.steps = st.step_count;
  out.final_distance = st.distance;
  out.final_branch = st.anchor;
  return out;
}

std::uint64_t hitting_time_level(LazyTree& tree, std::uint32_t level, std::uint64_t cap,
                                 std::uint64_t walk_seed) {
  if (level == 0) return 0;
  WalkState st = make_walk(tree, walk_seed);
  while (st.step_count < cap) {
    step(tree, st);
    if (st.distance == level) return st.step_count;
  }
  return kCapped;
}

std::uint32_t escape_direction(LazyTree& tree, std::uint32_t confirm_level,
                               std::uint64_t walk_seed) {
  WalkState st = make_walk(tree, walk_seed);
  while (true) {
    step(tree, st);
    if (st.distance >= confirm_level) return static_cast<std::uint32_t>(st.anchor);
  }
}

std::vector<std::uint32_t> escape_direction_multi(LazyTree& tree,
                                                  const std::vector<std::uint32_t>& levels,
                                                  std::uint64_t walk_seed) {
  std::vector<std::uint32_t> out;
  out.reserve(levels.size());
  WalkState st = make_walk(tree, walk_seed);
  std::size_t next = 0;
  while (next < levels.size()) {
    step(tree, st);
    while (next < levels.size() && st.distance >= levels[next]) {
      out.push_back(static_cast<std::uint32_t>(st.anchor));
      ++next;
    }
  }
  return out;
}

double reversibility_check(const FiniteWeightedTree& view) {
  return reversibility_check(view, [&view](std::uint32_t x, std::uint32_t y) {
    for (const auto& link : view.links(x))
      if (link.to == y) return link.weight / view.pi(x);
    return 0.0;
  });
}

double reversibility_check(const FiniteWeightedTree& view,
                           const std::function<double(std::uint32_t, std::uint32_t)>& kernel) {
  double defect = 0.0;
  for (std::uint32_t v = 0; v < view.size(); ++v) {
    double pi_v = view.pi(v);
    for (const auto& link : view.links(v)) {
      double flow = pi_v * kernel(v, link.to);
      defect = std::max(defect, std::fabs(flow - link.weight));
      defect = std::max(defect, std::fabs(flow - view.pi(link.to) * kernel(link.to, v)));
    }
  }
  return defect;
}

std::uint32_t view_step(const FiniteWeightedTree& view, std::uint32_t from, RandomStream& rng) {
  const auto& links = view.links(from);
  double pi = 0.0;
  for (const auto& link : links) pi += link.weight;
  double u = rng.next_unit() * pi;
  double acc = 0.0;
  for (const auto& link : links) {
    acc += link.weight;
    if (u < acc) return link.to;
  }
  return links.back().to;
}

}  // namespace gwrc
