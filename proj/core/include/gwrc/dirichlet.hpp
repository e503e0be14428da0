#pragma once

#include <vector>

#include "gwrc/conductance.hpp"
#include "gwrc/tree.hpp"

namespace gwrc {

// Reference conductance of a snapshot by solving the discrete Dirichlet
// problem with sparse linear algebra: root at potential 1, truncation-flagged
// vertices grounded (Wired), conductance = current leaving the root. Under
// Free there is no grounded set and the conductance to infinity is zero.
// Independent of the series/parallel fold; used as its oracle.
double dirichlet_conductance(const FiniteWeightedTree& view, Boundary boundary);

// Absorbing-chain solve on the wired closure: probability that the walk
// started at the root is absorbed at the truncation boundary of each
// root-neighbour branch. Entries sum to 1 when the boundary is reachable.
std::vector<double> absorption_by_root_branch(const FiniteWeightedTree& view);

}  // namespace gwrc
