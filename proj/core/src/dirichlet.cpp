#include "gwrc/dirichlet.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace gwrc {

double dirichlet_conductance(const FiniteWeightedTree& view, Boundary boundary) {
  if (boundary == Boundary::Free) return 0.0;

  const std::uint32_t n = view.size();
  const std::uint32_t root = view.root();
  if (view.boundary(root)) return kInfinite;

  bool any_grounded = false;
  std::vector<int> interior_of(n, -1);
  int n_interior = 0;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (view.boundary(v))
      any_grounded = true;
    else if (v != root)
      interior_of[v] = n_interior++;
  }
  if (!any_grounded) return 0.0;

  // L_II phi_I = -L_IB phi_B with phi(root)=1, phi(grounded)=0.
  Eigen::SparseMatrix<double> lap(n_interior, n_interior);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_interior);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (interior_of[v] < 0) continue;
    int i = interior_of[v];
    double diag = 0.0;
    for (const auto& link : view.links(v)) {
      diag += link.weight;
      if (interior_of[link.to] >= 0)
        trip.emplace_back(i, interior_of[link.to], -link.weight);
      else if (link.to == root)
        rhs[i] += link.weight;  // potential 1
      // grounded neighbours contribute nothing to the rhs
    }
    trip.emplace_back(i, i, diag);
  }
  lap.setFromTriplets(trip.begin(), trip.end());

  Eigen::VectorXd phi;
  if (n_interior > 0) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(lap);
    if (solver.info() != Eigen::Success)
      fail(Errc::MalformedTree, "dirichlet: singular system");
    phi = solver.solve(rhs);
  }

  double current = 0.0;
  for (const auto& link : view.links(root)) {
    double phi_y = view.boundary(link.to) ? 0.0
                   : (interior_of[link.to] >= 0 ? phi[interior_of[link.to]] : 1.0);
    current += link.weight * (1.0 - phi_y);
  }
  return current;
}

std::vector<double> absorption_by_root_branch(const FiniteWeightedTree& view) {
  const std::uint32_t n = view.size();
  const std::uint32_t root = view.root();
  if (view.boundary(root)) fail(Errc::MalformedTree, "absorption: root is flagged");

  // branch id = which root child each vertex hangs below
  std::vector<std::uint32_t> root_kids = view.children(root);
  std::vector<int> branch(n, -1);
  for (std::size_t j = 0; j < root_kids.size(); ++j) branch[root_kids[j]] = static_cast<int>(j);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (v == root || branch[v] >= 0) continue;
    // parents precede in BFS depth, walk up
    std::uint32_t u = v;
    std::vector<std::uint32_t> path;
    while (branch[u] < 0 && u != root) {
      path.push_back(u);
      u = static_cast<std::uint32_t>(view.parent(u));
    }
    int b = (u == root) ? -1 : branch[u];
    for (std::uint32_t w : path) branch[w] = b;
  }

  std::vector<int> state_of(n, -1);
  int n_states = 0;
  for (std::uint32_t v = 0; v < n; ++v)
    if (!view.boundary(v)) state_of[v] = n_states++;

  // (I - Q) h = R per branch, Q over transient states
  Eigen::SparseMatrix<double> m(n_states, n_states);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<Eigen::VectorXd> rhs(root_kids.size(),
                                   Eigen::VectorXd::Zero(n_states));
  for (std::uint32_t v = 0; v < n; ++v) {
    if (state_of[v] < 0) continue;
    int i = state_of[v];
    double pi_v = view.pi(v);
    for (const auto& link : view.links(v)) {
      double q = link.weight / pi_v;
      if (state_of[link.to] >= 0)
        trip.emplace_back(i, state_of[link.to], -q);
      else if (branch[link.to] >= 0)
        rhs[static_cast<std::size_t>(branch[link.to])][i] += q;
    }
    trip.emplace_back(i, i, 1.0);
  }
  m.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(m);
  if (solver.info() != Eigen::Success)
    fail(Errc::MalformedTree, "absorption: singular system (no boundary?)");

  std::vector<double> out(root_kids.size(), 0.0);
  for (std::size_t j = 0; j < root_kids.size(); ++j) {
    Eigen::VectorXd h = solver.solve(rhs[j]);
    out[j] = h[state_of[root]];
  }
  return out;
}

}  // namespace gwrc
