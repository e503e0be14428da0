#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gwrc/conductance.hpp"
#include "gwrc/tree.hpp"
#include "gwrc/walk.hpp"

namespace gwrc {

enum class SpeedMethod : std::uint8_t { Direct, Formula, Covariance, SrwClosedForm };

const char* method_name(SpeedMethod m) noexcept;

struct SpeedEstimate {
  SpeedMethod method = SpeedMethod::Direct;
  double point = 0.0;
  double ci_halfwidth = 0.0;  // 95%, replica/batch means; bracket widths folded in
  std::uint64_t replicas = 0;
  std::uint64_t steps_or_samples = 0;
  std::map<std::string, double> diagnostics;
};

struct MonteCarloOptions {
  std::uint64_t steps = 100'000;
  std::uint32_t replicas = 200;
  std::uint64_t samples = 50'000;
  double bracket_tol = 1e-3;
  std::uint32_t max_depth = kDefaultMaxDepth;
  std::size_t node_cap = kDefaultNodeCap;
  std::size_t sample_node_cap = 300'000;  // bracket budget per sampled tree
  std::uint32_t confirm_level = 30;
  std::uint64_t checkpoint_every = 0;  // 0: geometric schedule
  std::uint32_t workers = 1;
  std::uint64_t seed = 0;
  TreeMode mode = TreeMode::Augmented;
};

// Closed-form SRW speed sum_k p_k (k-1)/(k+1).
double srw_speed(const OffspringLaw& offspring);

// Mean root conductance weight pi_o/(iota(o)+1); its expectation under the
// augmented measure is gamma.
double root_weight(LazyTree& tree);

// One walk of `steps` per replica on an independent augmented tree; the
// estimate is the replica mean of |X_n|/n.
SpeedEstimate direct_speed(const OffspringLaw& offspring, const ConductanceLawTable& table,
                           const MonteCarloOptions& opts);

// The trajectories behind direct_speed, for checkpoint curves and CSV output.
std::vector<Trajectory> direct_trajectories(const OffspringLaw& offspring,
                                            const ConductanceLawTable& table,
                                            const MonteCarloOptions& opts);

// Replica-mean distance ratio at every checkpoint step shared by the schedule.
std::vector<std::pair<std::uint64_t, double>> checkpoint_mean_ratio(
    const std::vector<Trajectory>& trajectories);

/// One draw of the conductance-formula estimand on an augmented tree.
struct FormulaSample {
  std::uint32_t k = 0;        // root index
  double xi0 = 0.0;           // distinguished root edge
  Interval c_t0_star;         // C(T*_0)
  Interval c_total;           // C(T) = sum_j C(T*_j)
  Interval ratio_term;        // xi0 * C(T*_0)/C(T)
  double ratio_mid = 0.0;     // midpoint of C(T*_0)/C(T)
  double sym_term_mid = 0.0;  // (1/(k+1)) sum_i xi_i C(T*_i)/C(T), midpoints
  double m_weight = 0.0;      // pi_o/(iota+1)
  bool tolerance_met = false;
};

FormulaSample formula_sample(LazyTree& tree, const MonteCarloOptions& opts);

std::vector<FormulaSample> formula_samples(const OffspringLaw& offspring,
                                           const ConductanceLawTable& table,
                                           const MonteCarloOptions& opts);

// Pure assemblers over an existing sample stream, so one stream can feed both
// estimators (the covariance route reuses the formula samples).
SpeedEstimate formula_estimate(const std::vector<FormulaSample>& samples, double gamma);
SpeedEstimate covariance_estimate(const std::vector<FormulaSample>& samples, double gamma,
                                  double v_srw);

// v = 1 - (2/gamma) E[xi0 C(T*_0)/C(T)] over fresh augmented trees. Interval
// midpoints feed the point estimate; mean interval width joins the CI in
// quadrature. Throws InfiniteGamma when gamma is infinite.
SpeedEstimate formula_speed(const OffspringLaw& offspring, const ConductanceLawTable& table,
                            const MonteCarloOptions& opts);

// v = v_SRW - (2/gamma) Cov(xi0, C(T*_0)/C(T)) on the same sample stream.
SpeedEstimate covariance_speed(const OffspringLaw& offspring, const ConductanceLawTable& table,
                               const MonteCarloOptions& opts);

struct SlowdownReport {
  double v_srw = 0.0;
  SpeedEstimate formula;
  double covariance = 0.0;
  double covariance_ci = 0.0;
  std::string verdict;  // "SLOWDOWN" | "INCONCLUSIVE"
  std::uint64_t suggested_samples = 0;
};

// Equal-mean nondegenerate slowdown verdict: SLOWDOWN when the formula upper
// confidence bound sits below v_SRW. Throws UnequalMeans / DegenerateLaw when
// the hypothesis is violated.
SlowdownReport slowdown_test(const OffspringLaw& offspring, const ConductanceLawTable& table,
                             const MonteCarloOptions& opts);

struct Ex1Row {
  double eps = 0.0;
  double amp = 0.0;
  double eta = 0.0;
  double v_hat = 0.0;
  double ci = 0.0;
  double reference = 0.0;  // 1/(3(eta+1))
};

// Binary-tree two-point sweep xi in {1, a} with P[a] = eps, stratified on the
// distinguished edge so that rare heavy edges do not dominate the variance.
std::vector<Ex1Row> ex1_curve(const std::vector<double>& epsilons,
                              const std::vector<double>& amps, const MonteCarloOptions& opts);

struct StationarityRow {
  std::string f, g, u;
  double mean_diff = 0.0;
  double ci99 = 0.0;
  std::uint64_t samples = 0;
  bool pass = false;
};

// Paired test of the augmented-tree root/neighbour exchange identity over a
// built-in probe battery; PASS when every 99% CI covers zero.
std::vector<StationarityRow> stationarity_check(const OffspringLaw& offspring,
                                                const ConductanceLawTable& table,
                                                std::uint64_t samples,
                                                const MonteCarloOptions& opts);

}  // namespace gwrc
