// Acceptance suite: one pass/fail line per criterion. Run with no arguments
// for the full battery or with --only N for a single criterion. Exit code is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwrc/conductance.hpp"
#include "gwrc/dirichlet.hpp"
#include "gwrc/parallel.hpp"
#include "gwrc/runner.hpp"
#include "gwrc/speed.hpp"
#include "gwrc/walk.hpp"

using namespace gwrc;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

OffspringLaw binary() { return OffspringLaw::from_map({{2, 1.0}}); }

ConductanceLawTable table_of(ConductanceLaw law) { return ConductanceLawTable(law); }

// Estimates reused between criteria 3-5 and 6 when the whole battery runs.
struct SharedEstimates {
  std::optional<SpeedEstimate> formula_constant;
  std::optional<SpeedEstimate> formula_tp12;
  std::optional<SpeedEstimate> formula_tp0515;
} g_shared;

MonteCarloOptions base_opts(std::uint64_t seed) {
  MonteCarloOptions o;
  o.seed = seed;
  return o;
}

// ---------------------------------------------------------------- criterion 1
bool exact_oracle_equivalence(std::string& detail) {
  double worst = 0.0;
  int trees = 0;

  const std::vector<ConductanceLaw> laws = {
      ConductanceLaw::constant(1.0),        ConductanceLaw::two_point(1.0, 5.0, 0.2),
      ConductanceLaw::exponential(1.0),     ConductanceLaw::lognormal(0.0, 0.6),
      ConductanceLaw::pareto(1.5, 0.5),
  };
  const std::vector<OffspringLaw> offsprings = {
      binary(),
      OffspringLaw::from_map({{1, 0.5}, {2, 0.25}, {3, 0.25}}),
      OffspringLaw::from_map({{1, 0.6}, {4, 0.4}}),
  };

  // 80 sampled snapshots with mixed laws, capped at 1e3 nodes
  for (std::uint64_t i = 0; i < 80; ++i) {
    auto off = offsprings[i % offsprings.size()];
    ConductanceLawTable tab(laws[i % laws.size()]);
    if (i % 2 == 1) tab.set_override(1, 2, laws[(i + 2) % laws.size()]);
    LazyTree tree(i % 3 == 0 ? TreeMode::Plain : TreeMode::Augmented, off, tab, 1000 + i);
    std::uint32_t depth = 8;
    FiniteWeightedTree view = truncate_view(tree, depth, kDefaultNodeCap);
    while (view.size() > 1000 && depth > 1) view = truncate_view(tree, --depth);
    for (Boundary b : {Boundary::Wired, Boundary::Free}) {
      double fold = effective_conductance_exact(view, b);
      double oracle = dirichlet_conductance(view, b);
      worst = std::max(worst, std::fabs(fold - oracle));
    }
    ++trees;
  }

  // 20 hand-built trees with arbitrary structure and flag placement
  RandomStream rng(20250801);
  for (int t = 0; t < 20; ++t) {
    std::size_t n = 50 + static_cast<std::size_t>(rng.next_unit() * 900);
    std::vector<std::int64_t> parents(n, -1);
    std::vector<double> weights(n, 0.0);
    std::vector<bool> flags(n, false);
    for (std::size_t v = 1; v < n; ++v) {
      parents[v] = static_cast<std::int64_t>(rng.next_unit() * double(v));
      weights[v] = 0.05 + 10.0 * rng.next_unit();
      flags[v] = rng.next_unit() < 0.25;
    }
    FiniteWeightedTree view = FiniteWeightedTree::from_parts(parents, weights, flags);
    for (Boundary b : {Boundary::Wired, Boundary::Free}) {
      double fold = effective_conductance_exact(view, b);
      double oracle = dirichlet_conductance(view, b);
      worst = std::max(worst, std::fabs(fold - oracle));
    }
    ++trees;
  }

  detail = std::to_string(trees) + " trees, max |fold - solve| = " + fmt(worst);
  return worst <= 1e-10;
}

// ---------------------------------------------------------------- criterion 2
bool fixed_point_convergence(std::string& detail) {
  bool ok = true;
  detail.clear();
  for (std::uint32_t d : {2u, 3u, 4u}) {
    LazyTree tree(TreeMode::Plain, OffspringLaw::from_map({{d, 1.0}}),
                  table_of(ConductanceLaw::constant(1.0)), 1);
    CondInterval b = conductance_bounds(tree, tree.root(), 1e-6, 60, kDefaultNodeCap, 2);
    const double truth = double(d) - 1.0;
    bool this_ok = b.tolerance_met && b.depth_used <= 60 && b.lower <= truth &&
                   b.upper >= truth && (b.upper - b.lower) <= 1e-6 * truth * 1.0001;
    ok = ok && this_ok;
    detail += (detail.empty() ? "" : "; ") + std::to_string(d) + "-ary: [" + fmt(b.lower) +
              ", " + fmt(b.upper) + "] depth " + std::to_string(b.depth_used);
  }
  return ok;
}

// ---------------------------------------------------------------- criterion 3
bool srw_speed_three_ways(std::string& detail) {
  const double closed = srw_speed(binary());
  bool ok = std::fabs(closed - 1.0 / 3.0) < 1e-15;

  MonteCarloOptions direct_opts = base_opts(33001);
  direct_opts.steps = 100000;
  direct_opts.replicas = 200;
  SpeedEstimate direct = direct_speed(binary(), table_of(ConductanceLaw::constant(1.0)),
                                      direct_opts);
  ok = ok && std::fabs(direct.point - 1.0 / 3.0) < 0.01;

  MonteCarloOptions formula_opts = base_opts(33002);
  formula_opts.samples = 10000;
  SpeedEstimate formula =
      formula_speed(binary(), table_of(ConductanceLaw::constant(1.0)), formula_opts);
  ok = ok && std::fabs(formula.point - 1.0 / 3.0) <= formula.ci_halfwidth;
  g_shared.formula_constant = formula;

  detail = "closed " + fmt(closed) + ", direct " + fmt(direct.point) + " (|d|<0.01), formula " +
           fmt(formula.point) + " +/- " + fmt(formula.ci_halfwidth);
  return ok;
}

// ---------------------------------------------------------------- criterion 4
bool cross_method_consistency(std::string& detail) {
  auto tab = table_of(ConductanceLaw::two_point(1.0, 2.0, 0.5));
  const double gamma = mean_gamma(tab, binary());

  MonteCarloOptions fo = base_opts(44001);
  fo.samples = 50000;
  auto samples = formula_samples(binary(), tab, fo);
  SpeedEstimate formula = formula_estimate(samples, gamma);
  SpeedEstimate covariance = covariance_estimate(samples, gamma, srw_speed(binary()));
  g_shared.formula_tp12 = formula;

  MonteCarloOptions dopts = base_opts(44002);
  dopts.steps = 100000;
  dopts.replicas = 200;
  SpeedEstimate direct = direct_speed(binary(), tab, dopts);

  auto agree = [](const SpeedEstimate& a, const SpeedEstimate& b) {
    return std::fabs(a.point - b.point) <= a.ci_halfwidth + b.ci_halfwidth;
  };
  bool ok = agree(direct, formula) && agree(direct, covariance) && agree(formula, covariance);
  detail = "direct " + fmt(direct.point) + "+/-" + fmt(direct.ci_halfwidth) + ", formula " +
           fmt(formula.point) + "+/-" + fmt(formula.ci_halfwidth) + ", covariance " +
           fmt(covariance.point) + "+/-" + fmt(covariance.ci_halfwidth);
  return ok;
}

// ---------------------------------------------------------------- criterion 5
bool slowdown_verdict(std::string& detail) {
  MonteCarloOptions o = base_opts(55001);
  o.samples = 20000;
  SlowdownReport rep =
      slowdown_test(binary(), table_of(ConductanceLaw::two_point(0.5, 1.5, 0.5)), o);
  g_shared.formula_tp0515 = rep.formula;
  bool ok = rep.verdict == "SLOWDOWN" &&
            rep.formula.point + rep.formula.ci_halfwidth < rep.v_srw &&
            rep.covariance - rep.covariance_ci > 0.0;
  detail = "verdict " + rep.verdict + ", v " + fmt(rep.formula.point) + "+/-" +
           fmt(rep.formula.ci_halfwidth) + " vs v_srw " + fmt(rep.v_srw) + ", cov " +
           fmt(rep.covariance) + "+/-" + fmt(rep.covariance_ci);
  return ok;
}

// ---------------------------------------------------------------- criterion 6
bool formula_positivity(std::string& detail) {
  struct Case {
    const char* name;
    ConductanceLaw law;
    std::optional<SpeedEstimate>* cached;
  };
  Case cases[] = {
      {"constant(1)", ConductanceLaw::constant(1.0), &g_shared.formula_constant},
      {"two_point(1,2,.5)", ConductanceLaw::two_point(1.0, 2.0, 0.5), &g_shared.formula_tp12},
      {"two_point(.5,1.5,.5)", ConductanceLaw::two_point(0.5, 1.5, 0.5),
       &g_shared.formula_tp0515},
  };
  bool ok = true;
  detail.clear();
  for (auto& c : cases) {
    SpeedEstimate est;
    if (c.cached->has_value()) {
      est = **c.cached;
    } else {
      MonteCarloOptions o = base_opts(66001);
      o.samples = 10000;
      est = formula_speed(binary(), table_of(c.law), o);
    }
    double lower_ci = est.point - est.ci_halfwidth;
    ok = ok && lower_ci > 0.0;
    // equivalent strict form: sample mean of (2/gamma) * ratio terms < 1
    double gamma = est.diagnostics.at("gamma");
    ok = ok && (2.0 / gamma) * est.diagnostics.at("mean_ratio_term") < 1.0;
    detail += (detail.empty() ? "" : "; ") + std::string(c.name) + " lower CI " +
              fmt(lower_ci);
  }
  return ok;
}

// ---------------------------------------------------------------- criterion 7
bool escape_direction_law(std::string& detail) {
  auto off = OffspringLaw::from_map({{2, 0.5}, {3, 0.5}});
  auto tab = table_of(ConductanceLaw::two_point(1.0, 2.0, 0.5));
  const std::uint64_t walks = 10000;
  const std::uint32_t confirm = 30;
  int passed = 0;
  double worst_excess = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    LazyTree tree(TreeMode::Augmented, off, tab, derive_key(77000, t));
    auto intervals = theta_distribution(tree, 1e-3);
    std::vector<std::uint32_t> hits(walks);
    parallel_for_index(walks, 1, [&](std::uint64_t w) {
      hits[w] = escape_direction(tree, confirm, derive_key(derive_key(77100, t), w));
    });
    std::vector<double> freq(intervals.size(), 0.0);
    for (std::uint32_t h : hits) freq[h] += 1.0 / double(walks);

    bool tree_ok = true;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
      double se = std::sqrt(std::max(freq[j] * (1.0 - freq[j]), 1.0 / double(walks)) /
                            double(walks));
      double lo = intervals[j].lo - 4.0 * se;
      double hi = intervals[j].hi + 4.0 * se;
      if (freq[j] < lo || freq[j] > hi) {
        tree_ok = false;
        worst_excess = std::max(worst_excess,
                                std::max(lo - freq[j], freq[j] - hi) / se);
      }
    }
    if (tree_ok) ++passed;
  }
  detail = std::to_string(passed) + "/20 trees inside widened intervals";
  if (passed < 20) detail += ", worst excess " + fmt(worst_excess) + " se";
  return passed >= 19;
}

// ---------------------------------------------------------------- criterion 8
bool ex1_trend(std::string& detail) {
  MonteCarloOptions o = base_opts(88001);
  o.samples = 20000;
  auto rows = ex1_curve({1e-4, 0.1, 0.01, 0.001, 0.1},
                        {10.0, 10.0, 100.0, 1000.0, 1000.0}, o);
  const double third = 1.0 / 3.0, sixth = 1.0 / 6.0;

  bool ok = std::fabs(rows[0].v_hat - third) < 0.01;
  double d1 = std::fabs(rows[1].v_hat - sixth);
  double d2 = std::fabs(rows[2].v_hat - sixth);
  double d3 = std::fabs(rows[3].v_hat - sixth);
  ok = ok && d1 >= d2 - 1e-3 && d2 >= d3 - 1e-3;  // monotone toward 1/6
  ok = ok && d3 < 0.03;
  ok = ok && rows[4].v_hat < 0.05;

  detail = "eps*a->0: " + fmt(rows[0].v_hat) + "; eta=1: " + fmt(rows[1].v_hat) + " > " +
           fmt(rows[2].v_hat) + " > " + fmt(rows[3].v_hat) + " -> 1/6; eps*a=100: " +
           fmt(rows[4].v_hat);
  return ok;
}

// ---------------------------------------------------------------- criterion 9
bool zero_speed_regime(std::string& detail) {
  auto tab = table_of(ConductanceLaw::pareto(0.5, 1.0));

  MonteCarloOptions o = base_opts(99001);
  o.steps = 100000;
  o.replicas = 100;
  o.checkpoint_every = 1000;
  auto runs = direct_trajectories(binary(), tab, o);
  auto curve = checkpoint_mean_ratio(runs);
  double m3 = 0, m4 = 0, m5 = 0;
  for (const auto& [step, mean] : curve) {
    if (step == 1000) m3 = mean;
    if (step == 10000) m4 = mean;
    if (step == 100000) m5 = mean;
  }
  bool ok = m3 > m4 && m4 > m5;

  // median hitting-time slope grows from L=50 to L=200 (capped values count
  // as +infinity; the median stays well defined)
  auto median_slope = [&](std::uint32_t level, std::uint64_t salt) {
    std::vector<double> slopes(100);
    parallel_for_index(100, 1, [&](std::uint64_t r) {
      LazyTree tree(TreeMode::Augmented, binary(), tab,
                    derive_key(derive_key(99100, salt), r));
      std::uint64_t hit = hitting_time_level(tree, level, 2'000'000,
                                             derive_key(derive_key(99200, salt), r));
      slopes[r] = hit == kCapped ? kInfinite : double(hit) / double(level);
    });
    std::sort(slopes.begin(), slopes.end());
    return slopes[slopes.size() / 2];
  };
  double s50 = median_slope(50, 1);
  double s200 = median_slope(200, 2);
  ok = ok && s200 > s50;

  detail = "mean ratio " + fmt(m3) + " > " + fmt(m4) + " > " + fmt(m5) +
           "; median T_L/L: " + fmt(s50) + " (L=50) -> " + fmt(s200) + " (L=200)";
  return ok;
}

// --------------------------------------------------------------- criterion 10
bool stationarity_and_reversibility(std::string& detail) {
  auto off = OffspringLaw::from_map({{1, 0.5}, {3, 0.5}});
  auto tab = table_of(ConductanceLaw::exponential(0.5));  // gamma = 2

  MonteCarloOptions o = base_opts(101001);
  auto rows = stationarity_check(off, tab, 100000, o);
  bool ok = true;
  int failing = 0;
  for (const auto& r : rows)
    if (!r.pass) {
      ok = false;
      ++failing;
    }

  double worst_defect = 0.0;
  const std::vector<ConductanceLaw> laws = {
      ConductanceLaw::constant(2.0), ConductanceLaw::two_point(1.0, 4.0, 0.25),
      ConductanceLaw::exponential(1.0), ConductanceLaw::lognormal(0.1, 0.7),
      ConductanceLaw::pareto(1.2, 1.0)};
  for (std::uint64_t i = 0; i < 25; ++i) {
    LazyTree tree(TreeMode::Augmented, off, table_of(laws[i % laws.size()]),
                  derive_key(101100, i));
    FiniteWeightedTree view = truncate_view(tree, 5);
    worst_defect = std::max(worst_defect, reversibility_check(view));
  }
  ok = ok && worst_defect <= 1e-12;

  std::vector<double> weights(100000);
  parallel_for_index(weights.size(), 1, [&](std::uint64_t i) {
    LazyTree tree(TreeMode::Augmented, off, tab, derive_key(101200, i));
    weights[i] = root_weight(tree);
  });
  double mean = 0.0;
  for (double w : weights) mean += w;
  mean /= double(weights.size());
  double ss = 0.0;
  for (double w : weights) ss += (w - mean) * (w - mean);
  double se = std::sqrt(ss / double(weights.size() - 1) / double(weights.size()));
  const double gamma = mean_gamma(tab, off);
  ok = ok && std::fabs(mean - gamma) < 4.0 * se;

  detail = std::to_string(rows.size() - failing) + "/" + std::to_string(rows.size()) +
           " probes pass; max defect " + fmt(worst_defect) + "; E[m] " + fmt(mean) +
           " vs gamma " + fmt(gamma) + " (4se " + fmt(4.0 * se) + ")";
  return ok;
}

// --------------------------------------------------------------- criterion 11
bool determinism_across_workers(std::string& detail) {
  const char* base =
      R"({"offspring":{"2":1.0},)"
      R"("conductance":{"default":{"family":"two_point","v1":1.0,"v2":2.0,"p2":0.5}},)"
      R"("seed": 2024})";
  const std::vector<std::string> methods = {
      R"({"method":"selfcheck"})",
      R"({"method":"direct","n_steps":5000,"replicas":16})",
      R"({"method":"formula","samples":2000})",
      R"({"method":"theta","walks":4000})",
      R"({"method":"dump-tree","depth":6})",
  };
  bool ok = true;
  detail.clear();
  for (const auto& m : methods) {
    std::string first;
    for (std::uint32_t workers : {1u, 4u, 8u}) {
      nlohmann::json ov = nlohmann::json::parse(m);
      ov["workers"] = workers;
      ExperimentConfig cfg = ExperimentConfig::from_json_text(base, ov.dump());
      RunResult res = run_experiment(cfg);
      if (first.empty())
        first = res.artifact;
      else if (res.artifact != first)
        ok = false;
    }
  }
  detail = ok ? "selfcheck/direct/formula/theta/dump-tree byte-identical at 1, 4, 8 workers"
              : "artifact divergence across worker counts";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    bool (*run)(std::string&);
  };
  const std::vector<Criterion> criteria = {
      {1, "exact-oracle-equivalence", exact_oracle_equivalence},
      {2, "fixed-point-convergence", fixed_point_convergence},
      {3, "srw-speed", srw_speed_three_ways},
      {4, "cross-method-consistency", cross_method_consistency},
      {5, "slowdown", slowdown_verdict},
      {6, "formula-positivity", formula_positivity},
      {7, "escape-direction-law", escape_direction_law},
      {8, "ex1-trend", ex1_trend},
      {9, "zero-speed-regime", zero_speed_regime},
      {10, "stationarity-reversibility", stationarity_and_reversibility},
      {11, "determinism-across-workers", determinism_across_workers},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%2d] %s %-28s (%.1fs) %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures;
}
