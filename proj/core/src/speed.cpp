#include "gwrc/speed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gwrc/parallel.hpp"

namespace gwrc {

namespace {

// Experiment-level salts under the master seed. Replica i derives its own
// streams as derive_key(derive_key(seed, salt), i).
constexpr std::uint64_t kSaltDirectTree = 201;
constexpr std::uint64_t kSaltDirectWalk = 202;
constexpr std::uint64_t kSaltFormulaTree = 301;
constexpr std::uint64_t kSaltEx1Base = 310;
constexpr std::uint64_t kSaltStationarity = 401;

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t salt, std::uint64_t i) {
  return derive_key(derive_key(master, salt), i);
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return out;
}

constexpr double kZ95 = 1.959963984540054;
constexpr double kZ99 = 2.5758293035489004;

}  // namespace

const char* method_name(SpeedMethod m) noexcept {
  switch (m) {
    case SpeedMethod::Direct: return "direct";
    case SpeedMethod::Formula: return "formula";
    case SpeedMethod::Covariance: return "covariance";
    case SpeedMethod::SrwClosedForm: return "srw";
  }
  return "unknown";
}

double srw_speed(const OffspringLaw& offspring) {
  double v = 0.0;
  for (const auto& [k, p] : offspring.support())
    v += p * (static_cast<double>(k) - 1.0) / (static_cast<double>(k) + 1.0);
  return v;
}

double root_weight(LazyTree& tree) {
  double pi = tree.pi(tree.root());
  return pi / (static_cast<double>(tree.record(tree.root()).index) + 1.0);
}

std::vector<Trajectory> direct_trajectories(const OffspringLaw& offspring,
                                            const ConductanceLawTable& table,
                                            const MonteCarloOptions& opts) {
  if (opts.steps < 1 || opts.replicas < 1)
    fail(Errc::BadParameter, "direct: steps and replicas must be >= 1");
  std::vector<Trajectory> out(opts.replicas);
  parallel_for_index(opts.replicas, opts.workers, [&](std::uint64_t i) {
    LazyTree tree(opts.mode, offspring, table, replica_seed(opts.seed, kSaltDirectTree, i));
    out[i] = run_trajectory(tree, opts.steps, opts.checkpoint_every,
                            replica_seed(opts.seed, kSaltDirectWalk, i));
  });
  return out;
}

std::vector<std::pair<std::uint64_t, double>> checkpoint_mean_ratio(
    const std::vector<Trajectory>& trajectories) {
  std::vector<std::pair<std::uint64_t, double>> out;
  if (trajectories.empty()) return out;
  const std::size_t n_marks = trajectories.front().checkpoints.size();
  for (std::size_t c = 0; c < n_marks; ++c) {
    std::uint64_t step = trajectories.front().checkpoints[c].step;
    double acc = 0.0;
    for (const Trajectory& t : trajectories)
      acc += static_cast<double>(t.checkpoints[c].distance) / static_cast<double>(step);
    out.emplace_back(step, acc / static_cast<double>(trajectories.size()));
  }
  return out;
}

SpeedEstimate direct_speed(const OffspringLaw& offspring, const ConductanceLawTable& table,
                           const MonteCarloOptions& opts) {
  std::vector<Trajectory> runs = direct_trajectories(offspring, table, opts);
  std::vector<double> ratios(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i)
    ratios[i] =
        static_cast<double>(runs[i].final_distance) / static_cast<double>(opts.steps);
  MeanSd ms = mean_sd(ratios);

  SpeedEstimate est;
  est.method = SpeedMethod::Direct;
  est.point = ms.mean;
  est.ci_halfwidth = runs.size() > 1 ? kZ95 * ms.sd / std::sqrt(double(runs.size())) : 0.0;
  est.replicas = runs.size();
  est.steps_or_samples = opts.steps;
  est.diagnostics["replica_sd"] = ms.sd;
  return est;
}

FormulaSample formula_sample(LazyTree& tree, const MonteCarloOptions& opts) {
  RootSplit split = root_star_bounds(tree, opts.bracket_tol, opts.max_depth,
                                     opts.sample_node_cap);
  FormulaSample s;
  s.k = tree.record(tree.root()).index;
  s.xi0 = split.xi[0];
  s.c_t0_star = split.star[0];
  s.c_total = split.total;

  // ratio increasing in C(T*_0), decreasing in the others
  double rest_lo = split.total.lo - split.star[0].lo;
  double rest_hi = split.total.hi - split.star[0].hi;
  double r_lo = split.star[0].lo + rest_hi > 0.0
                    ? split.star[0].lo / (split.star[0].lo + rest_hi)
                    : 0.0;
  double r_hi = split.star[0].hi + rest_lo > 0.0
                    ? split.star[0].hi / (split.star[0].hi + rest_lo)
                    : 1.0;
  r_lo = std::clamp(r_lo, 0.0, 1.0);
  r_hi = std::clamp(r_hi, 0.0, 1.0);
  s.ratio_mid = 0.5 * (r_lo + r_hi);
  s.ratio_term = {s.xi0 * r_lo, s.xi0 * r_hi};

  double sym = 0.0;
  double pi_root = 0.0;
  bool met = true;
  for (std::size_t j = 0; j < split.star.size(); ++j) {
    double lo_j = split.star[j].lo + (split.total.hi - split.star[j].hi);
    double hi_j = split.star[j].hi + (split.total.lo - split.star[j].lo);
    double rj_lo = lo_j > 0.0 ? split.star[j].lo / lo_j : 0.0;
    double rj_hi = hi_j > 0.0 ? split.star[j].hi / hi_j : 1.0;
    sym += split.xi[j] * 0.5 * (std::clamp(rj_lo, 0.0, 1.0) + std::clamp(rj_hi, 0.0, 1.0));
    pi_root += split.xi[j];
    met = met && split.subtree[j].tolerance_met;
  }
  s.sym_term_mid = sym / static_cast<double>(split.star.size());
  s.m_weight = pi_root / static_cast<double>(s.k + 1);
  s.tolerance_met = met;
  return s;
}

std::vector<FormulaSample> formula_samples(const OffspringLaw& offspring,
                                           const ConductanceLawTable& table,
                                           const MonteCarloOptions& opts) {
  if (opts.samples < 1) fail(Errc::BadParameter, "formula: samples must be >= 1");
  std::vector<FormulaSample> out(opts.samples);
  parallel_for_index(opts.samples, opts.workers, [&](std::uint64_t i) {
    LazyTree tree(TreeMode::Augmented, offspring, table,
                  replica_seed(opts.seed, kSaltFormulaTree, i));
    out[i] = formula_sample(tree, opts);
  });
  return out;
}

SpeedEstimate formula_estimate(const std::vector<FormulaSample>& samples, double gamma) {
  std::vector<double> mids(samples.size()), widths(samples.size());
  double met = 0.0, sym = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    mids[i] = samples[i].ratio_term.midpoint();
    widths[i] = samples[i].ratio_term.halfwidth();
    met += samples[i].tolerance_met ? 1.0 : 0.0;
    sym += samples[i].sym_term_mid;
  }
  MeanSd ms = mean_sd(mids);
  double mean_halfwidth = std::accumulate(widths.begin(), widths.end(), 0.0) /
                          static_cast<double>(widths.size());
  const double scale = 2.0 / gamma;

  SpeedEstimate est;
  est.method = SpeedMethod::Formula;
  est.point = std::clamp(1.0 - scale * ms.mean, -1.0, 1.0);
  double mc = samples.size() > 1 ? kZ95 * scale * ms.sd / std::sqrt(double(samples.size())) : 0.0;
  double bracket = scale * mean_halfwidth;
  est.ci_halfwidth = std::sqrt(mc * mc + bracket * bracket);
  est.replicas = samples.size();
  est.steps_or_samples = samples.size();
  est.diagnostics["mean_bracket_halfwidth"] = mean_halfwidth;
  est.diagnostics["tolerance_met_fraction"] = met / static_cast<double>(samples.size());
  est.diagnostics["point_symmetrized"] =
      std::clamp(1.0 - scale * sym / static_cast<double>(samples.size()), -1.0, 1.0);
  est.diagnostics["mean_ratio_term"] = ms.mean;
  est.diagnostics["gamma"] = gamma;
  return est;
}

SpeedEstimate formula_speed(const OffspringLaw& offspring, const ConductanceLawTable& table,
                            const MonteCarloOptions& opts) {
  const double gamma = mean_gamma(table, offspring);
  if (is_infinite(gamma))
    fail(Errc::InfiniteGamma, "formula_speed requires a finite mean conductance");
  auto samples = formula_samples(offspring, table, opts);
  return formula_estimate(samples, gamma);
}

namespace {

struct CovStats {
  double cov = 0.0;
  double ci = 0.0;
};

CovStats covariance_of(const std::vector<FormulaSample>& samples) {
  const std::size_t n = samples.size();
  double mx = 0.0, mr = 0.0;
  for (const auto& s : samples) {
    mx += s.xi0;
    mr += s.ratio_mid;
  }
  mx /= double(n);
  mr /= double(n);
  double acc = 0.0;
  for (const auto& s : samples) acc += (s.xi0 - mx) * (s.ratio_mid - mr);
  CovStats out;
  out.cov = acc / double(n > 1 ? n - 1 : 1);

  // batch means over contiguous index blocks
  const std::size_t batches = std::min<std::size_t>(100, n / 2);
  if (batches >= 2) {
    std::vector<double> bc;
    bc.reserve(batches);
    for (std::size_t b = 0; b < batches; ++b) {
      std::size_t lo = n * b / batches, hi = n * (b + 1) / batches;
      double bx = 0.0, br = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        bx += samples[i].xi0;
        br += samples[i].ratio_mid;
      }
      std::size_t m = hi - lo;
      bx /= double(m);
      br /= double(m);
      double a = 0.0;
      for (std::size_t i = lo; i < hi; ++i)
        a += (samples[i].xi0 - bx) * (samples[i].ratio_mid - br);
      bc.push_back(a / double(m > 1 ? m - 1 : 1));
    }
    MeanSd ms = mean_sd(bc);
    out.ci = kZ95 * ms.sd / std::sqrt(double(batches));
  }
  return out;
}

}  // namespace

SpeedEstimate covariance_estimate(const std::vector<FormulaSample>& samples, double gamma,
                                  double v_srw) {
  CovStats cs = covariance_of(samples);
  const double scale = 2.0 / gamma;

  SpeedEstimate est;
  est.method = SpeedMethod::Covariance;
  est.point = std::clamp(v_srw - scale * cs.cov, -1.0, 1.0);
  est.ci_halfwidth = scale * cs.ci;
  est.replicas = samples.size();
  est.steps_or_samples = samples.size();
  est.diagnostics["covariance"] = cs.cov;
  est.diagnostics["covariance_ci"] = cs.ci;
  est.diagnostics["gamma"] = gamma;
  est.diagnostics["v_srw"] = v_srw;
  return est;
}

SpeedEstimate covariance_speed(const OffspringLaw& offspring, const ConductanceLawTable& table,
                               const MonteCarloOptions& opts) {
  const double gamma = mean_gamma(table, offspring);
  if (is_infinite(gamma))
    fail(Errc::InfiniteGamma, "covariance_speed requires a finite mean conductance");
  auto samples = formula_samples(offspring, table, opts);
  return covariance_estimate(samples, gamma, srw_speed(offspring));
}

SlowdownReport slowdown_test(const OffspringLaw& offspring, const ConductanceLawTable& table,
                             const MonteCarloOptions& opts) {
  const double gamma = mean_gamma(table, offspring);
  if (is_infinite(gamma) || !equal_means(table, offspring))
    fail(Errc::UnequalMeans, "slowdown_test requires gamma_{k,m} identical over the support");
  if (all_degenerate(table, offspring))
    fail(Errc::DegenerateLaw, "slowdown_test requires a nondegenerate conductance law");

  auto samples = formula_samples(offspring, table, opts);
  SpeedEstimate formula = formula_estimate(samples, gamma);
  SpeedEstimate cov = covariance_estimate(samples, gamma, srw_speed(offspring));

  SlowdownReport rep;
  rep.v_srw = srw_speed(offspring);
  rep.formula = formula;
  rep.covariance = cov.diagnostics.at("covariance");
  rep.covariance_ci = cov.diagnostics.at("covariance_ci");
  const double gap = rep.v_srw - formula.point;
  if (formula.point + formula.ci_halfwidth < rep.v_srw) {
    rep.verdict = "SLOWDOWN";
  } else {
    rep.verdict = "INCONCLUSIVE";
    double need = gap > 0.0 ? formula.ci_halfwidth / gap : 2.0;
    rep.suggested_samples =
        static_cast<std::uint64_t>(double(opts.samples) * std::max(2.0, 1.5 * need * need));
  }
  return rep;
}

std::vector<Ex1Row> ex1_curve(const std::vector<double>& epsilons,
                              const std::vector<double>& amps,
                              const MonteCarloOptions& opts) {
  if (epsilons.size() != amps.size() || epsilons.empty())
    fail(Errc::BadParameter, "ex1: eps/amps must be non-empty lists of equal length");
  OffspringLaw binary = OffspringLaw::from_map({{2, 1.0}});

  std::vector<Ex1Row> rows;
  for (std::size_t pair_i = 0; pair_i < epsilons.size(); ++pair_i) {
    const double eps = epsilons[pair_i];
    const double amp = amps[pair_i];
    if (!(eps > 0.0 && eps < 1.0) || !(amp > 0.0))
      fail(Errc::BadParameter, "ex1: need eps in (0,1) and a > 0");
    ConductanceLawTable table(ConductanceLaw::two_point(1.0, amp, eps));
    const double gamma = (1.0 - eps) + eps * amp;

    // Stratify on the distinguished edge: E[xi0 r0] =
    // (1-eps) E[r0 | xi0=1] + eps*a E[r0 | xi0=a]. Everything else is
    // independent of xi0, so conditioning just overrides that one edge.
    const std::uint64_t per_stratum = std::max<std::uint64_t>(opts.samples / 2, 1);
    std::array<std::vector<double>, 2> mids;
    std::array<std::vector<double>, 2> widths;
    const double stratum_value[2] = {1.0, amp};
    for (int stratum = 0; stratum < 2; ++stratum) {
      mids[stratum].resize(per_stratum);
      widths[stratum].resize(per_stratum);
      parallel_for_index(per_stratum, opts.workers, [&](std::uint64_t i) {
        LazyTree tree(TreeMode::Augmented, binary, table,
                      replica_seed(opts.seed, kSaltEx1Base + 2 * pair_i + stratum, i));
        RootSplit split = root_star_bounds(tree, opts.bracket_tol, opts.max_depth,
                                           opts.sample_node_cap);
        double x = stratum_value[stratum];
        Interval star0 = {series(x, split.subtree[0].lower), series(x, split.subtree[0].upper)};
        double rest_lo = split.total.lo - split.star[0].lo;
        double rest_hi = split.total.hi - split.star[0].hi;
        double r_lo = star0.lo + rest_hi > 0.0 ? star0.lo / (star0.lo + rest_hi) : 0.0;
        double r_hi = star0.hi + rest_lo > 0.0 ? star0.hi / (star0.hi + rest_lo) : 1.0;
        r_lo = std::clamp(r_lo, 0.0, 1.0);
        r_hi = std::clamp(r_hi, 0.0, 1.0);
        mids[stratum][i] = 0.5 * (r_lo + r_hi);
        widths[stratum][i] = 0.5 * (r_hi - r_lo);
      });
    }

    MeanSd m1 = mean_sd(mids[0]), ma = mean_sd(mids[1]);
    double w1 = std::accumulate(widths[0].begin(), widths[0].end(), 0.0) / double(per_stratum);
    double wa = std::accumulate(widths[1].begin(), widths[1].end(), 0.0) / double(per_stratum);
    const double scale = 2.0 / gamma;
    double term = (1.0 - eps) * m1.mean + eps * amp * ma.mean;
    double se = std::sqrt(std::pow((1.0 - eps) * m1.sd, 2) + std::pow(eps * amp * ma.sd, 2)) /
                std::sqrt(double(per_stratum));
    double width = (1.0 - eps) * w1 + eps * amp * wa;

    Ex1Row row;
    row.eps = eps;
    row.amp = amp;
    row.eta = eps * amp;
    row.v_hat = std::clamp(1.0 - scale * term, -1.0, 1.0);
    row.ci = std::sqrt(std::pow(kZ95 * scale * se, 2) + std::pow(scale * width, 2));
    row.reference = 1.0 / (3.0 * (row.eta + 1.0));
    rows.push_back(row);
  }
  return rows;
}

std::vector<StationarityRow> stationarity_check(const OffspringLaw& offspring,
                                                const ConductanceLawTable& table,
                                                std::uint64_t samples,
                                                const MonteCarloOptions& opts) {
  if (samples < 2) fail(Errc::BadParameter, "stationarity: need at least 2 samples");

  struct Probe {
    const char* name;
    double (*eval)(LazyTree&, NodeId);
  };
  static const Probe probes[] = {
      {"one", [](LazyTree&, NodeId) { return 1.0; }},
      {"iota", [](LazyTree& t, NodeId v) { return double(t.record(v).index); }},
      {"pi", [](LazyTree& t, NodeId v) { return t.pi(v); }},
      {"cmid5", [](LazyTree& t, NodeId v) { return conductance_around(t, v, 5).midpoint(); }},
  };
  constexpr int n_probes = 4;

  struct UFn {
    std::string name;
    double clip;  // <= 0: constant 1
  };
  const double q95 = table.default_law().quantile(0.95);
  const UFn ufns[] = {{"one", 0.0}, {"clip_q95", q95}};

  std::vector<std::array<int, 2>> pairs;
  for (int a = 0; a < n_probes; ++a)
    for (int b = a + 1; b < n_probes; ++b) pairs.push_back({a, b});
  pairs.push_back({1, 1});  // identical-probe control

  const std::size_t n_rows = pairs.size() * 2;
  std::vector<std::vector<double>> diffs(n_rows, std::vector<double>(samples));

  parallel_for_index(samples, opts.workers, [&](std::uint64_t i) {
    LazyTree tree(TreeMode::Augmented, offspring, table,
                  replica_seed(opts.seed, kSaltStationarity, i));
    auto kids = tree.expand(tree.root());
    NodeId w0 = kids[0].first;
    double xi0 = kids[0].second;
    double at_o[n_probes], at_w0[n_probes];
    for (int p = 0; p < n_probes; ++p) {
      at_o[p] = probes[p].eval(tree, tree.root());
      at_w0[p] = probes[p].eval(tree, w0);
    }
    for (std::size_t pr = 0; pr < pairs.size(); ++pr) {
      auto [fa, gb] = pairs[pr];
      for (int u = 0; u < 2; ++u) {
        double uval = ufns[u].clip > 0.0 ? std::min(xi0, ufns[u].clip) : 1.0;
        diffs[pr * 2 + u][i] =
            uval * (at_o[fa] * at_w0[gb] - at_o[gb] * at_w0[fa]);
      }
    }
  });

  std::vector<StationarityRow> rows;
  for (std::size_t pr = 0; pr < pairs.size(); ++pr) {
    for (int u = 0; u < 2; ++u) {
      MeanSd ms = mean_sd(diffs[pr * 2 + u]);
      StationarityRow row;
      row.f = probes[pairs[pr][0]].name;
      row.g = probes[pairs[pr][1]].name;
      row.u = ufns[u].name;
      row.mean_diff = ms.mean;
      row.ci99 = kZ99 * ms.sd / std::sqrt(double(samples));
      row.samples = samples;
      row.pass = std::fabs(ms.mean) <= row.ci99 || ms.sd == 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace gwrc
