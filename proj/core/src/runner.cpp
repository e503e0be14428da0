#include "gwrc/runner.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "gwrc/conductance.hpp"
#include "gwrc/dirichlet.hpp"
#include "gwrc/parallel.hpp"
#include "gwrc/walk.hpp"

namespace gwrc {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSaltThetaWalk = 502;
constexpr std::uint64_t kSaltSelfcheck = 601;

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json shell(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = "v1";
  j["method"] = cfg.method;
  j["config_hash"] = cfg.config_hash();
  j["seed"] = cfg.mc.seed;
  j["config"] = json::parse(cfg.to_json_text());
  return j;
}

std::string csv_prefix(const ExperimentConfig& cfg) {
  return "# schema=v1 config_hash=" + cfg.config_hash() + " seed=" +
         std::to_string(cfg.mc.seed) + "\n";
}

json estimate_json(const SpeedEstimate& est) {
  json j;
  j["method"] = method_name(est.method);
  j["point"] = est.point;
  j["ci_halfwidth"] = est.ci_halfwidth;
  j["replicas"] = est.replicas;
  j["steps_or_samples"] = est.steps_or_samples;
  j["diagnostics"] = est.diagnostics;
  return j;
}

std::string estimate_csv(const ExperimentConfig& cfg, const SpeedEstimate& est) {
  std::string out = csv_prefix(cfg);
  out += "config_hash,method,point,ci,replicas,seed\n";
  out += cfg.config_hash();
  out += ",";
  out += method_name(est.method);
  out += "," + fmt_double(est.point) + "," + fmt_double(est.ci_halfwidth) + "," +
         std::to_string(est.replicas) + "," + std::to_string(cfg.mc.seed) + "\n";
  return out;
}

std::string trajectories_csv(const ExperimentConfig& cfg,
                             const std::vector<Trajectory>& runs) {
  std::string out = csv_prefix(cfg);
  out += "replica_id,step,distance,ratio\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const Checkpoint& c : runs[r].checkpoints) {
      out += std::to_string(r) + "," + std::to_string(c.step) + "," +
             std::to_string(c.distance) + "," +
             fmt_double(double(c.distance) / double(c.step)) + "\n";
    }
  }
  return out;
}

double upper_or_null(json& slot, double upper) {
  if (is_infinite(upper)) {
    slot = "INFINITE";
    return upper;
  }
  slot = upper;
  return upper;
}

RunResult run_speed_method(const ExperimentConfig& cfg) {
  RunResult res;
  SpeedEstimate est;
  std::vector<Trajectory> runs;
  if (cfg.method == "srw") {
    est.method = SpeedMethod::SrwClosedForm;
    est.point = srw_speed(cfg.offspring);
    est.ci_halfwidth = 0.0;
  } else if (cfg.method == "direct") {
    runs = direct_trajectories(cfg.offspring, cfg.table, cfg.mc);
    std::vector<double> ratios(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i)
      ratios[i] = double(runs[i].final_distance) / double(cfg.mc.steps);
    double mean = 0.0;
    for (double r : ratios) mean += r;
    mean /= double(ratios.size());
    double ss = 0.0;
    for (double r : ratios) ss += (r - mean) * (r - mean);
    double sd = ratios.size() > 1 ? std::sqrt(ss / double(ratios.size() - 1)) : 0.0;
    est.method = SpeedMethod::Direct;
    est.point = mean;
    est.ci_halfwidth = ratios.size() > 1 ? 1.959963984540054 * sd / std::sqrt(double(ratios.size())) : 0.0;
    est.replicas = runs.size();
    est.steps_or_samples = cfg.mc.steps;
    est.diagnostics["replica_sd"] = sd;
  } else if (cfg.method == "formula") {
    est = formula_speed(cfg.offspring, cfg.table, cfg.mc);
  } else if (cfg.method == "covariance") {
    est = covariance_speed(cfg.offspring, cfg.table, cfg.mc);
  }

  if (cfg.format == ExperimentConfig::Format::Csv) {
    res.artifact = estimate_csv(cfg, est);
  } else {
    json j = shell(cfg);
    if (cfg.method == "srw") {
      j["results"] = {{"v_srw", est.point}};
    } else {
      j["results"] = estimate_json(est);
      if (cfg.method == "direct" && !runs.empty()) {
        auto marks = checkpoint_mean_ratio(runs);
        json curve = json::array();
        for (const auto& [step, ratio] : marks)
          curve.push_back({{"step", step}, {"mean_ratio", ratio}});
        j["results"]["checkpoint_curve"] = curve;
      }
    }
    res.artifact = j.dump(2) + "\n";
  }
  if (cfg.method == "direct" && !cfg.trajectories_out.empty())
    res.extra_files.emplace_back(cfg.trajectories_out, trajectories_csv(cfg, runs));
  return res;
}

RunResult run_slowdown(const ExperimentConfig& cfg) {
  SlowdownReport rep = slowdown_test(cfg.offspring, cfg.table, cfg.mc);
  RunResult res;
  json j = shell(cfg);
  json r;
  r["v_srw"] = rep.v_srw;
  r["formula"] = estimate_json(rep.formula);
  r["covariance"] = rep.covariance;
  r["covariance_ci"] = rep.covariance_ci;
  r["verdict"] = rep.verdict;
  if (rep.verdict == "INCONCLUSIVE") r["suggested_samples"] = rep.suggested_samples;
  j["results"] = r;
  res.artifact = j.dump(2) + "\n";
  res.exit_code = rep.verdict == "SLOWDOWN" ? 0 : 2;
  return res;
}

RunResult run_ex1(const ExperimentConfig& cfg) {
  auto rows = ex1_curve(cfg.eps, cfg.amps, cfg.mc);
  RunResult res;
  if (cfg.format == ExperimentConfig::Format::Csv) {
    std::string out = csv_prefix(cfg);
    out += "eps,a,eta,v_hat,ci,reference\n";
    for (const Ex1Row& r : rows)
      out += fmt_double(r.eps) + "," + fmt_double(r.amp) + "," + fmt_double(r.eta) + "," +
             fmt_double(r.v_hat) + "," + fmt_double(r.ci) + "," + fmt_double(r.reference) +
             "\n";
    res.artifact = out;
  } else {
    json j = shell(cfg);
    json arr = json::array();
    for (const Ex1Row& r : rows)
      arr.push_back({{"eps", r.eps},
                     {"a", r.amp},
                     {"eta", r.eta},
                     {"v_hat", r.v_hat},
                     {"ci", r.ci},
                     {"reference", r.reference}});
    j["results"] = arr;
    res.artifact = j.dump(2) + "\n";
  }
  return res;
}

RunResult run_theta(const ExperimentConfig& cfg) {
  LazyTree tree(cfg.mc.mode, cfg.offspring, cfg.table, cfg.mc.seed);
  auto intervals =
      theta_distribution(tree, cfg.mc.bracket_tol, cfg.mc.max_depth, cfg.mc.node_cap);

  double mid_total = 0.0;
  for (const Interval& iv : intervals) mid_total += iv.midpoint();

  json arr = json::array();
  for (std::size_t jdx = 0; jdx < intervals.size(); ++jdx) {
    json e;
    e["neighbor"] = jdx;
    e["lower"] = intervals[jdx].lo;
    e["upper"] = intervals[jdx].hi;
    e["midpoint"] = mid_total > 0.0 ? intervals[jdx].midpoint() / mid_total : 0.0;
    arr.push_back(e);
  }

  json j = shell(cfg);
  j["results"]["intervals"] = arr;

  if (cfg.walks > 0) {
    std::vector<std::uint32_t> hits(cfg.walks);
    parallel_for_index(cfg.walks, cfg.mc.workers, [&](std::uint64_t w) {
      hits[w] = escape_direction(tree, cfg.mc.confirm_level,
                                 derive_key(derive_key(cfg.mc.seed, kSaltThetaWalk), w));
    });
    std::vector<std::uint64_t> counts(intervals.size(), 0);
    for (std::uint32_t h : hits)
      if (h < counts.size()) ++counts[h];
    json freq = json::array();
    for (std::uint64_t c : counts) freq.push_back(double(c) / double(cfg.walks));
    j["results"]["empirical"] = freq;
    j["results"]["walks"] = cfg.walks;
    j["results"]["confirm_level"] = cfg.mc.confirm_level;
  }

  RunResult res;
  res.artifact = j.dump(2) + "\n";
  return res;
}

RunResult run_bounds(const ExperimentConfig& cfg) {
  LazyTree tree(cfg.mc.mode, cfg.offspring, cfg.table, cfg.mc.seed);
  CondInterval b = conductance_bounds(tree, tree.root(), cfg.mc.bracket_tol,
                                      cfg.mc.max_depth, cfg.mc.node_cap);
  json j = shell(cfg);
  json r;
  r["node"] = tree.root();
  r["lower"] = b.lower;
  upper_or_null(r["upper"], b.upper);
  r["depth_used"] = b.depth_used;
  r["tolerance_met"] = b.tolerance_met;
  j["results"] = r;
  RunResult res;
  res.artifact = j.dump(2) + "\n";
  return res;
}

RunResult run_stationarity(const ExperimentConfig& cfg) {
  auto rows = stationarity_check(cfg.offspring, cfg.table, cfg.mc.samples, cfg.mc);
  bool all_pass = true;
  for (const auto& r : rows) all_pass = all_pass && r.pass;

  RunResult res;
  if (cfg.format == ExperimentConfig::Format::Csv) {
    std::string out = csv_prefix(cfg);
    out += "f,g,u,mean_diff,ci99,samples,pass\n";
    for (const auto& r : rows)
      out += r.f + "," + r.g + "," + r.u + "," + fmt_double(r.mean_diff) + "," +
             fmt_double(r.ci99) + "," + std::to_string(r.samples) + "," +
             (r.pass ? "1" : "0") + "\n";
    res.artifact = out;
  } else {
    json j = shell(cfg);
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"f", r.f},
                     {"g", r.g},
                     {"u", r.u},
                     {"mean_diff", r.mean_diff},
                     {"ci99", r.ci99},
                     {"samples", r.samples},
                     {"pass", r.pass}});
    j["results"]["probes"] = arr;
    j["results"]["pass"] = all_pass;
    res.artifact = j.dump(2) + "\n";
  }
  res.exit_code = all_pass ? 0 : 2;
  return res;
}

RunResult run_dump_tree(const ExperimentConfig& cfg) {
  LazyTree tree(cfg.mc.mode, cfg.offspring, cfg.table, cfg.mc.seed);
  FiniteWeightedTree view = truncate_view(tree, cfg.depth, cfg.mc.node_cap);
  json j = shell(cfg);
  j["results"] = json::parse(view.to_json());
  RunResult res;
  res.artifact = j.dump(2) + "\n";
  return res;
}

RunResult run_selfcheck(const ExperimentConfig& cfg) {
  auto items = selfcheck(cfg);
  bool all_pass = true;
  json arr = json::array();
  for (const auto& it : items) {
    all_pass = all_pass && it.pass;
    arr.push_back({{"name", it.name}, {"pass", it.pass}, {"detail", it.detail}});
  }
  json j = shell(cfg);
  j["results"]["items"] = arr;
  j["results"]["pass"] = all_pass;
  RunResult res;
  res.artifact = j.dump(2) + "\n";
  res.exit_code = all_pass ? 0 : 2;
  return res;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.method == "direct" || cfg.method == "formula" || cfg.method == "covariance" ||
      cfg.method == "srw")
    return run_speed_method(cfg);
  if (cfg.method == "slowdown") return run_slowdown(cfg);
  if (cfg.method == "ex1") return run_ex1(cfg);
  if (cfg.method == "theta") return run_theta(cfg);
  if (cfg.method == "bounds") return run_bounds(cfg);
  if (cfg.method == "stationarity") return run_stationarity(cfg);
  if (cfg.method == "selfcheck") return run_selfcheck(cfg);
  if (cfg.method == "dump-tree") return run_dump_tree(cfg);
  fail(Errc::ParseError, "unknown method " + cfg.method);
}

void atomic_write(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot open " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(Errc::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fail(Errc::IoError, "rename to " + path + " failed: " + ec.message());
}

int run_and_write(const ExperimentConfig& cfg) {
  try {
    RunResult res = run_experiment(cfg);
    for (const auto& [path, text] : res.extra_files) atomic_write(path, text);
    if (cfg.out.empty()) {
      std::cout << res.artifact;
      std::cout.flush();
    } else {
      atomic_write(cfg.out, res.artifact);
    }
    return res.exit_code;
  } catch (const Error& e) {
    json err;
    err["schema"] = "v1";
    err["error"] = errc_name(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["schema"] = "v1";
    err["error"] = "Internal";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
}

std::vector<SelfcheckItem> selfcheck(const ExperimentConfig& cfg) {
  std::vector<SelfcheckItem> items;
  const std::uint64_t base = derive_key(cfg.mc.seed, kSaltSelfcheck);

  // snapshot depth that stays well under budget for these laws
  std::uint32_t depth = 2;
  while (depth < 6 &&
         expected_nodes(cfg.offspring, cfg.mc.mode, depth + 1) < 20000.0)
    ++depth;

  {
    SelfcheckItem it{"reversibility", true, ""};
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 5; ++t) {
      LazyTree tree(cfg.mc.mode, cfg.offspring, cfg.table, derive_key(base, t));
      FiniteWeightedTree view = truncate_view(tree, depth, cfg.mc.node_cap);
      worst = std::max(worst, reversibility_check(view));
    }
    it.pass = worst <= 1e-12;
    it.detail = "max defect " + fmt_double(worst) + " over 5 snapshots, depth " +
                std::to_string(depth);
    items.push_back(it);
  }

  {
    SelfcheckItem it{"bracket_monotonicity", true, ""};
    LazyTree tree(cfg.mc.mode, cfg.offspring, cfg.table, derive_key(base, 10));
    double prev_lo = -1.0, prev_hi = kInfinite;
    bool ok = true;
    for (std::uint32_t d = 4; d <= 3 * depth + 4; d += 4) {
      if (expected_nodes(cfg.offspring, cfg.mc.mode, d) > 200000.0) break;
      CondInterval b =
          conductance_bounds(tree, tree.root(), 1e-15, d, cfg.mc.node_cap, 4);
      ok = ok && b.lower >= prev_lo - 1e-12 && b.upper <= prev_hi + 1e-12 &&
           b.lower <= b.upper;
      prev_lo = b.lower;
      prev_hi = b.upper;
    }
    it.pass = ok;
    it.detail = "deepest bracket [" + fmt_double(prev_lo) + ", " + fmt_double(prev_hi) + "]";
    items.push_back(it);
  }

  {
    SelfcheckItem it{"oracle_equivalence", true, ""};
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 5; ++t) {
      LazyTree tree(cfg.mc.mode, cfg.offspring, cfg.table, derive_key(base, 20 + t));
      FiniteWeightedTree view = truncate_view(tree, depth, cfg.mc.node_cap);
      for (Boundary b : {Boundary::Wired, Boundary::Free}) {
        double fold = effective_conductance_exact(view, b);
        double oracle = dirichlet_conductance(view, b);
        worst = std::max(worst, std::fabs(fold - oracle));
      }
    }
    it.pass = worst <= 1e-10;
    it.detail = "max |fold - dirichlet| = " + fmt_double(worst);
    items.push_back(it);
  }

  {
    SelfcheckItem it{"replay_determinism", true, ""};
    MonteCarloOptions a = cfg.mc;
    a.replicas = 8;
    a.steps = 2000;
    a.samples = 64;
    MonteCarloOptions b = a;
    a.workers = 1;
    b.workers = std::max<std::uint32_t>(cfg.mc.workers, 2);
    auto runs_a = direct_trajectories(cfg.offspring, cfg.table, a);
    auto runs_b = direct_trajectories(cfg.offspring, cfg.table, b);
    bool ok = runs_a.size() == runs_b.size();
    for (std::size_t i = 0; ok && i < runs_a.size(); ++i)
      ok = runs_a[i].final_distance == runs_b[i].final_distance &&
           runs_a[i].final_branch == runs_b[i].final_branch;
    double gamma = mean_gamma(cfg.table, cfg.offspring);
    if (!is_infinite(gamma)) {
      auto sa = formula_samples(cfg.offspring, cfg.table, a);
      auto sb = formula_samples(cfg.offspring, cfg.table, b);
      for (std::size_t i = 0; ok && i < sa.size(); ++i)
        ok = sa[i].ratio_term.midpoint() == sb[i].ratio_term.midpoint() &&
             sa[i].xi0 == sb[i].xi0;
    }
    it.pass = ok;
    it.detail = ok ? "identical across worker counts" : "worker-count mismatch";
    items.push_back(it);
  }

  return items;
}

}  // namespace gwrc
