#include "gwrc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace gwrc {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  fail(Errc::ParseError, path + ": " + what);
}

double need_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j[key].is_number())
    parse_fail(path + "." + key, "expected a number");
  return j[key].get<double>();
}

// One registration point for conductance-law families.
using LawParser = std::function<ConductanceLaw(const json&, const std::string&)>;

const std::map<std::string, LawParser>& law_registry() {
  static const std::map<std::string, LawParser> registry = {
      {"constant",
       [](const json& j, const std::string& p) {
         return ConductanceLaw::constant(need_number(j, "c", p));
       }},
      {"two_point",
       [](const json& j, const std::string& p) {
         return ConductanceLaw::two_point(need_number(j, "v1", p), need_number(j, "v2", p),
                                          need_number(j, "p2", p));
       }},
      {"exponential",
       [](const json& j, const std::string& p) {
         return ConductanceLaw::exponential(need_number(j, "rate", p));
       }},
      {"lognormal",
       [](const json& j, const std::string& p) {
         return ConductanceLaw::lognormal(need_number(j, "mu_log", p),
                                          need_number(j, "sigma_log", p));
       }},
      {"pareto",
       [](const json& j, const std::string& p) {
         return ConductanceLaw::pareto(need_number(j, "alpha", p),
                                       need_number(j, "x_min", p));
       }},
  };
  return registry;
}

ConductanceLaw law_from_json(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    parse_fail(path, "expected an object with a \"family\" tag");
  const std::string fam = j["family"].get<std::string>();
  auto it = law_registry().find(fam);
  if (it == law_registry().end()) parse_fail(path + ".family", "unknown family " + fam);
  return it->second(j, path);
}

json law_to_json(const ConductanceLaw& law) {
  json j;
  j["family"] = family_name(law.family());
  switch (law.family()) {
    case CondFamily::Constant: j["c"] = law.param(0); break;
    case CondFamily::TwoPoint:
      j["v1"] = law.param(0);
      j["v2"] = law.param(1);
      j["p2"] = law.param(2);
      break;
    case CondFamily::Exponential: j["rate"] = law.param(0); break;
    case CondFamily::LogNormal:
      j["mu_log"] = law.param(0);
      j["sigma_log"] = law.param(1);
      break;
    case CondFamily::Pareto:
      j["alpha"] = law.param(0);
      j["x_min"] = law.param(1);
      break;
  }
  return j;
}

OffspringLaw offspring_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) parse_fail(path, "expected an object");
  if (j.contains("family")) {
    const std::string fam = j["family"].get<std::string>();
    auto max_k = static_cast<std::uint32_t>(j.value("max_k", 64));
    if (fam == "poisson") return OffspringLaw::poisson(need_number(j, "lambda", path), max_k);
    if (fam == "geometric")
      return OffspringLaw::geometric(need_number(j, "success", path), max_k);
    parse_fail(path + ".family", "unknown offspring family " + fam);
  }
  std::map<std::uint32_t, double> pk;
  for (const auto& [key, value] : j.items()) {
    std::uint32_t k = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), k);
    if (ec != std::errc{} || ptr != key.data() + key.size())
      parse_fail(path + "." + key, "keys must be nonnegative integers");
    if (!value.is_number()) parse_fail(path + "." + key, "expected a number");
    pk[k] = value.get<double>();
  }
  return OffspringLaw::from_map(pk);
}

json offspring_to_json(const OffspringLaw& law) {
  json j = json::object();
  for (const auto& [k, p] : law.support()) j[std::to_string(k)] = p;
  return j;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

ConductanceLaw parse_conductance_law(const std::string& json_text,
                                     const std::string& field_path) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) parse_fail(field_path, "invalid JSON");
  return law_from_json(j, field_path);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& overrides_json) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) parse_fail("config", "invalid JSON");
  if (!j.is_object()) parse_fail("config", "top level must be an object");
  json ov = json::parse(overrides_json, nullptr, false);
  if (ov.is_discarded() || !ov.is_object()) parse_fail("overrides", "invalid JSON");
  for (const auto& [key, value] : ov.items()) j[key] = value;

  ExperimentConfig cfg;
  if (j.contains("offspring")) cfg.offspring = offspring_from_json(j["offspring"], "offspring");
  if (j.contains("conductance")) {
    const json& c = j["conductance"];
    if (!c.is_object() || !c.contains("default"))
      parse_fail("conductance", "expected {\"default\": law, \"overrides\": [...]}");
    cfg.table = ConductanceLawTable(law_from_json(c["default"], "conductance.default"));
    if (c.contains("overrides")) {
      if (!c["overrides"].is_array()) parse_fail("conductance.overrides", "expected an array");
      int idx = 0;
      for (const json& o : c["overrides"]) {
        std::string p = "conductance.overrides[" + std::to_string(idx++) + "]";
        auto k = static_cast<std::uint32_t>(need_number(o, "k", p));
        auto m = static_cast<std::uint32_t>(need_number(o, "m", p));
        cfg.table.set_override(k, m, law_from_json(o, p));
      }
    }
  }

  cfg.method = j.value("method", cfg.method);
  static const char* methods[] = {"direct",   "formula",      "covariance", "srw",
                                  "slowdown", "ex1",          "theta",      "bounds",
                                  "stationarity", "selfcheck", "dump-tree"};
  bool known = false;
  for (const char* m : methods) known = known || cfg.method == m;
  if (!known) parse_fail("method", "unknown method " + cfg.method);

  const std::string mode = j.value("mode", std::string("augmented"));
  if (mode == "augmented")
    cfg.mc.mode = TreeMode::Augmented;
  else if (mode == "plain")
    cfg.mc.mode = TreeMode::Plain;
  else
    parse_fail("mode", "expected augmented|plain");

  auto positive = [&](const char* key, auto current) {
    if (!j.contains(key)) return current;
    double v = need_number(j, key, "config");
    if (v < 1) parse_fail(std::string("config.") + key, "must be >= 1");
    return static_cast<decltype(current)>(v);
  };
  cfg.mc.steps = positive("n_steps", cfg.mc.steps);
  cfg.mc.replicas = positive("replicas", cfg.mc.replicas);
  cfg.mc.samples = positive("samples", cfg.mc.samples);
  cfg.mc.max_depth = positive("max_depth", cfg.mc.max_depth);
  cfg.mc.confirm_level = positive("confirm_level", cfg.mc.confirm_level);
  cfg.mc.node_cap = positive("node_cap", cfg.mc.node_cap);
  cfg.mc.sample_node_cap = positive("sample_node_cap", cfg.mc.sample_node_cap);
  cfg.mc.workers = positive("workers", cfg.mc.workers);
  cfg.walks = positive("walks", cfg.walks);
  if (j.contains("checkpoint_every"))
    cfg.mc.checkpoint_every = static_cast<std::uint64_t>(need_number(j, "checkpoint_every", "config"));
  if (j.contains("depth"))
    cfg.depth = static_cast<std::uint32_t>(need_number(j, "depth", "config"));

  if (j.contains("tolerance")) {
    cfg.mc.bracket_tol = need_number(j, "tolerance", "config");
    if (!(cfg.mc.bracket_tol > 0.0)) parse_fail("config.tolerance", "must be > 0");
  }

  if (j.contains("eps")) cfg.eps = j["eps"].get<std::vector<double>>();
  if (j.contains("amps")) cfg.amps = j["amps"].get<std::vector<double>>();
  if (cfg.eps.empty() && cfg.amps.empty() && cfg.method == "ex1") {
    cfg.eps = {1e-4, 0.1, 0.01, 0.001, 0.1};
    cfg.amps = {10.0, 10.0, 100.0, 1000.0, 1000.0};
  }

  if (j.contains("seed")) {
    cfg.mc.seed = j["seed"].get<std::uint64_t>();
    cfg.seed_explicit = true;
  } else {
    cfg.mc.seed = entropy_seed();
  }

  cfg.out = j.value("out", std::string());
  cfg.trajectories_out = j.value("trajectories_out", std::string());
  const std::string fmt = j.value("format", std::string("json"));
  if (fmt == "json")
    cfg.format = Format::Json;
  else if (fmt == "csv")
    cfg.format = Format::Csv;
  else
    parse_fail("format", "expected csv|json");

  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        const std::string& overrides_json) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), overrides_json);
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["schema"] = "v1";
  j["offspring"] = offspring_to_json(offspring);
  json cond;
  cond["default"] = law_to_json(table.default_law());
  if (!table.overrides().empty()) {
    json ovs = json::array();
    for (const auto& [km, law] : table.overrides()) {
      json o = law_to_json(law);
      o["k"] = km.first;
      o["m"] = km.second;
      ovs.push_back(o);
    }
    cond["overrides"] = ovs;
  }
  j["conductance"] = cond;
  j["method"] = method;
  j["mode"] = mc.mode == TreeMode::Augmented ? "augmented" : "plain";
  j["n_steps"] = mc.steps;
  j["replicas"] = mc.replicas;
  j["samples"] = mc.samples;
  j["tolerance"] = mc.bracket_tol;
  j["max_depth"] = mc.max_depth;
  j["confirm_level"] = mc.confirm_level;
  j["checkpoint_every"] = mc.checkpoint_every;
  j["node_cap"] = mc.node_cap;
  j["sample_node_cap"] = mc.sample_node_cap;
  j["depth"] = depth;
  j["walks"] = walks;
  if (!eps.empty()) j["eps"] = eps;
  if (!amps.empty()) j["amps"] = amps;
  j["seed"] = mc.seed;
  return j.dump();
}

std::string ExperimentConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json_text())));
  return buf;
}

}  // namespace gwrc
