#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwrc/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string overrides = "{}";

  void bind(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config file");
    auto set = [this](const std::string& key) {
      return [this, key](const std::string& v) {
        nlohmann::json j = nlohmann::json::parse(overrides);
        nlohmann::json parsed = nlohmann::json::parse(v, nullptr, false);
        j[key] = parsed.is_discarded() ? nlohmann::json(v) : parsed;
        overrides = j.dump();
      };
    };
    cmd->add_option_function<std::string>("--seed", set("seed"), "master seed (u64)");
    cmd->add_option_function<std::string>("--replicas", set("replicas"), "walk replicas");
    cmd->add_option_function<std::string>("--steps", set("n_steps"), "steps per walk");
    cmd->add_option_function<std::string>("--samples", set("samples"), "tree samples");
    cmd->add_option_function<std::string>("--tolerance", set("tolerance"),
                                          "relative bracket tolerance");
    cmd->add_option_function<std::string>("--max-depth", set("max_depth"),
                                          "bracket depth limit");
    cmd->add_option_function<std::string>("--confirm-level", set("confirm_level"),
                                          "escape-direction confirm level");
    cmd->add_option_function<std::string>("--checkpoint-every", set("checkpoint_every"),
                                          "checkpoint stride (0 = geometric)");
    cmd->add_option_function<std::string>("--walks", set("walks"),
                                          "empirical escape-direction walks");
    cmd->add_option_function<std::string>("--depth", set("depth"), "snapshot depth");
    cmd->add_option_function<std::string>("--node-cap", set("node_cap"),
                                          "snapshot node budget");
    cmd->add_option_function<std::string>("--out", set("out"), "output path (default stdout)");
    cmd->add_option_function<std::string>("--trajectories-out", set("trajectories_out"),
                                          "per-replica checkpoint CSV (direct only)");
    cmd->add_option_function<std::string>("--format", set("format"), "csv|json");
    cmd->add_option_function<std::string>("--workers", set("workers"), "worker threads");
    cmd->add_option_function<std::string>("--mode", set("mode"), "augmented|plain");
    cmd->add_option_function<std::string>("--eps", set("eps"),
                                          "ex1 epsilon grid, JSON array");
    cmd->add_option_function<std::string>("--amps", set("amps"),
                                          "ex1 amplitude grid, JSON array");
  }

  gwrc::ExperimentConfig build(const std::string& forced_method) const {
    nlohmann::json ov = nlohmann::json::parse(overrides);
    if (!forced_method.empty()) ov["method"] = forced_method;
    if (!config_path.empty())
      return gwrc::ExperimentConfig::load(config_path, ov.dump());
    return gwrc::ExperimentConfig::from_json_text("{}", ov.dump());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks on weighted Galton-Watson trees: speed estimators, "
               "conductance brackets, and diagnostics"};
  app.require_subcommand(1);

  struct Cmd {
    const char* name;
    const char* help;
    const char* forced_method;  // empty: taken from config/--method
  };
  static const Cmd cmds[] = {
      {"speed", "speed estimate (method from config: direct|formula|covariance|srw)", ""},
      {"bounds", "wired/free conductance bracket of the seeded tree", "bounds"},
      {"theta", "escape-direction distribution of the seeded tree", "theta"},
      {"ex1", "binary-tree two-point sweep against its limit curve", "ex1"},
      {"slowdown", "equal-mean slowdown verdict", "slowdown"},
      {"stationarity", "root/neighbour exchange identity probes", "stationarity"},
      {"selfcheck", "invariant battery (reversibility, brackets, oracle, replay)",
       "selfcheck"},
      {"dump-tree", "JSON snapshot of the seeded tree", "dump-tree"},
  };

  std::vector<std::pair<CLI::App*, CommonFlags>> subs;
  subs.reserve(std::size(cmds));
  std::string speed_method;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    subs.emplace_back(sub, CommonFlags{});
    subs.back().second.bind(sub);
    if (std::string(c.name) == "speed")
      sub->add_option("--method", speed_method, "direct|formula|covariance|srw");
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i].first->parsed()) continue;
    std::string forced = cmds[i].forced_method;
    if (std::string(cmds[i].name) == "speed" && !speed_method.empty()) forced = speed_method;
    try {
      gwrc::ExperimentConfig cfg = subs[i].second.build(forced);
      if (std::string(cmds[i].name) == "speed" && cfg.method != "direct" &&
          cfg.method != "formula" && cfg.method != "covariance" && cfg.method != "srw") {
        std::cerr << R"({"schema":"v1","error":"ParseError","message":"speed requires )"
                  << R"(method direct|formula|covariance|srw"})" << "\n";
        return 1;
      }
      return gwrc::run_and_write(cfg);
    } catch (const gwrc::Error& e) {
      nlohmann::json err{{"schema", "v1"},
                         {"error", gwrc::errc_name(e.code())},
                         {"message", e.what()}};
      std::cerr << err.dump() << "\n";
      return 1;
    } catch (const std::exception& e) {
      nlohmann::json err{{"schema", "v1"}, {"error", "Internal"}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
      return 1;
    }
  }
  return 1;
}
