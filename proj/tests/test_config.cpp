#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "gwrc/runner.hpp"
#include "test_util.hpp"

using namespace gwrc;
using gwrc_test::code_of;
using nlohmann::json;

TEST_SUITE_BEGIN("config");

TEST_CASE("minimal config fills documented defaults") {
  auto cfg = ExperimentConfig::from_json_text(
      R"({"offspring":{"2":1.0},)"
      R"("conductance":{"default":{"family":"constant","c":1.0}},"method":"direct"})");
  CHECK(cfg.method == "direct");
  CHECK(cfg.mc.steps == 100000);
  CHECK(cfg.mc.replicas == 200);
  CHECK(cfg.mc.samples == 50000);
  CHECK(cfg.mc.bracket_tol == 1e-3);
  CHECK(cfg.mc.max_depth == 60);
  CHECK(cfg.mc.confirm_level == 30);
  CHECK(cfg.mc.mode == TreeMode::Augmented);
  CHECK_FALSE(cfg.seed_explicit);  // entropy seed, echoed
  CHECK(cfg.to_json_text().find("\"seed\"") != std::string::npos);
}

TEST_CASE("p_0 in the config surfaces with its field path") {
  try {
    ExperimentConfig::from_json_text(R"({"offspring":{"0":0.5,"2":0.5}})");
    FAIL("expected ZeroNotAllowed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroNotAllowed);
    CHECK(std::string(e.what()).find("offspring.0") != std::string::npos);
  }
}

TEST_CASE("flag overrides win over the file") {
  auto cfg = ExperimentConfig::from_json_text(R"({"seed": 1, "replicas": 7})",
                                              R"({"seed": 42})");
  CHECK(cfg.mc.seed == 42);
  CHECK(cfg.seed_explicit);
  CHECK(cfg.mc.replicas == 7);
}

TEST_CASE("parse errors carry context") {
  CHECK(code_of([] {
          ExperimentConfig::from_json_text(R"({"method":"warp"})");
        }) == Errc::ParseError);
  CHECK(code_of([] {
          ExperimentConfig::from_json_text(
              R"({"conductance":{"default":{"family":"cauchy"}}})");
        }) == Errc::ParseError);
  CHECK(code_of([] {
          ExperimentConfig::from_json_text(
              R"({"conductance":{"default":{"family":"constant"}}})");
        }) == Errc::ParseError);
  CHECK(code_of([] { ExperimentConfig::from_json_text("{nope"); }) == Errc::ParseError);
  CHECK(code_of([] {
          ExperimentConfig::from_json_text(R"({"format":"yaml"})");
        }) == Errc::ParseError);
}

TEST_CASE("conductance overrides parse into a symmetric table") {
  auto cfg = ExperimentConfig::from_json_text(
      R"({"offspring":{"2":1.0},"conductance":{
            "default":{"family":"two_point","v1":1,"v2":100,"p2":0.01},
            "overrides":[{"k":2,"m":3,"family":"constant","c":1.0}]}})");
  CHECK(cfg.table(3, 2) == ConductanceLaw::constant(1.0));
  CHECK(cfg.table(2, 2) == ConductanceLaw::two_point(1.0, 100.0, 0.01));
}

TEST_CASE("hash and echo ignore execution-only knobs") {
  const std::string base = R"({"offspring":{"2":1.0},"seed":5,"method":"srw"})";
  auto a = ExperimentConfig::from_json_text(base, R"({"workers": 1})");
  auto b = ExperimentConfig::from_json_text(base, R"({"workers": 8, "out": "x.json"})");
  CHECK(a.config_hash() == b.config_hash());
  CHECK(a.to_json_text() == b.to_json_text());

  auto c = ExperimentConfig::from_json_text(base, R"({"seed": 6})");
  CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("run_experiment emits the documented artifacts") {
  auto base = R"({"offspring":{"2":1.0},)"
              R"("conductance":{"default":{"family":"constant","c":1.0}},"seed":3})";

  auto srw = ExperimentConfig::from_json_text(base, R"({"method":"srw"})");
  RunResult r = run_experiment(srw);
  CHECK(r.exit_code == 0);
  json j = json::parse(r.artifact);
  CHECK(j["schema"] == "v1");
  CHECK(j["results"]["v_srw"].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(j["config_hash"].is_string());
  CHECK(j["seed"] == 3);

  auto dump = ExperimentConfig::from_json_text(base, R"({"method":"dump-tree","depth":1})");
  json snap = json::parse(run_experiment(dump).artifact);
  CHECK(snap["results"]["nodes"].size() == 4);
  CHECK(snap["results"]["edges"].size() == 3);

  auto bounds = ExperimentConfig::from_json_text(
      base, R"({"method":"bounds","tolerance":1e-6})");
  json bj = json::parse(run_experiment(bounds).artifact);
  CHECK(bj["results"]["tolerance_met"] == true);
  CHECK(bj["results"]["lower"].get<double>() <= bj["results"]["upper"].get<double>());

  auto ex1 = ExperimentConfig::from_json_text(
      base,
      R"({"method":"ex1","format":"csv","samples":200,"eps":[0.01],"amps":[100]})");
  std::string csv = run_experiment(ex1).artifact;
  CHECK(csv.find("eps,a,eta,v_hat,ci,reference") != std::string::npos);
  CHECK(csv.find("# schema=v1 config_hash=") != std::string::npos);

  auto speed_csv = ExperimentConfig::from_json_text(
      base, R"({"method":"direct","format":"csv","n_steps":50,"replicas":4})");
  std::string sc = run_experiment(speed_csv).artifact;
  CHECK(sc.find("config_hash,method,point,ci,replicas,seed") != std::string::npos);
}

TEST_CASE("dump-tree replays byte-identically") {
  auto cfg = ExperimentConfig::from_json_text(
      R"({"offspring":{"1":0.5,"3":0.5},)"
      R"("conductance":{"default":{"family":"exponential","rate":1.0}},)"
      R"("method":"dump-tree","depth":4,"seed":99})");
  CHECK(run_experiment(cfg).artifact == run_experiment(cfg).artifact);
}

TEST_CASE("inconclusive slowdown exits with code 2") {
  // nearly degenerate equal-mean law at a tiny sample count
  auto cfg = ExperimentConfig::from_json_text(
      R"({"offspring":{"2":1.0},)"
      R"("conductance":{"default":{"family":"two_point","v1":0.999,"v2":1.001,"p2":0.5}},)"
      R"("method":"slowdown","samples":60,"seed":1})");
  RunResult r = run_experiment(cfg);
  CHECK(r.exit_code == 2);
  json j = json::parse(r.artifact);
  CHECK(j["results"]["verdict"] == "INCONCLUSIVE");
  CHECK(j["results"]["suggested_samples"].get<std::uint64_t>() > 60);
}

TEST_CASE("atomic write leaves no temp file behind") {
  std::string path = "test_atomic_out.json";
  atomic_write(path, "{\"ok\":true}\n");
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text == "{\"ok\":true}\n");
  in.close();
  CHECK(!std::ifstream(path + ".tmp").good());
  std::remove(path.c_str());
}

TEST_CASE("selfcheck passes on a small healthy config") {
  auto cfg = ExperimentConfig::from_json_text(
      R"({"offspring":{"2":1.0},)"
      R"("conductance":{"default":{"family":"two_point","v1":1.0,"v2":2.0,"p2":0.5}},)"
      R"("method":"selfcheck","seed":12,"workers":2})");
  auto items = selfcheck(cfg);
  REQUIRE(items.size() == 4);
  for (const auto& it : items) {
    CAPTURE(it.name);
    CAPTURE(it.detail);
    CHECK(it.pass);
  }
}

TEST_SUITE_END();
