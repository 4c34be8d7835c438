#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "quasimodo/config.hpp"
#include "quasimodo/errors.hpp"

using namespace quasimodo;

namespace {

const char* kLorenzConfig = R"json({
  "system": {"name": "lorenz_affine", "params": {"sigma": 10.0, "rho": 28.0}},
  "quantization": {"lower": [-50.0], "upper": [50.0], "rule": "vertices"},
  "data": {"dt": 0.05, "T_train": 100.0, "substeps": 100, "seed": 42, "y0": [1.0, 1.0, 1.0]},
  "observable": {"kind": "full_state"},
  "model": {"kind": "edmd", "max_degree": 3},
  "mpc": {
    "p": 3, "dt": 0.05, "dt_sur": 0.0005, "T_mpc": 20.0, "mode": "both",
    "plant_substeps": 10, "Q": {"diag": [0.0, 1.0, 0.0]},
    "reference": {"kind": "sine_component", "component": 1, "amplitude": 1.5,
                  "omega": 0.6283185307179586},
    "track_component": 1
  },
  "output": {"dir": "out/lorenz"}
})json";

}  // namespace

TEST_CASE("a full config parses with every cross-field check") {
  const ExperimentConfig c = parse_config_json(kLorenzConfig);
  CHECK(c.system_name == "lorenz_affine");
  CHECK(c.box.lower(0) == -50.0);
  CHECK(c.make_V().size() == 2);
  CHECK(c.mpc.p == 3);
  CHECK(c.mpc.mode == MpcMode::Both);
  CHECK(c.Q(1, 1) == 1.0);
  CHECK(c.Q(0, 0) == 0.0);
  const auto ref = c.make_reference(3);
  CHECK(ref(0.0)(1) == doctest::Approx(0.0));
  CHECK(ref(5.0)(1) == doctest::Approx(1.5 * std::sin(0.6283185307179586 * 5.0)));
}

TEST_CASE("config round trip through serialization is stable") {
  const ExperimentConfig c1 = parse_config_json(kLorenzConfig);
  const std::string dumped = serialize_config(c1);
  const ExperimentConfig c2 = parse_config_json(dumped);
  CHECK(serialize_config(c2) == dumped);
  CHECK(config_hash(serialize_config(c2)) == config_hash(dumped));
}

TEST_CASE("field-path errors") {
  using nlohmann::json;
  auto patch = [&](const std::function<void(json&)>& mutate) {
    json j = json::parse(kLorenzConfig);
    mutate(j);
    return j.dump();
  };

  // dt does not divide T_train
  CHECK_THROWS_AS(parse_config_json(patch([](json& j) { j["data"]["T_train"] = 100.03; })),
                  ConfigError);
  // V point outside the box
  CHECK_THROWS_AS(parse_config_json(patch([](json& j) {
                    j["quantization"]["rule"] = "explicit";
                    j["quantization"]["points"] = {{-60.0}, {50.0}};
                  })),
                  ConfigError);
  // box dimension != n_u
  CHECK_THROWS_AS(parse_config_json(patch([](json& j) {
                    j["quantization"]["lower"] = {-50.0, -1.0};
                    j["quantization"]["upper"] = {50.0, 1.0};
                  })),
                  ConfigError);
  // dt_sur does not divide dt
  CHECK_THROWS_AS(parse_config_json(patch([](json& j) { j["mpc"]["dt_sur"] = 0.0007; })),
                  ConfigError);
  // y0 dimension mismatch
  CHECK_THROWS_AS(parse_config_json(patch([](json& j) { j["data"]["y0"] = {1.0, 1.0}; })),
                  ConfigError);
  // unknown mode
  CHECK_THROWS_AS(parse_config_json(patch([](json& j) { j["mpc"]["mode"] = "hybrid"; })),
                  ConfigError);

  try {
    parse_config_json(patch([](json& j) { j["data"]["T_train"] = 100.03; }));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field == "data.T_train");
  }
}

TEST_CASE("manifest is written with the config hash") {
  const ExperimentConfig c = parse_config_json(kLorenzConfig);
  const auto dir = std::filesystem::temp_directory_path() / "qsm_manifest";
  write_run_manifest(dir.string(), "generate", c, 42);
  std::ifstream f(dir / "run_manifest.json");
  REQUIRE(f.good());
  nlohmann::json j;
  f >> j;
  CHECK(j["command"] == "generate");
  CHECK(j["config_hash"] == config_hash(c.raw_json));
  CHECK(j["seed"] == 42);
}

TEST_CASE("shipped experiment configs parse") {
  const char* names[] = {
      "configs/duffing_bounds.json",    "configs/lorenz_edmd.json",
      "configs/lorenz_cos_edmd.json",   "configs/mackey_glass_esn.json",
      "configs/burgers_pod.json",       "configs/data_efficiency_lorenz.json",
      "configs/data_efficiency_lorenz_cos.json",
      "configs/data_efficiency_lorenz_cos_offbounds.json",
  };
  for (const char* name : names) {
    const std::filesystem::path p = std::filesystem::path(QSM_SOURCE_DIR) / name;
    INFO(name);
    CHECK_NOTHROW(load_config(p.string()));
  }
}
