#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "quasimodo/errors.hpp"
#include "quasimodo/mpc.hpp"
#include "support.hpp"

using namespace quasimodo;
using namespace quasimodo::testing;

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }

// Scalar plant dy = -y + u with the matching exact flow ensemble.
SystemModel scalar_plant() {
  SystemModel s;
  s.name = "scalar";
  s.n_y = 1;
  s.n_u = 1;
  s.rhs = [](const Vector& y, const Vector& u, double, const DelayHistory*) {
    return Vector(-y + u);
  };
  return s;
}

QuantizedControlSet pm_one() {
  QuantizedControlSet V;
  V.parent = {vec1(-1.0), vec1(1.0)};
  V.points = {vec1(-1.0), vec1(1.0)};
  return V;
}

}  // namespace

TEST_CASE("self-tracking: exact model on the uncontrolled reference keeps J* at zero") {
  const SystemModel plant = scalar_plant();
  const QuantizedControlSet V = pm_one();
  const FlowEnsemble ens(plant, V, 0.1, 4);

  // the reference is the plant's own uncontrolled decay from y0
  const double y0 = 0.8;
  ObjectiveSpec spec;
  spec.Q = Matrix::Identity(1, 1);
  spec.z_ref = [y0](double t) { return vec1(y0 * std::exp(-t)); };

  MpcConfig config;
  config.p = 3;
  config.dt = 0.1;
  config.dt_sur = 0.1;
  config.T_mpc = 1.0;
  config.mode = MpcMode::Interpolate;
  config.plant_substeps = 4;

  const MpcResult result = run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(y0));
  REQUIRE(result.interpolate.has_value());
  for (const auto& row : result.interpolate->rows) {
    CHECK(row.objective < 1e-6);
    CHECK(std::abs(row.u(0)) < 2e-2);  // u = 0 reproduces the reference
  }
  const TrackingMetrics m = tracking_metrics(*result.interpolate, 0);
  CHECK(m.max_abs < 1e-3);
}

TEST_CASE("admissibility: interpolated controls stay in U, SUR controls in V") {
  const SystemModel plant = scalar_plant();
  const QuantizedControlSet V = pm_one();
  const FlowEnsemble ens(plant, V, 0.1, 2);
  ObjectiveSpec spec;
  spec.Q = Matrix::Identity(1, 1);
  spec.z_ref = [](double t) { return vec1(0.5 * std::sin(2.0 * t)); };

  MpcConfig config;
  config.p = 4;
  config.dt = 0.1;
  config.dt_sur = 0.02;
  config.T_mpc = 2.0;
  config.mode = MpcMode::Both;
  config.plant_substeps = 2;

  const MpcResult result = run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(0.0));
  REQUIRE(result.interpolate.has_value());
  REQUIRE(result.sur.has_value());
  for (const auto& row : result.interpolate->rows) {
    CHECK(V.parent.contains(row.u, 1e-9));
  }
  for (const auto& row : result.sur->rows) {
    CHECK(row.fine_controls.size() == 5);  // dt / dt_sur
    for (const auto& u : row.fine_controls) {
      const bool in_v = (u - V.points[0]).lpNorm<Eigen::Infinity>() == 0.0 ||
                        (u - V.points[1]).lpNorm<Eigen::Infinity>() == 0.0;
      CHECK(in_v);
    }
  }
}

TEST_CASE("both mode returns identical first-step solves") {
  const SystemModel plant = scalar_plant();
  const QuantizedControlSet V = pm_one();
  const FlowEnsemble ens(plant, V, 0.1, 2);
  ObjectiveSpec spec;
  spec.Q = Matrix::Identity(1, 1);
  spec.z_ref = [](double) { return vec1(0.4); };

  MpcConfig config;
  config.p = 3;
  config.dt = 0.1;
  config.dt_sur = 0.05;
  config.T_mpc = 1.0;
  config.mode = MpcMode::Both;

  const MpcResult result = run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(0.0));
  const Vector a0 = result.interpolate->rows.front().alpha0;
  const Vector b0 = result.sur->rows.front().alpha0;
  CHECK((a0 - b0).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(result.interpolate->rows.front().objective == result.sur->rows.front().objective);
}

TEST_CASE("closed loops are deterministic") {
  const SystemModel plant = scalar_plant();
  const QuantizedControlSet V = pm_one();
  const FlowEnsemble ens(plant, V, 0.1, 2);
  ObjectiveSpec spec;
  spec.Q = Matrix::Identity(1, 1);
  spec.z_ref = [](double t) { return vec1(0.3 * std::cos(t)); };

  MpcConfig config;
  config.p = 3;
  config.dt = 0.1;
  config.dt_sur = 0.05;
  config.T_mpc = 1.5;
  config.mode = MpcMode::Sur;

  const MpcResult r1 = run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(0.2));
  const MpcResult r2 = run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(0.2));
  REQUIRE(r1.sur->rows.size() == r2.sur->rows.size());
  for (std::size_t k = 0; k < r1.sur->rows.size(); ++k) {
    CHECK((r1.sur->rows[k].y - r2.sur->rows[k].y).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((r1.sur->rows[k].u - r2.sur->rows[k].u).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("tracking metrics definitions") {
  MpcLog log;
  auto push = [&](double z, double ref) {
    MpcLogRow row;
    row.t = 0.0;
    row.y = vec1(z);
    row.z = vec1(z);
    row.ref = vec1(ref);
    row.alpha0 = vec1(1.0);
    row.u = vec1(0.0);
    log.rows.push_back(row);
  };

  SUBCASE("zero error") {
    push(1.0, 1.0);
    push(-2.0, -2.0);
    const TrackingMetrics m = tracking_metrics(log, 0);
    CHECK(m.mse == 0.0);
    CHECK(m.mean_abs == 0.0);
    CHECK(m.max_abs == 0.0);
  }
  SUBCASE("constant offset") {
    push(1.5, 1.0);
    push(0.5, 0.0);
    push(-0.5, -1.0);
    const TrackingMetrics m = tracking_metrics(log, 0);
    CHECK(m.mean_abs == doctest::Approx(0.5));
    CHECK(m.mse == doctest::Approx(0.25));
    CHECK(m.max_abs == doctest::Approx(0.5));
  }
  SUBCASE("hand-computed three-step case") {
    push(1.0, 0.0);   // e = 1
    push(0.0, 2.0);   // e = -2
    push(-1.0, -4.0); // e = 3
    const TrackingMetrics m = tracking_metrics(log, 0);
    CHECK(m.mse == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0));
    CHECK(m.mean_abs == doctest::Approx(2.0));
    CHECK(m.max_abs == doctest::Approx(3.0));
  }
}

TEST_CASE("empty log is rejected") {
  MpcLog log;
  CHECK_THROWS_AS(tracking_metrics(log, 0), InvalidParam);
}

TEST_CASE("aborted loops carry the partial log and the failing step") {
  SystemModel plant;  // blows up quickly under any control
  plant.name = "blow";
  plant.n_y = 1;
  plant.n_u = 1;
  plant.rhs = [](const Vector& y, const Vector&, double, const DelayHistory*) {
    return Vector(y.array().square().matrix() * 1e6);
  };
  const QuantizedControlSet V = pm_one();
  const FlowEnsemble ens(scalar_plant(), V, 0.1, 2);
  ObjectiveSpec spec;
  spec.Q = Matrix::Identity(1, 1);
  spec.z_ref = [](double) { return vec1(0.0); };
  MpcConfig config;
  config.p = 2;
  config.dt = 0.1;
  config.dt_sur = 0.1;
  config.T_mpc = 1.0;
  try {
    run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(5.0));
    FAIL("expected MpcAborted");
  } catch (const MpcAborted& e) {
    CHECK(e.step >= 0);
    CHECK(e.partial.rows.size() <= 2);
  }
}

TEST_CASE("mpc log files are written with one row per coarse step") {
  const SystemModel plant = scalar_plant();
  const QuantizedControlSet V = pm_one();
  const FlowEnsemble ens(plant, V, 0.1, 2);
  ObjectiveSpec spec;
  spec.Q = Matrix::Identity(1, 1);
  spec.z_ref = [](double) { return vec1(0.2); };
  MpcConfig config;
  config.p = 2;
  config.dt = 0.1;
  config.dt_sur = 0.05;
  config.T_mpc = 0.5;
  config.mode = MpcMode::Sur;
  const MpcResult result = run_mpc(plant, ens, ObservableSpec{}, spec, config, vec1(0.0));

  const auto dir = std::filesystem::temp_directory_path() / "qsm_mpc_io";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "log.csv").string();
  write_mpc_csv(csv, *result.sur);
  write_mpc_fine_controls_csv((dir / "fine.csv").string(), *result.sur, config.dt_sur);
  write_mpc_metadata((dir / "meta.json").string(), *result.sur, config, plant.name);
  write_mpc_plot_script((dir / "plot.py").string(), "log.csv", 1, 1, 1, 0);

  std::ifstream f(csv);
  std::string line;
  long rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == 6);  // header + 5 coarse steps

  std::ifstream ff((dir / "fine.csv").string());
  rows = 0;
  while (std::getline(ff, line)) ++rows;
  CHECK(rows == 11);  // header + 5 * 2 fine steps
}
