#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quasimodo/datagen.hpp"
#include "quasimodo/ensemble.hpp"
#include "quasimodo/optimize.hpp"

namespace quasimodo {

enum class MpcMode { Interpolate, Sur, Both };
enum class WarmStartPolicy { Shift, Uniform };

struct MpcConfig {
  long p = 3;              // prediction horizon steps
  double dt = 0.05;        // surrogate/control step
  double dt_sur = 0.05;    // fine rounding step; must divide dt
  double T_mpc = 10.0;     // closed-loop duration
  MpcMode mode = MpcMode::Interpolate;
  int plant_substeps = 10;  // RK4 steps per dt (per dt_sur in sur mode)
  WarmStartPolicy warm_start = WarmStartPolicy::Shift;
  bool sur_reset = false;  // reset the SUR accumulator at every solve
  SolverConfig solver;
};

struct MpcLogRow {
  double t = 0.0;
  Vector y;       // plant state at t
  Vector z;       // observable at t
  Vector ref;     // reference at t
  Vector alpha0;  // first row of the optimal plan
  Vector u;       // control applied at the start of [t, t+dt)
  std::vector<Vector> fine_controls;  // per dt_sur step (sur mode)
  double objective = 0.0;
  int solver_iters = 0;
  double wall_ms = 0.0;
};

struct MpcLog {
  std::string mode;
  std::vector<MpcLogRow> rows;
  Vector y_final;
  double t_final = 0.0;
};

struct MpcResult {
  std::optional<MpcLog> interpolate;
  std::optional<MpcLog> sur;
};

// Aborted closed loop: carries the partial log and the failing step index.
struct MpcAborted : std::runtime_error {
  long step;
  MpcLog partial;
  MpcAborted(long step_index, MpcLog log, const std::string& reason)
      : std::runtime_error("mpc aborted at step " + std::to_string(step_index) + ": " + reason),
        step(step_index),
        partial(std::move(log)) {}
};

// Receding-horizon closed loop: observe, solve the relaxed problem on the
// surrogate, apply the interpolated or SUR-rounded first control to the
// plant. Mode Both runs the two loops from the same initial state.
MpcResult run_mpc(const SystemModel& plant, const SurrogateEnsemble& ensemble,
                  const ObservableSpec& observable, const ObjectiveSpec& spec,
                  const MpcConfig& config, const Vector& y0);

struct TrackingMetrics {
  double mse = 0.0;
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

// Error of observable component `component` against the logged reference;
// component < 0 uses the Q-weighted norm of the full deviation.
TrackingMetrics tracking_metrics(const MpcLog& log, int component,
                                 const Matrix* Q = nullptr);

// External outputs: CSV (one row per coarse step), JSON run header, and a
// plain matplotlib script with the three-row state/error/control layout.
void write_mpc_csv(const std::string& path, const MpcLog& log);
void write_mpc_fine_controls_csv(const std::string& path, const MpcLog& log, double dt_sur);
void write_mpc_metadata(const std::string& path, const MpcLog& log, const MpcConfig& config,
                        const std::string& system_name);
void write_mpc_plot_script(const std::string& path, const std::string& csv_name, int n_y,
                           int q, int n_u, int ref_component);

}  // namespace quasimodo
