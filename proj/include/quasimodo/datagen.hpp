#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quasimodo/dynamics.hpp"
#include "quasimodo/quantization.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

struct ObservableSpec {
  enum class Kind { FullState, CoordinateSelection, DelayEmbedding };
  Kind kind = Kind::FullState;
  std::vector<int> indices;        // CoordinateSelection
  Kind base_kind = Kind::FullState;  // DelayEmbedding base
  std::vector<int> base_indices;
  int delay_count = 0;  // d
  int lag_step = 1;

  int output_dim(int n_y) const;
};

// One long random-actuation time series; control_indices[i] labels the map
// from observables[i] to observables[i+1] (0-based in memory, 1-based in CSV).
struct LabeledTrajectory {
  std::vector<double> times;
  std::vector<Vector> observables;
  std::vector<int> control_indices;
  std::vector<Vector> controls_applied;

  long size() const { return static_cast<long>(observables.size()); }
  bool consistent() const;
};

struct SnapshotPairs {
  std::vector<Matrix> Z;       // per control j: inputs, columns are observables
  std::vector<Matrix> Ztilde;  // one-step successors
  std::vector<int> empty_buckets;

  int num_controls() const { return static_cast<int>(Z.size()); }
};

struct DatasetMeta {
  std::string system_name;
  std::map<std::string, double> params;
  std::vector<Vector> control_points;
  double dt = 0.0;
  std::uint64_t seed = 0;
  int substeps = 1;
};

// Integrates the plant under i.i.d.-uniform control indices from V, one per
// dt_model interval, recording full states on the dt_model grid.
LabeledTrajectory generate_training_data(const SystemModel& system, const QuantizedControlSet& V,
                                         double dt_model, double T_train, int substeps,
                                         std::uint64_t seed, const Vector& y0);

SnapshotPairs partition_by_control(const LabeledTrajectory& traj, int num_controls);

std::vector<Vector> apply_observable(const std::vector<Vector>& states,
                                     const ObservableSpec& spec);

// Rewrites the whole trajectory through the observable (delay embedding
// shortens it and drops the matching leading labels).
LabeledTrajectory observe_trajectory(const LabeledTrajectory& traj, const ObservableSpec& spec);

// CSV schema: t, z_1..z_q, j, u_1..u_{n_u}; floats with 17 significant
// digits; j is 1-based, the final row carries placeholder zeros for j and u.
void save_dataset(const std::string& path, const LabeledTrajectory& traj,
                  const DatasetMeta& meta);
LabeledTrajectory load_dataset(const std::string& path, DatasetMeta* meta_out = nullptr);

}  // namespace quasimodo
