#pragma once

#include <memory>
#include <string>

#include "quasimodo/config.hpp"
#include "quasimodo/ensemble.hpp"
#include "quasimodo/mpc.hpp"

namespace quasimodo {

// generate: dataset CSV + metadata at <out>/dataset.csv
std::string cmd_generate(const ExperimentConfig& config, const std::string& out_dir);

struct TrainReport {
  std::string model_path;
  double holdout_rel_error = 0.0;  // mean one-step relative error on the tail split
  long holdout_transitions = 0;
  double pod_retained_energy = -1.0;  // POD backend only
};

TrainReport cmd_train(const ExperimentConfig& config, const std::string& dataset_path,
                      const std::string& out_dir);

// Fits the configured surrogate from an in-memory trajectory (the tail
// `holdout_fraction` is excluded from the fit).
std::unique_ptr<SurrogateEnsemble> fit_surrogate(const ExperimentConfig& config,
                                                 const LabeledTrajectory& traj,
                                                 TrainReport* report = nullptr);

struct MpcRunReport {
  MpcResult result;
  TrackingMetrics interp_metrics;
  TrackingMetrics sur_metrics;
};

MpcRunReport cmd_mpc(const ExperimentConfig& config, const std::string& model_path,
                     const std::string& out_dir);

// Convenience pipeline used by tests: generate + fit + run, no files.
MpcRunReport run_pipeline(const ExperimentConfig& config);

}  // namespace quasimodo
