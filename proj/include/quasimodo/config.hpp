#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quasimodo/bounds.hpp"
#include "quasimodo/datagen.hpp"
#include "quasimodo/dynamics.hpp"
#include "quasimodo/mpc.hpp"
#include "quasimodo/quantization.hpp"

namespace quasimodo {

struct ReferenceSpec {
  std::string kind = "zero";  // zero | constant | sine_component
  Vector value;               // constant reference
  int component = 0;          // sine_component target coordinate
  double amplitude = 0.0;
  double omega = 0.0;

  std::function<Vector(double)> make(int q) const;
};

struct EsnConfig {
  int n_r = 200;
  double spectral_radius = 0.75;
  double sparsity = 0.9;
  double activation_scale = 0.99;
  double ridge_beta = 1e-4;
  double feedback_scale = 1.0;
  double input_scale = 1.0;  // augmented variant only
  int washout = 100;
  int sync_window = 20;
};

struct DataEfficiencyConfig {
  double T_train = 750.0;
  double dt = 0.05;
  int substeps = 10;
  std::vector<long> sizes;
  int trials = 20;
  int eval_sims = 20;
  double eval_horizon = 2.0;
  int sync_steps = 20;
  double burn_in = 5.0;
  EsnConfig esn;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  // system
  std::string system_name;
  std::map<std::string, double> system_params;

  // quantization
  BoxControlSet box;
  std::string v_rule = "vertices";  // vertices | star | explicit
  std::vector<Vector> v_points;     // explicit rule

  // data
  double data_dt = 0.05;
  double T_train = 100.0;
  int data_substeps = 10;
  std::uint64_t seed = 42;
  std::optional<Vector> y0_train;
  double holdout_fraction = 0.1;

  ObservableSpec observable;

  // model
  std::string model_kind = "edmd";  // edmd | esn | pod | perturbed
  int edmd_max_degree = 3;
  bool propagate_lifted = false;
  EsnConfig esn;
  int pod_ell = 12;
  int pod_substeps = 10;
  Vector perturbation;  // perturbed model
  int model_substeps = 1;

  // mpc
  MpcConfig mpc;
  std::optional<Vector> y0_mpc;
  Matrix Q;
  ReferenceSpec reference;
  int track_component = 0;

  std::optional<BoundExperimentConfig> bound_experiment;
  std::optional<DataEfficiencyConfig> data_efficiency;

  std::string out_dir = "out";
  std::string raw_json;  // canonical serialized form of the parsed file

  SystemModel make_system() const;
  QuantizedControlSet make_V() const;
  std::function<Vector(double)> make_reference(int q) const { return reference.make(q); }
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a over the canonical serialized config, for run manifests.
std::uint64_t config_hash(const std::string& text);

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const ExperimentConfig& config, std::uint64_t seed_used);

}  // namespace quasimodo
