#include "quasimodo/experiments.hpp"

#include <filesystem>
#include <iostream>

#include "quasimodo/errors.hpp"
#include "quasimodo/model_io.hpp"

namespace quasimodo {

namespace fs = std::filesystem;

std::string cmd_generate(const ExperimentConfig& config, const std::string& out_dir) {
  const SystemModel system = config.make_system();
  const QuantizedControlSet V = config.make_V();
  const Vector y0 = config.y0_train.value_or(default_initial_state(system));

  LabeledTrajectory raw = generate_training_data(system, V, config.data_dt, config.T_train,
                                                 config.data_substeps, config.seed, y0);
  const LabeledTrajectory observed = observe_trajectory(raw, config.observable);

  fs::create_directories(out_dir);
  const std::string path = out_dir + "/dataset.csv";
  DatasetMeta meta;
  meta.system_name = system.name;
  meta.params = system.params;
  meta.control_points = V.points;
  meta.dt = config.data_dt;
  meta.seed = config.seed;
  meta.substeps = config.data_substeps;
  save_dataset(path, observed, meta);
  return path;
}

namespace {

LabeledTrajectory head_slice(const LabeledTrajectory& traj, long n_states) {
  LabeledTrajectory out;
  out.times.assign(traj.times.begin(), traj.times.begin() + n_states);
  out.observables.assign(traj.observables.begin(), traj.observables.begin() + n_states);
  out.control_indices.assign(traj.control_indices.begin(),
                             traj.control_indices.begin() + (n_states - 1));
  out.controls_applied.assign(traj.controls_applied.begin(),
                              traj.controls_applied.begin() + (n_states - 1));
  return out;
}

double one_step_holdout_error(const SurrogateEnsemble& ens, const LabeledTrajectory& traj,
                              long first_holdout_transition, long* count_out) {
  // Teacher-forced one-step predictions across the tail; the ESN reservoir is
  // driven by the true series so every backend sees the same protocol.
  SurrogateEnsemble::State state = ens.initial_state();
  std::vector<Vector> prefix(traj.observables.begin(),
                             traj.observables.begin() + first_holdout_transition);
  ens.sync(state, prefix);
  double err_sum = 0.0;
  long count = 0;
  for (long k = first_holdout_transition; k + 1 < traj.size(); ++k) {
    const Vector z_model = ens.to_model(traj.observables[static_cast<std::size_t>(k)]);
    const Vector pred =
        ens.to_observable(ens.one_step(z_model, traj.control_indices[static_cast<std::size_t>(k)],
                                       state));
    const Vector& truth = traj.observables[static_cast<std::size_t>(k + 1)];
    err_sum += (pred - truth).norm() / std::max(truth.norm(), 1e-12);
    ++count;
  }
  if (count_out) *count_out = count;
  return count > 0 ? err_sum / static_cast<double>(count) : 0.0;
}

}  // namespace

std::unique_ptr<SurrogateEnsemble> fit_surrogate(const ExperimentConfig& config,
                                                 const LabeledTrajectory& traj,
                                                 TrainReport* report) {
  const QuantizedControlSet V = config.make_V();
  const long n = traj.size();
  const long holdout = static_cast<long>(config.holdout_fraction * static_cast<double>(n));
  const long n_train = std::max<long>(2, n - holdout);
  const LabeledTrajectory train = head_slice(traj, n_train);

  std::unique_ptr<SurrogateEnsemble> ens;
  if (config.model_kind == "edmd") {
    const SnapshotPairs pairs = partition_by_control(train, V.size());
    DictionarySpec spec{config.edmd_max_degree, true};
    ens = std::make_unique<EdmdEnsemble>(edmd_fit(pairs, spec), V, config.data_dt,
                                         config.propagate_lifted);
  } else if (config.model_kind == "esn") {
    const int q = static_cast<int>(train.observables.front().size());
    const EsnReservoir reservoir =
        esn_init(config.esn.n_r, q, config.esn.spectral_radius, config.esn.sparsity,
                 config.esn.activation_scale, config.seed, config.esn.feedback_scale);
    EsnModel model = esn_fit(train, reservoir, config.esn.washout, config.esn.ridge_beta);
    ens = std::make_unique<EsnEnsemble>(std::move(model), V, config.data_dt,
                                        config.esn.sync_window);
  } else if (config.model_kind == "pod") {
    Matrix snapshots(train.observables.front().size(), train.size());
    for (long k = 0; k < train.size(); ++k) {
      snapshots.col(k) = train.observables[static_cast<std::size_t>(k)];
    }
    PodModel model;
    model.basis = pod_fit(snapshots, config.pod_ell);
    model.plant = config.make_system();
    model.V = V;
    model.dt = config.data_dt;
    model.substeps = config.pod_substeps;
    if (report) report->pod_retained_energy = model.basis.retained_energy;
    ens = std::make_unique<PodEnsemble>(std::move(model));
  } else if (config.model_kind == "perturbed") {
    ens = std::make_unique<FlowEnsemble>(config.make_system(), V, config.data_dt,
                                         config.model_substeps, config.perturbation);
  } else {
    throw ConfigError("model.kind", "unknown kind " + config.model_kind);
  }

  if (report) {
    report->holdout_rel_error =
        one_step_holdout_error(*ens, traj, n_train - 1, &report->holdout_transitions);
  }
  return ens;
}

TrainReport cmd_train(const ExperimentConfig& config, const std::string& dataset_path,
                      const std::string& out_dir) {
  const LabeledTrajectory traj = load_dataset(dataset_path);
  TrainReport report;
  auto ens = fit_surrogate(config, traj, &report);
  fs::create_directories(out_dir);
  report.model_path = out_dir + "/model.json";
  save_model(report.model_path, *ens);
  return report;
}

namespace {

MpcRunReport run_mpc_with(const ExperimentConfig& config, const SurrogateEnsemble& ens,
                          const std::string* out_dir) {
  const SystemModel plant = config.make_system();
  const int q = ens.observable_dim();
  ObjectiveSpec spec;
  spec.Q = config.Q.size() > 0 ? config.Q : Matrix::Identity(q, q);
  if (spec.Q.rows() != q) throw ConfigError("mpc.Q", "dimension != observable dimension");
  spec.z_ref = config.make_reference(q);
  const Vector y0 = config.y0_mpc.value_or(default_initial_state(plant));

  MpcRunReport report;
  report.result = run_mpc(plant, ens, config.observable, spec, config.mpc, y0);
  if (report.result.interpolate) {
    report.interp_metrics = tracking_metrics(*report.result.interpolate, config.track_component);
  }
  if (report.result.sur) {
    report.sur_metrics = tracking_metrics(*report.result.sur, config.track_component);
  }

  if (out_dir) {
    fs::create_directories(*out_dir);
    auto dump = [&](const MpcLog& log, const std::string& tag) {
      const std::string csv = *out_dir + "/mpc_" + tag + ".csv";
      write_mpc_csv(csv, log);
      write_mpc_metadata(*out_dir + "/mpc_" + tag + ".json", log, config.mpc, plant.name);
      write_mpc_plot_script(*out_dir + "/plot_mpc_" + tag + ".py", "mpc_" + tag + ".csv",
                            plant.n_y, q, plant.n_u, config.track_component);
      if (tag == "sur") {
        write_mpc_fine_controls_csv(*out_dir + "/mpc_sur_fine_controls.csv", log,
                                    config.mpc.dt_sur);
      }
    };
    if (report.result.interpolate) dump(*report.result.interpolate, "interpolate");
    if (report.result.sur) dump(*report.result.sur, "sur");
  }
  return report;
}

}  // namespace

MpcRunReport cmd_mpc(const ExperimentConfig& config, const std::string& model_path,
                     const std::string& out_dir) {
  auto ens = load_model(model_path);
  return run_mpc_with(config, *ens, &out_dir);
}

MpcRunReport run_pipeline(const ExperimentConfig& config) {
  const SystemModel system = config.make_system();
  const QuantizedControlSet V = config.make_V();
  const Vector y0 = config.y0_train.value_or(default_initial_state(system));
  LabeledTrajectory raw = generate_training_data(system, V, config.data_dt, config.T_train,
                                                 config.data_substeps, config.seed, y0);
  const LabeledTrajectory observed = observe_trajectory(raw, config.observable);
  auto ens = fit_surrogate(config, observed, nullptr);
  return run_mpc_with(config, *ens, nullptr);
}

}  // namespace quasimodo
