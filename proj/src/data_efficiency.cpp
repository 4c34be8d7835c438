#include "quasimodo/data_efficiency.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "quasimodo/errors.hpp"
#include "quasimodo/esn.hpp"

namespace quasimodo {

namespace {

struct TrialErrors {
  // [size][0..3] = ens_V, aug_V, ens_U, aug_U
  std::vector<std::array<double, 4>> by_size;
};

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

// Training series under uniform box-valued actuation (for the augmented
// model); control labels are placeholders.
LabeledTrajectory generate_box_actuated(const SystemModel& system, const BoxControlSet& box,
                                        double dt, double T, int substeps, std::uint64_t seed,
                                        const Vector& y0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long steps = std::lround(T / dt);
  LabeledTrajectory traj;
  Vector y = y0;
  traj.times.push_back(0.0);
  traj.observables.push_back(y);
  DelayHistory hist;
  DelayHistory* hp = nullptr;
  if (system.has_delay()) {
    hist = constant_history(y0, 0.0, system.delay);
    hp = &hist;
  }
  for (long i = 0; i < steps; ++i) {
    Vector u(box.dim());
    for (long c = 0; c < u.size(); ++c) {
      u(c) = box.lower(c) + unit(rng) * (box.upper(c) - box.lower(c));
    }
    TimeGrid grid{i * dt, dt, 1};
    y = flow_map(system, y, {u}, grid, substeps, hp).back();
    traj.times.push_back((i + 1) * dt);
    traj.observables.push_back(y);
    traj.control_indices.push_back(0);
    traj.controls_applied.push_back(u);
  }
  return traj;
}

// Interpolation weights for a continuous u over a two-point V (clamped).
Vector two_point_weights(const Vector& u, const QuantizedControlSet& V) {
  const double v1 = V.points[0](0), v2 = V.points[1](0);
  double lam = (u(0) - v1) / (v2 - v1);
  lam = std::min(std::max(lam, 0.0), 1.0);
  Vector w(2);
  w << 1.0 - lam, lam;
  return w;
}

struct EvalSetup {
  std::vector<Vector> sync_states;    // plant states over the sync window
  std::vector<Vector> sync_controls;  // controls over the sync window
  std::vector<Vector> eval_controls;  // controls over the prediction horizon
  std::vector<int> eval_indices;      // V indices when V-drawn, else -1
  std::vector<Vector> truth;          // plant states over the prediction horizon
  Vector z_start;                     // state at the prediction start
};

EvalSetup make_eval_run(const SystemModel& system, const BoxControlSet& box,
                        const QuantizedControlSet& V, bool draw_from_v,
                        const DataEfficiencyConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, V.size() - 1);

  auto draw_control = [&](int* index_out) {
    if (draw_from_v) {
      const int j = pick(rng);
      if (index_out) *index_out = j;
      return V.points[j];
    }
    if (index_out) *index_out = -1;
    Vector u(box.dim());
    for (long c = 0; c < u.size(); ++c) {
      u(c) = box.lower(c) + unit(rng) * (box.upper(c) - box.lower(c));
    }
    return u;
  };

  const long burn_steps = std::lround(cfg.burn_in / cfg.dt);
  const long eval_steps = std::lround(cfg.eval_horizon / cfg.dt);

  EvalSetup setup;
  Vector y = default_initial_state(system);
  DelayHistory hist;
  DelayHistory* hp = nullptr;
  if (system.has_delay()) {
    hist = constant_history(y, 0.0, system.delay);
    hp = &hist;
  }
  double t = 0.0;
  auto advance = [&](const Vector& u) {
    TimeGrid grid{t, cfg.dt, 1};
    y = flow_map(system, y, {u}, grid, cfg.substeps, hp).back();
    t += cfg.dt;
  };

  for (long i = 0; i < burn_steps; ++i) advance(draw_control(nullptr));
  for (int i = 0; i < cfg.sync_steps; ++i) {
    setup.sync_states.push_back(y);
    const Vector u = draw_control(nullptr);
    setup.sync_controls.push_back(u);
    advance(u);
  }
  setup.z_start = y;
  for (long i = 0; i < eval_steps; ++i) {
    int idx = -1;
    const Vector u = draw_control(&idx);
    setup.eval_controls.push_back(u);
    setup.eval_indices.push_back(idx);
    advance(u);
    setup.truth.push_back(y);
  }
  return setup;
}

double relative_l2(const std::vector<Vector>& pred, const std::vector<Vector>& truth) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    num += (pred[k] - truth[k]).squaredNorm();
    den += truth[k].squaredNorm();
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

double eval_ensemble(const EsnModel& model, const QuantizedControlSet& V, const EvalSetup& run) {
  EsnState state = model.fresh_state();
  // teacher-forced sync on true plant states (the window excludes z_start)
  esn_sync(model, state, run.sync_states);
  std::vector<Vector> pred;
  Vector z = run.z_start;
  for (std::size_t k = 0; k < run.eval_controls.size(); ++k) {
    state.r = model.reservoir.step(state.r, z);
    if (run.eval_indices[k] >= 0) {
      z = model.W_out[static_cast<std::size_t>(run.eval_indices[k])] * state.r;
    } else {
      const Vector w = two_point_weights(run.eval_controls[k], V);
      z = w(0) * (model.W_out[0] * state.r) + w(1) * (model.W_out[1] * state.r);
    }
    pred.push_back(z);
  }
  return relative_l2(pred, run.truth);
}

double eval_augmented(const AugmentedEsnModel& model, const EvalSetup& run) {
  EsnState state = model.fresh_state();
  esn_sync_augmented(model, state, run.sync_states, run.sync_controls);
  std::vector<Vector> pred;
  Vector z = run.z_start;
  for (std::size_t k = 0; k < run.eval_controls.size(); ++k) {
    z = esn_predict_augmented(model, state, z, run.eval_controls[k]);
    pred.push_back(z);
  }
  return relative_l2(pred, run.truth);
}

TrialErrors run_trial(const SystemModel& system, const BoxControlSet& box,
                      const QuantizedControlSet& V, const DataEfficiencyConfig& cfg, int trial) {
  const std::uint64_t base = cfg.seed + 7919ull * static_cast<std::uint64_t>(trial);
  const int q = system.n_y;
  const EsnReservoir reservoir =
      esn_init(cfg.esn.n_r, q, cfg.esn.spectral_radius, cfg.esn.sparsity,
               cfg.esn.activation_scale, base, cfg.esn.feedback_scale);

  const Vector y0 = default_initial_state(system);
  const LabeledTrajectory traj_v =
      generate_training_data(system, V, cfg.dt, cfg.T_train, cfg.substeps, base + 1, y0);
  const LabeledTrajectory traj_u =
      generate_box_actuated(system, box, cfg.dt, cfg.T_train, cfg.substeps, base + 2, y0);

  TrialErrors errors;
  errors.by_size.resize(cfg.sizes.size());
  for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
    const long n = cfg.sizes[si];
    const EsnModel ens = esn_fit(head_slice(traj_v, n + 1), reservoir, cfg.esn.washout,
                                 cfg.esn.ridge_beta);
    const AugmentedEsnModel aug =
        esn_fit_augmented(head_slice(traj_u, n + 1), reservoir, cfg.esn.input_scale,
                          cfg.esn.washout, cfg.esn.ridge_beta, base + 3);

    std::array<double, 4> sums{0.0, 0.0, 0.0, 0.0};
    for (int sim = 0; sim < cfg.eval_sims; ++sim) {
      const std::uint64_t es = base + 100 + 2ull * static_cast<std::uint64_t>(sim);
      const EvalSetup run_v = make_eval_run(system, box, V, true, cfg, es);
      const EvalSetup run_u = make_eval_run(system, box, V, false, cfg, es + 1);
      sums[0] += eval_ensemble(ens, V, run_v);
      sums[1] += eval_augmented(aug, run_v);
      sums[2] += eval_ensemble(ens, V, run_u);
      sums[3] += eval_augmented(aug, run_u);
    }
    for (int c = 0; c < 4; ++c) {
      errors.by_size[si][static_cast<std::size_t>(c)] = sums[c] / cfg.eval_sims;
    }
  }
  return errors;
}

}  // namespace

DataEfficiencyResult run_data_efficiency(const SystemModel& system, const BoxControlSet& box,
                                         const QuantizedControlSet& V,
                                         const DataEfficiencyConfig& config, int workers) {
  if (V.size() != 2) {
    throw InvalidParam("data-efficiency study expects a two-point control set");
  }
  std::vector<TrialErrors> trials(static_cast<std::size_t>(config.trials));
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= config.trials) break;
      trials[static_cast<std::size_t>(t)] = run_trial(system, box, V, config, t);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::max(1, std::min(workers, config.trials));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  DataEfficiencyResult result;
  for (std::size_t si = 0; si < config.sizes.size(); ++si) {
    DataEfficiencyCell cell;
    cell.size = config.sizes[si];
    auto stats = [&](int c, double& mean, double& stdev) {
      double s = 0.0, s2 = 0.0;
      for (const auto& tr : trials) {
        const double v = tr.by_size[si][static_cast<std::size_t>(c)];
        s += v;
        s2 += v * v;
      }
      const double n = static_cast<double>(trials.size());
      mean = s / n;
      stdev = std::sqrt(std::max(0.0, s2 / n - mean * mean));
    };
    stats(0, cell.ens_v_mean, cell.ens_v_std);
    stats(1, cell.aug_v_mean, cell.aug_v_std);
    stats(2, cell.ens_u_mean, cell.ens_u_std);
    stats(3, cell.aug_u_mean, cell.aug_u_std);
    result.cells.push_back(cell);
  }
  return result;
}

void write_data_efficiency_csv(const std::string& path, const DataEfficiencyResult& result) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << "size,ens_V_mean,ens_V_std,aug_V_mean,aug_V_std,ens_U_mean,ens_U_std,aug_U_mean,"
       "aug_U_std\n";
  char buf[512];
  for (const auto& c : result.cells) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  c.size, c.ens_v_mean, c.ens_v_std, c.aug_v_mean, c.aug_v_std, c.ens_u_mean,
                  c.ens_u_std, c.aug_u_mean, c.aug_u_std);
    f << buf;
  }
}

}  // namespace quasimodo
