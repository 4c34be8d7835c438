#include "quasimodo/mpc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "quasimodo/errors.hpp"

namespace quasimodo {

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Observable evaluated at the newest state; delay embeddings replicate the
// oldest available state when the loop has not produced enough history yet.
Vector observe_now(const ObservableSpec& spec, const std::vector<Vector>& past_states,
                   const Vector& y_now) {
  if (spec.kind != ObservableSpec::Kind::DelayEmbedding) {
    return apply_observable({y_now}, spec).back();
  }
  const long need = static_cast<long>(spec.delay_count) * spec.lag_step + 1;
  std::vector<Vector> window;
  window.reserve(static_cast<std::size_t>(need));
  for (long i = need - 1; i >= 1; --i) {
    const long idx = static_cast<long>(past_states.size()) - i;
    window.push_back(idx >= 0 ? past_states[static_cast<std::size_t>(idx)]
                              : (past_states.empty() ? y_now : past_states.front()));
  }
  window.push_back(y_now);
  return apply_observable(window, spec).back();
}

MpcLog run_single_loop(const SystemModel& plant, const SurrogateEnsemble& ensemble,
                       const ObservableSpec& observable, const ObjectiveSpec& spec,
                       const MpcConfig& config, const Vector& y0, bool sur_mode) {
  const double dt = config.dt;
  const int m = ensemble.num_controls();
  const QuantizedControlSet& V = ensemble.controls();

  long n_fine = 1;
  if (sur_mode) {
    const double ratio = dt / config.dt_sur;
    n_fine = std::lround(ratio);
    if (n_fine < 1 || std::abs(ratio - n_fine) > 1e-9 * std::max(1.0, ratio)) {
      throw InvalidParam("dt_sur must divide dt");
    }
  }

  MpcLog log;
  log.mode = sur_mode ? "sur" : "interpolate";
  const long steps = static_cast<long>(std::floor(config.T_mpc / dt + 1e-9));

  DelayHistory history;
  DelayHistory* hist = nullptr;
  if (plant.has_delay()) {
    history = constant_history(y0, 0.0, plant.delay);
    hist = &history;
  }

  SurAccumulator acc(m, config.dt_sur);
  RelaxedPlan warm = RelaxedPlan::uniform(config.p, m);
  std::vector<Vector> state_hist;  // plant states at past grid times
  std::vector<Vector> obs_hist;    // observables at past grid times
  Vector y = y0;
  double t = 0.0;

  for (long i = 0; i < steps; ++i) {
    try {
      const auto tic = std::chrono::steady_clock::now();
      const Vector z = observe_now(observable, state_hist, y);

      SurrogateEnsemble::State ens_state = ensemble.initial_state();
      ensemble.sync(ens_state, obs_hist);

      const SolveResult sol =
          solve_relaxed(ensemble, ens_state, z, config.p, spec, t, config.solver, &warm);

      MpcLogRow row;
      row.t = t;
      row.y = y;
      row.z = z;
      row.ref = spec.z_ref(t);
      row.alpha0 = sol.plan.rows.front();
      row.objective = sol.value;
      row.solver_iters = sol.iters;

      if (!sur_mode) {
        row.u = interpolate_control(row.alpha0, V);
        row.fine_controls = {row.u};
        TimeGrid grid{t, dt, 1};
        y = flow_map(plant, y, {row.u}, grid, config.plant_substeps, hist).back();
      } else {
        if (config.sur_reset) acc.reset();
        const std::vector<Vector> fine_alphas(static_cast<std::size_t>(n_fine), row.alpha0);
        const SurResult rounded = sur_round(fine_alphas, V, acc);
        row.fine_controls = rounded.controls;
        row.u = rounded.controls.front();
        for (long f = 0; f < n_fine; ++f) {
          TimeGrid grid{t + f * config.dt_sur, config.dt_sur, 1};
          y = flow_map(plant, y, {rounded.controls[static_cast<std::size_t>(f)]}, grid,
                       config.plant_substeps, hist)
                  .back();
        }
      }
      const auto toc = std::chrono::steady_clock::now();
      row.wall_ms = std::chrono::duration<double, std::milli>(toc - tic).count();
      log.rows.push_back(std::move(row));

      state_hist.push_back(log.rows.back().y);
      obs_hist.push_back(log.rows.back().z);
      if (config.warm_start == WarmStartPolicy::Shift) {
        warm = sol.plan;
        warm.rows.erase(warm.rows.begin());
        warm.rows.push_back(Vector::Constant(m, 1.0 / m));
      } else {
        warm = RelaxedPlan::uniform(config.p, m);
      }
      t += dt;
    } catch (const MpcAborted&) {
      throw;
    } catch (const std::exception& e) {
      throw MpcAborted(i, std::move(log), e.what());
    }
  }
  log.y_final = y;
  log.t_final = t;
  return log;
}

}  // namespace

MpcResult run_mpc(const SystemModel& plant, const SurrogateEnsemble& ensemble,
                  const ObservableSpec& observable, const ObjectiveSpec& spec,
                  const MpcConfig& config, const Vector& y0) {
  if (config.p < 1) throw InvalidParam("horizon p must be >= 1");
  if (config.p * config.dt > config.T_mpc + 1e-12) {
    throw InvalidParam("p * dt must not exceed T_mpc");
  }
  MpcResult result;
  if (config.mode == MpcMode::Interpolate || config.mode == MpcMode::Both) {
    result.interpolate = run_single_loop(plant, ensemble, observable, spec, config, y0, false);
  }
  if (config.mode == MpcMode::Sur || config.mode == MpcMode::Both) {
    result.sur = run_single_loop(plant, ensemble, observable, spec, config, y0, true);
  }
  return result;
}

TrackingMetrics tracking_metrics(const MpcLog& log, int component, const Matrix* Q) {
  if (log.rows.empty()) throw InvalidParam("empty mpc log");
  TrackingMetrics out;
  for (const auto& row : log.rows) {
    double e = 0.0;
    if (component >= 0) {
      e = row.z(component) - row.ref(component);
    } else {
      if (Q == nullptr) throw InvalidParam("Q required for weighted metrics");
      const Vector d = row.z - row.ref;
      e = std::sqrt(std::max(0.0, d.dot((*Q) * d)));
    }
    out.mse += e * e;
    out.mean_abs += std::abs(e);
    out.max_abs = std::max(out.max_abs, std::abs(e));
  }
  const double n = static_cast<double>(log.rows.size());
  out.mse /= n;
  out.mean_abs /= n;
  return out;
}

void write_mpc_csv(const std::string& path, const MpcLog& log) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  if (log.rows.empty()) throw InvalidParam("empty mpc log");
  const auto& r0 = log.rows.front();
  f << "t";
  for (long c = 0; c < r0.y.size(); ++c) f << ",y_" << (c + 1);
  for (long c = 0; c < r0.z.size(); ++c) f << ",z_" << (c + 1);
  for (long c = 0; c < r0.ref.size(); ++c) f << ",ref_" << (c + 1);
  for (long c = 0; c < r0.u.size(); ++c) f << ",u_" << (c + 1);
  for (long c = 0; c < r0.alpha0.size(); ++c) f << ",alpha_" << (c + 1);
  f << ",J,iters,wall_ms\n";
  for (const auto& row : log.rows) {
    f << fmt17(row.t);
    for (long c = 0; c < row.y.size(); ++c) f << "," << fmt17(row.y(c));
    for (long c = 0; c < row.z.size(); ++c) f << "," << fmt17(row.z(c));
    for (long c = 0; c < row.ref.size(); ++c) f << "," << fmt17(row.ref(c));
    for (long c = 0; c < row.u.size(); ++c) f << "," << fmt17(row.u(c));
    for (long c = 0; c < row.alpha0.size(); ++c) f << "," << fmt17(row.alpha0(c));
    f << "," << fmt17(row.objective) << "," << row.solver_iters << "," << fmt17(row.wall_ms)
      << "\n";
  }
}

void write_mpc_fine_controls_csv(const std::string& path, const MpcLog& log, double dt_sur) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  if (log.rows.empty()) return;
  const long n_u = log.rows.front().u.size();
  f << "t";
  for (long c = 0; c < n_u; ++c) f << ",u_" << (c + 1);
  f << "\n";
  for (const auto& row : log.rows) {
    for (std::size_t k = 0; k < row.fine_controls.size(); ++k) {
      f << fmt17(row.t + static_cast<double>(k) * dt_sur);
      for (long c = 0; c < n_u; ++c) f << "," << fmt17(row.fine_controls[k](c));
      f << "\n";
    }
  }
}

void write_mpc_metadata(const std::string& path, const MpcLog& log, const MpcConfig& config,
                        const std::string& system_name) {
  nlohmann::json j;
  j["system"] = system_name;
  j["mode"] = log.mode;
  j["p"] = config.p;
  j["dt"] = config.dt;
  j["dt_sur"] = config.dt_sur;
  j["T_mpc"] = config.T_mpc;
  j["plant_substeps"] = config.plant_substeps;
  j["warm_start"] = config.warm_start == WarmStartPolicy::Shift ? "shift" : "uniform";
  j["sur_reset"] = config.sur_reset;
  j["steps"] = log.rows.size();
  j["t_final"] = log.t_final;
  j["y_final"] = std::vector<double>(log.y_final.data(), log.y_final.data() + log.y_final.size());
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << j.dump(2) << "\n";
}

void write_mpc_plot_script(const std::string& path, const std::string& csv_name, int n_y, int q,
                           int n_u, int ref_component) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << "#!/usr/bin/env python3\n";
  f << "import csv\n"
    << "import matplotlib.pyplot as plt\n\n"
    << "rows = list(csv.DictReader(open('" << csv_name << "')))\n"
    << "t = [float(r['t']) for r in rows]\n"
    << "fig, ax = plt.subplots(3, 1, sharex=True, figsize=(8, 9))\n";
  for (int c = 1; c <= n_y; ++c) {
    f << "ax[0].plot(t, [float(r['y_" << c << "']) for r in rows], label='y_" << c << "')\n";
  }
  f << "ax[0].plot(t, [float(r['ref_" << (ref_component + 1)
    << "']) for r in rows], 'k--', label='reference')\n"
    << "ax[0].set_ylabel('state')\n"
    << "ax[0].legend(loc='best', fontsize=8)\n"
    << "err = [float(r['z_" << (ref_component + 1) << "']) - float(r['ref_"
    << (ref_component + 1) << "']) for r in rows]\n"
    << "ax[1].plot(t, err)\n"
    << "ax[1].set_ylabel('tracking error')\n";
  for (int c = 1; c <= n_u; ++c) {
    f << "ax[2].step(t, [float(r['u_" << c << "']) for r in rows], where='post', label='u_" << c
      << "')\n";
  }
  f << "ax[2].set_ylabel('control')\n"
    << "ax[2].set_xlabel('t')\n"
    << "ax[2].legend(loc='best', fontsize=8)\n"
    << "plt.tight_layout()\n"
    << "plt.savefig('" << csv_name << ".png', dpi=150)\n";
  (void)q;
}

}  // namespace quasimodo
