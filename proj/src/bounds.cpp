#include "quasimodo/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "quasimodo/errors.hpp"

namespace quasimodo {

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Vector random_in_box(const Vector& lo, const Vector& hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector y(lo.size());
  for (long c = 0; c < lo.size(); ++c) y(c) = lo(c) + unit(rng) * (hi(c) - lo(c));
  return y;
}

double jacobian_inf_norm(const std::function<Vector(const Vector&)>& g, const Vector& y,
                         double h = 1e-5) {
  const long n = y.size();
  Matrix J(g(y).size(), n);
  for (long c = 0; c < n; ++c) {
    Vector yp = y, ym = y;
    yp(c) += h;
    ym(c) -= h;
    J.col(c) = (g(yp) - g(ym)) / (2.0 * h);
  }
  return J.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

ConstantsEstimate estimate_constants(const SystemModel& system, const QuantizedControlSet& V,
                                     const Vector& y0_lower, const Vector& y0_upper, int n_traj,
                                     double T_sample, double dt, int substeps, std::uint64_t seed,
                                     const StageCost* stage_cost) {
  if (n_traj < 1) throw InvalidParam("n_traj must be >= 1");
  std::mt19937_64 rng(seed);
  ConstantsEstimate est;
  est.n_traj = n_traj;
  est.seed = seed;
  const long steps = std::max<long>(1, std::lround(T_sample / dt));

  for (int j = 0; j < V.size(); ++j) {
    const Vector& uj = V.points[j];
    auto g_j = [&](const Vector& y) { return system.rhs(y, uj, 0.0, nullptr); };
    for (int tr = 0; tr < n_traj; ++tr) {
      Vector y = random_in_box(y0_lower, y0_upper, rng);
      std::vector<Vector> states{y};
      TimeGrid grid{0.0, dt, steps};
      const auto flow = flow_map(system, y, std::vector<Vector>(steps, uj), grid, substeps);
      states.insert(states.end(), flow.begin(), flow.end());

      Vector g_prev = g_j(states[0]);
      for (std::size_t k = 0; k < states.size(); ++k) {
        const Vector g_now = g_j(states[k]);
        est.C2 = std::max(est.C2, g_now.lpNorm<Eigen::Infinity>());
        if (k > 0) {
          est.C1 = std::max(est.C1, ((g_now - g_prev) / dt).lpNorm<Eigen::Infinity>());
        }
        if (k % 5 == 0) {
          est.L_g = std::max(est.L_g, jacobian_inf_norm(g_j, states[k]));
          if (stage_cost) {
            double l1 = 0.0;
            for (long c = 0; c < states[k].size(); ++c) {
              Vector yp = states[k], ym = states[k];
              yp(c) += 1e-5;
              ym(c) -= 1e-5;
              l1 += std::abs(((*stage_cost)(yp) - (*stage_cost)(ym)) / 2e-5);
            }
            est.L_P = std::max(est.L_P, l1);
          }
        }
        g_prev = g_now;
      }
    }
  }
  return est;
}

ConstantsEstimate estimate_constants_surrogate(const SurrogateEnsemble& ens,
                                               const Vector& z0_lower, const Vector& z0_upper,
                                               int n_traj, double T_sample, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ConstantsEstimate est;
  est.n_traj = n_traj;
  est.seed = seed;
  const double dt = ens.dt();
  const long steps = std::max<long>(1, std::lround(T_sample / dt));

  for (int j = 0; j < ens.num_controls(); ++j) {
    auto g_j = [&](const Vector& z) {
      SurrogateEnsemble::State s = ens.initial_state();
      s.ready = true;
      return Vector(((ens.one_step(z, j, s) - z) / dt).eval());
    };
    for (int tr = 0; tr < n_traj; ++tr) {
      Vector z = random_in_box(z0_lower, z0_upper, rng);
      std::vector<Vector> states{z};
      SurrogateEnsemble::State s = ens.initial_state();
      s.ready = true;
      for (long k = 0; k < steps; ++k) {
        z = ens.one_step(z, j, s);
        states.push_back(z);
      }
      Vector g_prev = g_j(states[0]);
      for (std::size_t k = 0; k < states.size(); ++k) {
        const Vector g_now = g_j(states[k]);
        est.C2 = std::max(est.C2, g_now.lpNorm<Eigen::Infinity>());
        if (k > 0) est.C1 = std::max(est.C1, ((g_now - g_prev) / dt).lpNorm<Eigen::Infinity>());
        if (k % 5 == 0) est.L_g = std::max(est.L_g, jacobian_inf_norm(g_j, states[k]));
        g_prev = g_now;
      }
    }
  }
  return est;
}

double estimate_stage_lipschitz(const StageCost& P, const Vector& lower, const Vector& upper,
                                int interior_samples, std::uint64_t seed) {
  const long n = lower.size();
  std::mt19937_64 rng(seed);
  auto grad_l1 = [&](const Vector& y) {
    double l1 = 0.0;
    for (long c = 0; c < n; ++c) {
      Vector yp = y, ym = y;
      yp(c) += 1e-5;
      ym(c) -= 1e-5;
      l1 += std::abs((P(yp) - P(ym)) / 2e-5);
    }
    return l1;
  };
  double best = 0.0;
  if (n <= 12) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
      Vector y(n);
      for (long c = 0; c < n; ++c) y(c) = ((b >> c) & 1u) ? upper(c) : lower(c);
      best = std::max(best, grad_l1(y));
    }
  }
  for (int s = 0; s < interior_samples; ++s) {
    best = std::max(best, grad_l1(random_in_box(lower, upper, rng)));
  }
  return best;
}

double gronwall_envelope(double M, double y0_gap, double L, double t) {
  if (M < 0.0 || y0_gap < 0.0 || L < 0.0 || t < 0.0) {
    throw InvalidParam("gronwall_envelope needs nonnegative inputs");
  }
  return (M + y0_gap) * std::exp(L * t);
}

double m1_bound(double D, double T) {
  if (D < 0.0 || T < 0.0) throw InvalidParam("m1_bound needs nonnegative inputs");
  return T * D;
}

double m2_bound(double C1, double C2, double T, int m, double dt) {
  if (C1 < 0.0 || C2 < 0.0 || T < 0.0 || dt < 0.0) {
    throw InvalidParam("m2_bound needs nonnegative inputs");
  }
  if (m < 1) throw InvalidParam("m must be >= 1");
  return (C2 + C1 * T) * (m - 1) * dt;
}

double amplification(double L, double dt, long p) {
  if (L < 0.0 || dt <= 0.0 || p < 1) throw InvalidParam("amplification arguments");
  const double x = L * dt;
  if (x == 0.0) return static_cast<double>(p);
  return std::exp(x) * std::expm1(static_cast<double>(p) * x) / std::expm1(x);
}

std::vector<double> model_error_sequence(double E0,
                                         const std::function<double(double, double)>& one_step,
                                         double dt, long p) {
  std::vector<double> seq;
  seq.reserve(static_cast<std::size_t>(p) + 1);
  seq.push_back(E0);
  for (long i = 0; i < p; ++i) seq.push_back(one_step(seq.back(), dt));
  return seq;
}

std::function<double(double, double)> perturbation_model_error_bound(double eps, double L) {
  return [eps, L](double e, double dt) { return (eps * dt + e) * std::exp(L * dt); };
}

CompositeBounds composite_bounds(const BoundInputs& in) {
  auto need = [](const auto& opt, const char* name) -> const auto& {
    if (!opt.has_value()) throw MissingComponent(name);
    return *opt;
  };
  const double L_P = need(in.L_P, "L_P");
  const double M1 = need(in.M1, "M1");
  const double M2 = need(in.M2, "M2");
  const double M2r = need(in.M2r, "M2r");
  const double A = need(in.A, "A");
  const double Ar = need(in.Ar, "Ar");
  const auto& E_model = need(in.E_model, "E_model");

  CompositeBounds out;
  out.E_V = L_P * M1 * A;
  out.E_MI = L_P * M2 * A;
  out.E_MIr = L_P * M2r * Ar;
  double sum = 0.0;
  for (double e : E_model) sum += e;
  out.E_r = 2.0 * L_P * sum;
  out.E1 = out.E_V + out.E_MI + out.E_r;
  out.E2a = out.E_V + out.E_MI + 2.0 * out.E_r + out.E_MIr;
  out.E2b = out.E_V + out.E_MI + out.E_r;
  out.E3 = out.E_V + out.E_r;
  return out;
}

// ---- Duffing experiment ----

namespace {

// True-plant horizon objective of a control sequence applied from y.
double plant_plan_objective(const SystemModel& plant, const Vector& y,
                            const std::vector<Vector>& controls, double dt, int substeps,
                            const ObjectiveSpec& spec, double t0) {
  TimeGrid grid{t0, dt, static_cast<long>(controls.size())};
  const auto states = flow_map(plant, y, controls, grid, substeps);
  double j_total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vector r = states[i] - spec.z_ref(t0 + (static_cast<double>(i) + 1.0) * dt);
    j_total += r.dot(spec.Q * r);
  }
  return j_total;
}

std::vector<Vector> interpolated_controls(const RelaxedPlan& plan, const QuantizedControlSet& V) {
  std::vector<Vector> out;
  out.reserve(plan.rows.size());
  for (const auto& row : plan.rows) out.push_back(interpolate_control(row, V));
  return out;
}

void shift_warm(RelaxedPlan& plan, int m) {
  plan.rows.erase(plan.rows.begin());
  plan.rows.push_back(Vector::Constant(m, 1.0 / m));
}

}  // namespace

BoundExperimentReport verify_bounds_experiment(const BoundExperimentConfig& config) {
  const SystemModel plant = builtin_system("duffing");
  BoxControlSet box{Vector::Constant(1, config.u_min), Vector::Constant(1, config.u_max)};
  const QuantizedControlSet V = make_vertex_set(box);
  const int m = V.size();

  Vector perturbation = Vector::Zero(2);
  perturbation(1) = config.eps;
  const FlowEnsemble exact(plant, V, config.dt, config.plant_substeps);
  const FlowEnsemble surrogate(plant, V, config.dt, config.plant_substeps, perturbation);

  const Vector y0 = config.y0.size() == 2 ? config.y0 : (Vector(2) << 1.0, 0.0).finished();
  ObjectiveSpec spec;
  spec.Q = config.Q.size() > 0 ? config.Q : Matrix::Identity(2, 2);
  spec.z_ref = [](double) { return Vector::Zero(2); };

  const long steps = static_cast<long>(std::floor(config.T / config.dt + 1e-9));
  const long n_fine = std::lround(config.dt / config.dt_sur);
  if (n_fine < 1) throw InvalidParam("dt_sur must divide dt");

  BoundExperimentReport report;
  report.loop_exact.mode = "exact";
  report.loop_interp.mode = "interpolate";
  report.loop_sur.mode = "sur";

  // Closed-loop states and per-step plans; warm-start streams are kept per
  // solve role so every solve starts from its own shifted predecessor.
  Vector y_ex = y0, y_in = y0, y_su = y0;
  RelaxedPlan warm_ex = RelaxedPlan::uniform(config.p, m);
  RelaxedPlan warm_in = warm_ex, warm_in_gap = warm_ex, warm_su = warm_ex, warm_su_gap = warm_ex;
  SurAccumulator acc(m, config.dt_sur);
  SurrogateEnsemble::State no_state;

  auto log_row = [&](MpcLog& log, double t, const Vector& y, const SolveResult& sol,
                     const Vector& u) {
    MpcLogRow row;
    row.t = t;
    row.y = y;
    row.z = y;
    row.ref = spec.z_ref(t);
    row.alpha0 = sol.plan.rows.front();
    row.u = u;
    row.fine_controls = {u};
    row.objective = sol.value;
    row.solver_iters = sol.iters;
    log.rows.push_back(std::move(row));
  };

  auto apply_interpolated = [&](const SystemModel& sys, Vector& y, const Vector& u, double t) {
    TimeGrid grid{t, config.dt, 1};
    y = flow_map(sys, y, {u}, grid, config.plant_substeps).back();
  };

  for (long i = 0; i < steps; ++i) {
    const double t = i * config.dt;

    // exact-model reference loop
    const SolveResult sol_ex =
        solve_relaxed(exact, no_state, y_ex, config.p, spec, t, config.solver, &warm_ex);
    const Vector u_ex = interpolate_control(sol_ex.plan.rows.front(), V);
    log_row(report.loop_exact, t, y_ex, sol_ex, u_ex);
    warm_ex = sol_ex.plan;
    shift_warm(warm_ex, m);

    // interpolate-mode surrogate loop, gap against an exact solve from the
    // same measured state
    {
      const SolveResult sol_srg = solve_relaxed(surrogate, no_state, y_in, config.p, spec, t,
                                              config.solver, &warm_in);
      const SolveResult sol_gap =
          solve_relaxed(exact, no_state, y_in, config.p, spec, t, config.solver, &warm_in_gap);
      const double j_sur = plant_plan_objective(
          plant, y_in, interpolated_controls(sol_srg.plan, V), config.dt, config.plant_substeps,
          spec, t);
      const double j_ex = plant_plan_objective(
          plant, y_in, interpolated_controls(sol_gap.plan, V), config.dt, config.plant_substeps,
          spec, t);
      BoundStepRecord rec;
      rec.t = t;
      rec.gap_interp = std::abs(j_ex - j_sur);
      report.steps.push_back(rec);

      const Vector u_in = interpolate_control(sol_srg.plan.rows.front(), V);
      log_row(report.loop_interp, t, y_in, sol_srg, u_in);
      apply_interpolated(plant, y_in, u_in, t);
      warm_in = sol_srg.plan;
      shift_warm(warm_in, m);
      warm_in_gap = sol_gap.plan;
      shift_warm(warm_in_gap, m);
    }

    // sur-mode surrogate loop
    {
      const SolveResult sol_s =
          solve_relaxed(surrogate, no_state, y_su, config.p, spec, t, config.solver, &warm_su);
      const SolveResult sol_gap =
          solve_relaxed(exact, no_state, y_su, config.p, spec, t, config.solver, &warm_su_gap);
      // Horizon rounding for the bound check starts a fresh accumulator: the
      // Theorem covers one SUR pass over [0, T_horizon].
      SurAccumulator horizon_acc(m, config.dt_sur);
      std::vector<Vector> fine_alpha;
      for (const auto& row : sol_s.plan.rows) {
        for (long ff = 0; ff < n_fine; ++ff) fine_alpha.push_back(row);
      }
      const SurResult horizon_rounded = sur_round(fine_alpha, V, horizon_acc);
      double j_sur_rounded = 0.0;
      {
        Vector y_roll = y_su;
        double j_acc = 0.0;
        for (long k = 0; k < static_cast<long>(horizon_rounded.controls.size()); ++k) {
          TimeGrid grid{t + k * config.dt_sur, config.dt_sur, 1};
          y_roll = flow_map(plant, y_roll, {horizon_rounded.controls[k]}, grid,
                            config.plant_substeps)
                       .back();
          if ((k + 1) % n_fine == 0) {
            const Vector r =
                y_roll - spec.z_ref(t + (static_cast<double>((k + 1) / n_fine)) * config.dt);
            j_acc += r.dot(spec.Q * r);
          }
        }
        j_sur_rounded = j_acc;
      }
      const double j_ex = plant_plan_objective(
          plant, y_su, interpolated_controls(sol_gap.plan, V), config.dt, config.plant_substeps,
          spec, t);
      report.steps.back().gap_sur = std::abs(j_ex - j_sur_rounded);

      // closed-loop application through the persistent accumulator
      const std::vector<Vector> first_row(static_cast<std::size_t>(n_fine),
                                          sol_s.plan.rows.front());
      const SurResult applied = sur_round(first_row, V, acc);
      log_row(report.loop_sur, t, y_su, sol_s, applied.controls.front());
      report.loop_sur.rows.back().fine_controls = applied.controls;
      for (long ff = 0; ff < n_fine; ++ff) {
        TimeGrid grid{t + ff * config.dt_sur, config.dt_sur, 1};
        y_su = flow_map(plant, y_su, {applied.controls[static_cast<std::size_t>(ff)]}, grid,
                        config.plant_substeps)
                   .back();
      }
      warm_su = sol_s.plan;
      shift_warm(warm_su, m);
      warm_su_gap = sol_gap.plan;
      shift_warm(warm_su_gap, m);
    }
  }
  report.loop_exact.y_final = y_ex;
  report.loop_interp.y_final = y_in;
  report.loop_sur.y_final = y_su;
  report.loop_exact.t_final = report.loop_interp.t_final = report.loop_sur.t_final =
      steps * config.dt;

  // Observed state box (all loops), inflated, drives the constants estimates.
  Vector lo = y0, hi = y0;
  auto absorb = [&](const MpcLog& log) {
    for (const auto& row : log.rows) {
      lo = lo.cwiseMin(row.y);
      hi = hi.cwiseMax(row.y);
    }
  };
  absorb(report.loop_exact);
  absorb(report.loop_interp);
  absorb(report.loop_sur);
  const Vector center = 0.5 * (lo + hi);
  const Vector half = 0.5 * (hi - lo) * (1.0 + config.box_margin) +
                      Vector::Constant(lo.size(), 0.05);
  lo = center - half;
  hi = center + half;

  StageCost stage = [&spec](const Vector& y) {
    const Vector r = y - spec.z_ref(0.0);
    return r.dot(spec.Q * r);
  };
  report.plant_constants = estimate_constants(plant, V, lo, hi, config.const_traj, config.const_T,
                                              config.dt, config.plant_substeps, config.seed,
                                              &stage);
  report.surrogate_constants =
      estimate_constants_surrogate(surrogate, lo, hi, config.const_traj, config.const_T,
                                   config.seed + 1);
  report.L_P = estimate_stage_lipschitz(stage, lo, hi, 64, config.seed + 2);

  std::vector<Vector> exact_states;
  for (const auto& row : report.loop_exact.rows) exact_states.push_back(row.y);
  report.D = estimate_D(plant, exact_states, box, V, config.d_samples, config.seed + 3);

  const double s = config.safety_factor;
  const double T_h = config.p * config.dt;
  const double L = s * std::max(report.plant_constants.L_g, report.surrogate_constants.L_g);
  report.M1 = m1_bound(report.D, T_h);
  report.M2 = m2_bound(s * report.plant_constants.C1, s * report.plant_constants.C2, T_h, m,
                       config.dt_sur);
  report.M2r = m2_bound(s * report.surrogate_constants.C1, s * report.surrogate_constants.C2,
                        T_h, m, config.dt_sur);
  report.A = amplification(s * report.plant_constants.L_g, config.dt, config.p);
  report.Ar = amplification(s * report.surrogate_constants.L_g, config.dt, config.p);
  report.E_model = model_error_sequence(0.0, perturbation_model_error_bound(config.eps, L),
                                        config.dt, config.p);

  BoundInputs in;
  in.L_P = report.L_P;
  in.M1 = report.M1;
  in.M2 = report.M2;
  in.M2r = report.M2r;
  in.A = report.A;
  in.Ar = report.Ar;
  in.E_model = report.E_model;
  report.composites = composite_bounds(in);

  for (long ph = 1; ph <= config.p; ++ph) {
    BoundInputs hp = in;
    hp.M1 = m1_bound(report.D, ph * config.dt);
    hp.M2 = m2_bound(s * report.plant_constants.C1, s * report.plant_constants.C2,
                     ph * config.dt, m, config.dt_sur);
    hp.M2r = m2_bound(s * report.surrogate_constants.C1, s * report.surrogate_constants.C2,
                      ph * config.dt, m, config.dt_sur);
    hp.A = amplification(s * report.plant_constants.L_g, config.dt, ph);
    hp.Ar = amplification(s * report.surrogate_constants.L_g, config.dt, ph);
    hp.E_model = model_error_sequence(0.0, perturbation_model_error_bound(config.eps, L),
                                      config.dt, ph);
    const CompositeBounds cb = composite_bounds(hp);
    report.e3_by_horizon.push_back(cb.E3);
    report.e2b_by_horizon.push_back(cb.E2b);
  }

  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    report.steps[i].env_e3 = report.composites.E3;
    report.steps[i].env_e2b = report.composites.E2b;
    if (report.steps[i].gap_interp > report.steps[i].env_e3 ||
        report.steps[i].gap_sur > report.steps[i].env_e2b) {
      report.violations.push_back(static_cast<long>(i));
    }
  }
  return report;
}

void assert_no_violations(const BoundExperimentReport& report) {
  if (report.violations.empty()) return;
  const long i = report.violations.front();
  const auto& rec = report.steps[static_cast<std::size_t>(i)];
  const bool interp_bad = rec.gap_interp > rec.env_e3;
  throw BoundViolated(i, interp_bad ? rec.gap_interp : rec.gap_sur,
                      interp_bad ? rec.env_e3 : rec.env_e2b);
}

void write_bound_report(const std::string& out_dir, const BoundExperimentReport& report,
                        const BoundExperimentConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  nlohmann::json j;
  j["constants"] = {{"L_g", report.plant_constants.L_g},
                    {"C1", report.plant_constants.C1},
                    {"C2", report.plant_constants.C2},
                    {"L_gr", report.surrogate_constants.L_g},
                    {"C1r", report.surrogate_constants.C1},
                    {"C2r", report.surrogate_constants.C2},
                    {"L_P", report.L_P},
                    {"D", report.D}};
  j["components"] = {{"M1", report.M1}, {"M2", report.M2},   {"M2r", report.M2r},
                     {"A", report.A},   {"Ar", report.Ar},   {"E_model", report.E_model}};
  j["composites"] = {{"E_V", report.composites.E_V},   {"E_MI", report.composites.E_MI},
                     {"E_MIr", report.composites.E_MIr}, {"E_r", report.composites.E_r},
                     {"E1", report.composites.E1},     {"E2a", report.composites.E2a},
                     {"E2b", report.composites.E2b},   {"E3", report.composites.E3}};
  j["violations"] = report.violations;
  j["config"] = {{"eps", config.eps}, {"dt", config.dt},   {"T", config.T},
                 {"p", config.p},     {"seed", config.seed}};
  j["y_final_interp"] = std::vector<double>(report.loop_interp.y_final.data(),
                                            report.loop_interp.y_final.data() + 2);
  j["y_final_sur"] =
      std::vector<double>(report.loop_sur.y_final.data(), report.loop_sur.y_final.data() + 2);
  std::ofstream fj(out_dir + "/bound_report.json");
  if (!fj) throw IoError("cannot open bound_report.json");
  fj << j.dump(2) << "\n";

  std::ofstream fc(out_dir + "/bound_series.csv");
  if (!fc) throw IoError("cannot open bound_series.csv");
  fc << "t,gap_interp,gap_sur,env_E3,env_E2b,y1_exact,y2_exact,y1_interp,y2_interp,y1_sur,y2_sur,"
        "u_exact,u_interp,u_sur\n";
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& rec = report.steps[i];
    const auto& re = report.loop_exact.rows[i];
    const auto& ri = report.loop_interp.rows[i];
    const auto& rs = report.loop_sur.rows[i];
    fc << fmt17(rec.t) << "," << fmt17(rec.gap_interp) << "," << fmt17(rec.gap_sur) << ","
       << fmt17(rec.env_e3) << "," << fmt17(rec.env_e2b) << "," << fmt17(re.y(0)) << ","
       << fmt17(re.y(1)) << "," << fmt17(ri.y(0)) << "," << fmt17(ri.y(1)) << ","
       << fmt17(rs.y(0)) << "," << fmt17(rs.y(1)) << "," << fmt17(re.u(0)) << ","
       << fmt17(ri.u(0)) << "," << fmt17(rs.u(0)) << "\n";
  }

  std::ofstream fp(out_dir + "/plot_bounds.py");
  fp << "#!/usr/bin/env python3\n"
     << "import csv\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "rows = list(csv.DictReader(open('bound_series.csv')))\n"
     << "t = [float(r['t']) for r in rows]\n"
     << "fig, ax = plt.subplots(3, 1, sharex=True, figsize=(8, 9))\n"
     << "for k, lbl in [('y1_exact', 'y1 optimal'), ('y2_exact', 'y2 optimal'),\n"
     << "               ('y1_interp', 'y1 interpolated'), ('y2_interp', 'y2 interpolated'),\n"
     << "               ('y1_sur', 'y1 SUR'), ('y2_sur', 'y2 SUR')]:\n"
     << "    ax[0].plot(t, [float(r[k]) for r in rows], label=lbl)\n"
     << "ax[0].legend(fontsize=7); ax[0].set_ylabel('state')\n"
     << "ax[1].semilogy(t, [max(float(r['gap_interp']), 1e-12) for r in rows], label='gap interp')\n"
     << "ax[1].semilogy(t, [max(float(r['gap_sur']), 1e-12) for r in rows], label='gap SUR')\n"
     << "ax[1].semilogy(t, [float(r['env_E3']) for r in rows], 'k--', label='E3')\n"
     << "ax[1].semilogy(t, [float(r['env_E2b']) for r in rows], 'k:', label='E2.b')\n"
     << "ax[1].legend(fontsize=7); ax[1].set_ylabel('objective gap vs bound')\n"
     << "for k, lbl in [('u_exact', 'optimal'), ('u_interp', 'interpolated'), ('u_sur', 'SUR')]:\n"
     << "    ax[2].step(t, [float(r[k]) for r in rows], where='post', label=lbl)\n"
     << "ax[2].legend(fontsize=7); ax[2].set_ylabel('control'); ax[2].set_xlabel('t')\n"
     << "plt.tight_layout()\n"
     << "plt.savefig('bounds.png', dpi=150)\n";
}

GronwallCheckResult gronwall_numeric_check(const SystemModel& base, const Vector& perturbation,
                                           const QuantizedControlSet& V, int n_pairs, double T,
                                           double dt, int substeps, double safety,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, V.size() - 1);

  SystemModel perturbed = base;
  const Rhs base_rhs = base.rhs;
  const Vector c = perturbation;
  perturbed.rhs = [base_rhs, c](const Vector& y, const Vector& u, double t,
                                const DelayHistory* h) { return Vector(base_rhs(y, u, t, h) + c); };
  const double eps = perturbation.lpNorm<Eigen::Infinity>();
  const long steps = std::lround(T / dt);

  struct Pair {
    std::vector<Vector> a, b;
    std::vector<Vector> controls;
  };
  std::vector<Pair> pairs;
  GronwallCheckResult result;

  for (int n = 0; n < n_pairs; ++n) {
    Vector y0(base.n_y);
    for (long k = 0; k < y0.size(); ++k) y0(k) = unit(rng);
    std::vector<Vector> controls;
    for (long i = 0; i < steps; ++i) controls.push_back(V.points[pick(rng)]);
    TimeGrid grid{0.0, dt, steps};
    Pair pr;
    pr.controls = controls;
    pr.a = flow_map(base, y0, controls, grid, substeps);
    pr.b = flow_map(perturbed, y0, controls, grid, substeps);
    pairs.push_back(std::move(pr));
  }

  // Lipschitz estimate sampled densely along both trajectories and their
  // midpoints; the curvature spikes feed the exponent, so sparse sampling
  // under-estimates badly.
  double L_est = 0.0;
  for (const auto& pr : pairs) {
    for (std::size_t k = 0; k < pr.a.size(); ++k) {
      auto g = [&](const Vector& y) { return base.rhs(y, pr.controls[k], 0.0, nullptr); };
      L_est = std::max(L_est, jacobian_inf_norm(g, pr.a[k]));
      L_est = std::max(L_est, jacobian_inf_norm(g, pr.b[k]));
      L_est = std::max(L_est, jacobian_inf_norm(g, 0.5 * (pr.a[k] + pr.b[k])));
    }
  }
  result.L_est = L_est;

  for (const auto& pr : pairs) {
    for (std::size_t k = 0; k < pr.a.size(); ++k) {
      const double t = (static_cast<double>(k) + 1.0) * dt;
      const double gap = (pr.a[k] - pr.b[k]).lpNorm<Eigen::Infinity>();
      const double env = gronwall_envelope(eps * t, 0.0, safety * L_est, t);
      if (env > 0.0) result.max_ratio = std::max(result.max_ratio, gap / env);
      if (gap > env) ++result.violations;
    }
  }
  return result;
}

double sur_integral_deviation(const std::function<Vector(double)>& alpha, int m, double T,
                              double dt, const QuantizedControlSet& V) {
  const long steps = std::lround(T / dt);
  SurAccumulator acc(m, dt);
  std::vector<Vector> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  for (long i = 0; i < steps; ++i) rows.push_back(alpha((i + 0.5) * dt));
  const SurResult rounded = sur_round(rows, V, acc);
  double worst = 0.0;
  Vector running = Vector::Zero(m);
  for (long i = 0; i < steps; ++i) {
    running += rows[static_cast<std::size_t>(i)] - rounded.omegas.row(i).transpose();
    worst = std::max(worst, running.lpNorm<Eigen::Infinity>() * dt);
  }
  return worst;
}

}  // namespace quasimodo
