#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "quasimodo/ensemble.hpp"
#include "quasimodo/mpc.hpp"
#include "quasimodo/optimize.hpp"
#include "quasimodo/quantization.hpp"

namespace quasimodo {

struct ConstantsEstimate {
  double L_g = 0.0;  // max FD-Jacobian inf-norm along sampled trajectories
  double L_P = 0.0;  // max l1-norm of the stage-cost gradient (dual of the max norm)
  double C1 = 0.0;   // max ||d/dt g(y(t), u^j)||_inf
  double C2 = 0.0;   // max ||g(y(t), u^j)||_inf
  int n_traj = 0;
  std::uint64_t seed = 0;
};

using StageCost = std::function<double(const Vector&)>;

// Simulates each autonomous system u^j from random initial states in
// [y0_lower, y0_upper] and records max velocity / derivative / Jacobian norms.
ConstantsEstimate estimate_constants(const SystemModel& system, const QuantizedControlSet& V,
                                     const Vector& y0_lower, const Vector& y0_upper, int n_traj,
                                     double T_sample, double dt, int substeps, std::uint64_t seed,
                                     const StageCost* stage_cost = nullptr);

// Same estimates for a discrete surrogate through its effective velocity
// field g_r(z, j) = (Phi_j(z) - z) / dt.
ConstantsEstimate estimate_constants_surrogate(const SurrogateEnsemble& ens,
                                               const Vector& z0_lower, const Vector& z0_upper,
                                               int n_traj, double T_sample, std::uint64_t seed);

// Max l1-norm of the FD gradient of P over the given box (corners plus
// random interior samples); callers inflate the box themselves.
double estimate_stage_lipschitz(const StageCost& P, const Vector& lower, const Vector& upper,
                                int interior_samples = 64, std::uint64_t seed = 0);

// (M + y0_gap) e^{L t}
double gronwall_envelope(double M, double y0_gap, double L, double t);

double m1_bound(double D, double T);
double m2_bound(double C1, double C2, double T, int m, double dt);

// e^{L dt} (e^{p L dt} - 1) / (e^{L dt} - 1); equals p in the L -> 0 limit.
double amplification(double L, double dt, long p);

// Iterates E_model(t_i) <= E(E_model(t_{i-1}), dt) from E0; returns p+1 values.
std::vector<double> model_error_sequence(double E0,
                                         const std::function<double(double, double)>& one_step,
                                         double dt, long p);

// One-step bound of the constant-perturbation example: (eps dt + e) e^{L dt}.
std::function<double(double, double)> perturbation_model_error_bound(double eps, double L);

struct BoundInputs {
  std::optional<double> L_P, M1, M2, M2r, A, Ar;
  std::optional<std::vector<double>> E_model;  // t_0 .. t_p
};

struct CompositeBounds {
  double E_V = 0.0, E_MI = 0.0, E_MIr = 0.0, E_r = 0.0;
  double E1 = 0.0, E2a = 0.0, E2b = 0.0, E3 = 0.0;
};

// E_V = L_P M1 A, E_MI = L_P M2 A, E_MIr = L_P M2r Ar, E_r = 2 L_P sum E_model;
// E1 = E2b = E_V + E_MI + E_r, E2a = E_V + E_MI + 2 E_r + E_MIr, E3 = E_V + E_r.
CompositeBounds composite_bounds(const BoundInputs& in);

// ---- Duffing bound experiment ----

struct BoundExperimentConfig {
  double eps = 0.1;  // surrogate perturbation added to the second component
  double dt = 2e-3;
  double dt_sur = 2e-3;
  double T = 1.0;
  long p = 25;
  Vector y0;      // empty -> (1, 0)
  Matrix Q;       // empty -> identity
  double u_min = -4.0, u_max = 4.0;
  int plant_substeps = 1;
  double safety_factor = 1.1;
  double box_margin = 0.2;
  int const_traj = 16;
  double const_T = 0.1;
  int d_samples = 25;
  std::uint64_t seed = 12345;
  SolverConfig solver;
};

struct BoundStepRecord {
  double t = 0.0;
  double gap_interp = 0.0;  // |J(exact plan) - J(interpolated surrogate plan)| on the plant
  double gap_sur = 0.0;     // same against the SUR-rounded surrogate plan
  double env_e3 = 0.0;
  double env_e2b = 0.0;
};

struct BoundExperimentReport {
  ConstantsEstimate plant_constants;
  ConstantsEstimate surrogate_constants;
  double L_P = 0.0, D = 0.0, M1 = 0.0, M2 = 0.0, M2r = 0.0, A = 0.0, Ar = 0.0;
  std::vector<double> E_model;  // over the horizon, E_model(t_0) = 0
  CompositeBounds composites;   // at horizon p
  std::vector<double> e3_by_horizon, e2b_by_horizon;  // p' = 1 .. p
  std::vector<BoundStepRecord> steps;
  std::vector<long> violations;
  MpcLog loop_exact, loop_interp, loop_sur;
};

// Runs the interpolate-mode and sur-mode closed loops plus the exact-model
// loop; at every step both surrogate plans and an exact-model plan are solved
// from the same measured state, their true-plant horizon objectives compared,
// and the gaps checked against the E3 / E2.b envelopes.
BoundExperimentReport verify_bounds_experiment(const BoundExperimentConfig& config);

// Throws BoundViolated for the first recorded violation, if any.
void assert_no_violations(const BoundExperimentReport& report);

// JSON constants/components/composites + CSV time series + plot script.
void write_bound_report(const std::string& out_dir, const BoundExperimentReport& report,
                        const BoundExperimentConfig& config);

// Numerical Lemma 1: random constant-perturbation pairs under shared random
// switching controls; counts envelope violations with the inflated Lipschitz
// estimate.
struct GronwallCheckResult {
  int violations = 0;
  double max_ratio = 0.0;  // realized gap / envelope, over all pairs and times
  double L_est = 0.0;
};
GronwallCheckResult gronwall_numeric_check(const SystemModel& base, const Vector& perturbation,
                                           const QuantizedControlSet& V, int n_pairs, double T,
                                           double dt, int substeps, double safety,
                                           std::uint64_t seed);

// Max over t of || sum_{k<=t} (alpha_k - omega_k) * dt ||_inf after rounding
// the sampled relaxed signal alpha(t) on a dt grid.
double sur_integral_deviation(const std::function<Vector(double)>& alpha, int m, double T,
                              double dt, const QuantizedControlSet& V);

}  // namespace quasimodo
