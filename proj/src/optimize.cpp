#include "quasimodo/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "quasimodo/errors.hpp"

namespace quasimodo {

double evaluate_objective(const SurrogateEnsemble& ens, const SurrogateEnsemble::State& state0,
                          const Vector& z0_obs, const RelaxedPlan& plan,
                          const ObjectiveSpec& spec, double t0) {
  SurrogateEnsemble::State state = state0;
  Vector z = ens.to_model(z0_obs);
  double j_total = 0.0;
  const double dt = ens.dt();
  for (long i = 0; i < plan.length(); ++i) {
    z = relaxed_step(ens, z, plan.rows[static_cast<std::size_t>(i)], state);
    const Vector r = ens.to_observable(z) - spec.z_ref(t0 + (i + 1) * dt);
    j_total += r.dot(spec.Q * r);
  }
  return j_total;
}

Vector project_simplex(const Vector& v) {
  const int m = static_cast<int>(v.size());
  if (m == 0) throw InvalidParam("cannot project an empty vector");
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  for (int k = 0; k < m; ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / (k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  Vector out(m);
  for (int j = 0; j < m; ++j) out(j) = std::max(v(j) - theta, 0.0);
  return out;
}

Matrix fd_gradient(const PlanObjective& objective, const RelaxedPlan& plan, double h) {
  if (h <= 0.0) throw InvalidParam("fd step must be > 0");
  const long p = plan.length();
  const int m = p > 0 ? static_cast<int>(plan.rows[0].size()) : 0;
  Matrix grad(p, m);
  RelaxedPlan probe = plan;
  for (long i = 0; i < p; ++i) {
    for (int j = 0; j < m; ++j) {
      const double orig = probe.rows[static_cast<std::size_t>(i)](j);
      probe.rows[static_cast<std::size_t>(i)](j) = orig + h;
      const double f_plus = objective(probe);
      probe.rows[static_cast<std::size_t>(i)](j) = orig - h;
      const double f_minus = objective(probe);
      probe.rows[static_cast<std::size_t>(i)](j) = orig;
      grad(i, j) = (f_plus - f_minus) / (2.0 * h);
    }
  }
  return grad;
}

namespace {

RelaxedPlan project_plan(const RelaxedPlan& plan) {
  RelaxedPlan out = plan;
  for (auto& row : out.rows) row = project_simplex(row);
  return out;
}

double plan_inf_dist(const RelaxedPlan& a, const RelaxedPlan& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    d = std::max(d, (a.rows[i] - b.rows[i]).lpNorm<Eigen::Infinity>());
  }
  return d;
}

double plan_sq_dist(const RelaxedPlan& a, const RelaxedPlan& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) d += (a.rows[i] - b.rows[i]).squaredNorm();
  return d;
}

RelaxedPlan gradient_shift(const RelaxedPlan& plan, const Matrix& grad, double step) {
  RelaxedPlan out = plan;
  for (long i = 0; i < plan.length(); ++i) {
    out.rows[static_cast<std::size_t>(i)] =
        project_simplex(plan.rows[static_cast<std::size_t>(i)] - step * grad.row(i).transpose());
  }
  return out;
}

}  // namespace

SolveResult solve_relaxed_generic(const PlanObjective& objective, const RelaxedPlan& warm_start,
                                  const SolverConfig& config) {
  SolveResult result;
  result.plan = project_plan(warm_start);
  result.value = objective(result.plan);

  // Spectral (Barzilai-Borwein) step length with monotone Armijo
  // backtracking; plain fixed-step projected gradient zig-zags badly on the
  // ill-conditioned valleys these rollout objectives produce.
  double step_start = config.initial_step;
  RelaxedPlan prev_plan = result.plan;
  Matrix prev_grad;
  for (int it = 0; it < config.max_iters; ++it) {
    const Matrix grad = fd_gradient(objective, result.plan, config.fd_step);
    const RelaxedPlan station = gradient_shift(result.plan, grad, 1.0);
    if (plan_inf_dist(result.plan, station) < config.tol) {
      result.converged = true;
      return result;
    }

    if (it > 0) {
      double sty = 0.0, sts = 0.0;
      for (long i = 0; i < result.plan.length(); ++i) {
        const Vector dx = result.plan.rows[static_cast<std::size_t>(i)] -
                          prev_plan.rows[static_cast<std::size_t>(i)];
        const Vector dg = (grad.row(i) - prev_grad.row(i)).transpose();
        sts += dx.squaredNorm();
        sty += dx.dot(dg);
      }
      step_start = sty > 1e-300 ? std::min(std::max(sts / sty, 1e-10), 1e9)
                                : std::min(2.0 * step_start, 1e9);
    }
    prev_plan = result.plan;
    prev_grad = grad;

    double step = step_start;
    bool accepted = false;
    while (step > 1e-14) {
      const RelaxedPlan candidate = gradient_shift(result.plan, grad, step);
      const double dist_sq = plan_sq_dist(candidate, result.plan);
      if (dist_sq == 0.0) break;
      const double f_new = objective(candidate);
      if (f_new <= result.value - (config.armijo_c / step) * dist_sq) {
        result.plan = candidate;
        result.value = f_new;
        accepted = true;
        break;
      }
      step *= config.backtrack;
    }
    result.iters = it + 1;
    if (!accepted) {
      // no descent direction at fd resolution; treat as stationary
      result.converged = true;
      return result;
    }
  }
  result.converged = false;  // MaxItersReached; best-so-far in result.plan
  return result;
}

SolveResult solve_relaxed(const SurrogateEnsemble& ens, const SurrogateEnsemble::State& state0,
                          const Vector& z0_obs, long p, const ObjectiveSpec& spec, double t0,
                          const SolverConfig& config, const RelaxedPlan* warm_start) {
  const RelaxedPlan start =
      warm_start != nullptr ? *warm_start : RelaxedPlan::uniform(p, ens.num_controls());
  if (start.length() != p) throw InvalidParam("warm start length != horizon");
  PlanObjective objective = [&](const RelaxedPlan& plan) {
    return evaluate_objective(ens, state0, z0_obs, plan, spec, t0);
  };
  return solve_relaxed_generic(objective, start, config);
}

}  // namespace quasimodo
