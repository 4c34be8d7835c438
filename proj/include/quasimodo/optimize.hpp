#pragma once

#include <functional>
#include <vector>

#include "quasimodo/ensemble.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

// Quadratic tracking stage cost (z - z_ref(t))^T Q (z - z_ref(t)) on the
// observable space.
struct ObjectiveSpec {
  Matrix Q;
  std::function<Vector(double)> z_ref;
};

struct RelaxedPlan {
  std::vector<Vector> rows;  // p simplex rows of length m

  long length() const { return static_cast<long>(rows.size()); }
  static RelaxedPlan uniform(long p, int m) {
    return {std::vector<Vector>(static_cast<std::size_t>(p), Vector::Constant(m, 1.0 / m))};
  }
};

struct SolverConfig {
  int max_iters = 200;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
  double fd_step = 1e-6;
  double tol = 1e-6;
};

struct SolveResult {
  RelaxedPlan plan;
  double value = 0.0;
  int iters = 0;
  bool converged = false;  // false means MaxItersReached (best-so-far returned)
};

// Relaxed rollout from z0 (observable space) followed by the weighted
// sum-of-squares stage costs; stage i+1 is referenced at t0 + (i+1) dt.
double evaluate_objective(const SurrogateEnsemble& ens, const SurrogateEnsemble::State& state0,
                          const Vector& z0_obs, const RelaxedPlan& plan,
                          const ObjectiveSpec& spec, double t0);

// Euclidean projection onto the probability simplex (sort and threshold).
Vector project_simplex(const Vector& v);

using PlanObjective = std::function<double(const RelaxedPlan&)>;

// Central differences per entry; 2 p m objective evaluations.
Matrix fd_gradient(const PlanObjective& objective, const RelaxedPlan& plan, double h);

// Projected gradient descent with Armijo backtracking over the product of
// simplices. Deterministic; descent is monotone.
SolveResult solve_relaxed_generic(const PlanObjective& objective, const RelaxedPlan& warm_start,
                                  const SolverConfig& config);

SolveResult solve_relaxed(const SurrogateEnsemble& ens, const SurrogateEnsemble::State& state0,
                          const Vector& z0_obs, long p, const ObjectiveSpec& spec, double t0,
                          const SolverConfig& config, const RelaxedPlan* warm_start = nullptr);

}  // namespace quasimodo
