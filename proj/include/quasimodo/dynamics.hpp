#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quasimodo/types.hpp"

namespace quasimodo {

// Ring buffer of (time, state) samples with linear interpolation, used to
// evaluate delayed terms y(t - tau) while integrating delay equations.
class DelayHistory {
 public:
  void append(double t, const Vector& y);
  // Linear interpolation between stored nodes; exact at the nodes.
  Vector at(double t) const;
  // Drop samples older than t_keep (keeps one node at or before it).
  void trim(double t_keep);
  bool empty() const { return samples_.empty(); }
  double front_time() const { return samples_.front().first; }
  double back_time() const { return samples_.back().first; }

 private:
  std::deque<std::pair<double, Vector>> samples_;
};

// Right-hand side g(y, u); `history` is non-null only for delay systems and
// is queried at absolute time t.
using Rhs = std::function<Vector(const Vector& y, const Vector& u, double t,
                                 const DelayHistory* history)>;

struct SystemModel {
  std::string name;
  int n_y = 0;
  int n_u = 0;
  double delay = 0.0;  // tau; 0 means plain ODE
  Rhs rhs;
  std::map<std::string, double> params;

  bool has_delay() const { return delay > 0.0; }
};

struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  long steps = 0;
};

// One classical RK4 step with u held constant. Delayed values are read from
// `history` at the substage times; the caller appends the result afterwards.
Vector rk4_step(const SystemModel& system, const Vector& y, const Vector& u, double t, double dt,
                const DelayHistory* history = nullptr);

// Applies controls[i] over [t_i, t_i + dt), `substeps` RK4 steps inside each
// interval. Returns y_1 .. y_p. For delay systems a history covering
// [t0 - tau, t0] is required; pass nullptr to start from a constant history
// equal to y0. The history is advanced in place so flows can be chained.
std::vector<Vector> flow_map(const SystemModel& system, const Vector& y0,
                             const std::vector<Vector>& controls, const TimeGrid& grid,
                             int substeps, DelayHistory* history = nullptr);

// Constant history equal to y0 on [t0 - tau - pad, t0].
DelayHistory constant_history(const Vector& y0, double t0, double tau);

// Factory for the built-in plants: "duffing", "lorenz_affine", "lorenz_cos",
// "mackey_glass", "burgers1d". Missing params fall back to the defaults below.
SystemModel builtin_system(const std::string& name,
                           const std::map<std::string, double>& params = {});

// Step initial condition of the Burgers experiment: 1 on (0, L/2], 0 else.
Vector burgers_initial_state(const SystemModel& burgers);

// Reasonable default initial state per built-in system (used by configs that
// do not pin one).
Vector default_initial_state(const SystemModel& system);

}  // namespace quasimodo
