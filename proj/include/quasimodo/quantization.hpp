#pragma once

#include <cstdint>
#include <vector>

#include "quasimodo/dynamics.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

struct BoxControlSet {
  Vector lower, upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& u, double tol = 1e-12) const;
};

struct QuantizedControlSet {
  std::vector<Vector> points;  // u^1 .. u^m
  BoxControlSet parent;

  int size() const { return static_cast<int>(points.size()); }
  int dim() const { return parent.dim(); }
};

// All 2^{n_u} box corners, first component varying slowest, lower bound first.
QuantizedControlSet make_vertex_set(const BoxControlSet& box);

// Zero vector plus the 2*n_u one-component excursions to the box bounds.
QuantizedControlSet make_star_set(const BoxControlSet& box);

bool is_simplex_row(const Vector& w, double tol = 1e-10);

// Max-norm distance from `point` to the convex hull of `vertices`:
// min over the simplex of ||point - sum_j lambda_j v_j||_inf. Exact (nested
// ternary search on the convex objective) for m <= 4, projected subgradient
// above that.
double hull_distance(const Vector& point, const std::vector<Vector>& vertices);

// Monte-Carlo estimate of D = sup over trajectory states and u in U of the
// hull distance between g(y,u) and {g(y,u^j)}. Deterministic per seed.
double estimate_D(const SystemModel& system, const std::vector<Vector>& trajectory,
                  const BoxControlSet& box, const QuantizedControlSet& V, int samples,
                  std::uint64_t seed);

// Cumulative sums of the sum-up rounding rule; persists across MPC solves.
struct SurAccumulator {
  Vector cum_alpha;  // sum_k alpha_{k,j}
  Vector cum_omega;  // sum_k omega_{k,j}
  double dt_fine = 0.0;
  long steps = 0;

  explicit SurAccumulator(int m = 0, double dt = 0.0)
      : cum_alpha(Vector::Zero(m)), cum_omega(Vector::Zero(m)), dt_fine(dt) {}
  void reset() {
    cum_alpha.setZero();
    cum_omega.setZero();
    steps = 0;
  }
};

struct SurResult {
  std::vector<int> indices;       // active control index per fine step
  std::vector<Vector> controls;   // u^{j*} per fine step
  Matrix omegas;                  // p_f x m unit-coordinate rows
};

// Sum-up rounding: omega_hat_{i,j} = sum_{k<=i} alpha_{k,j} - sum_{k<i} omega_{k,j},
// activate the smallest index among the maximizers. The accumulator carries
// the running sums across calls.
SurResult sur_round(const std::vector<Vector>& alphas, const QuantizedControlSet& V,
                    SurAccumulator& acc);

// Convex combination sum_j w_j u^j; always inside Conv(V).
Vector interpolate_control(const Vector& weights, const QuantizedControlSet& V);

}  // namespace quasimodo
