#pragma once

// Toy ensembles and oracle helpers shared by the optimizer tests and the
// acceptance suite. Everything here is test-only and independent of the
// library's fitting paths.

#include <functional>
#include <random>
#include <vector>

#include "quasimodo/ensemble.hpp"
#include "quasimodo/optimize.hpp"

namespace quasimodo::testing {

inline QuantizedControlSet dummy_controls(int m) {
  QuantizedControlSet V;
  V.parent = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)};
  for (int j = 0; j < m; ++j) {
    V.points.push_back(Vector::Constant(1, static_cast<double>(j) / std::max(1, m - 1)));
  }
  return V;
}

// z+ = M_j z + b_j per control.
class AffineTestEnsemble : public SurrogateEnsemble {
 public:
  AffineTestEnsemble(std::vector<Matrix> maps, std::vector<Vector> offsets, double dt = 0.1)
      : maps_(std::move(maps)), offsets_(std::move(offsets)),
        V_(dummy_controls(static_cast<int>(maps_.size()))), dt_(dt) {}

  int num_controls() const override { return static_cast<int>(maps_.size()); }
  int model_dim() const override { return static_cast<int>(maps_[0].rows()); }
  int observable_dim() const override { return model_dim(); }
  double dt() const override { return dt_; }
  const QuantizedControlSet& controls() const override { return V_; }
  Matrix one_step_images(const Vector& z, State&) const override {
    Matrix images(model_dim(), num_controls());
    for (int j = 0; j < num_controls(); ++j) images.col(j) = maps_[j] * z + offsets_[j];
    return images;
  }

 private:
  std::vector<Matrix> maps_;
  std::vector<Vector> offsets_;
  QuantizedControlSet V_;
  double dt_;
};

// Ignores the state: z+ = c_j. Handy for closed-form objective checks.
class ConstantTestEnsemble : public SurrogateEnsemble {
 public:
  explicit ConstantTestEnsemble(std::vector<Vector> images, double dt = 0.1)
      : images_(std::move(images)),
        V_(dummy_controls(static_cast<int>(images_.size()))), dt_(dt) {}

  int num_controls() const override { return static_cast<int>(images_.size()); }
  int model_dim() const override { return static_cast<int>(images_[0].size()); }
  int observable_dim() const override { return model_dim(); }
  double dt() const override { return dt_; }
  const QuantizedControlSet& controls() const override { return V_; }
  Matrix one_step_images(const Vector&, State&) const override {
    Matrix images(model_dim(), num_controls());
    for (int j = 0; j < num_controls(); ++j) images.col(j) = images_[j];
    return images;
  }

 private:
  std::vector<Vector> images_;
  QuantizedControlSet V_;
  double dt_;
};

// Exhaustive search over per-row simplex grids (m = 2), `res`+1 values per row.
inline double grid_oracle_best(const PlanObjective& objective, long p, int res) {
  RelaxedPlan plan = RelaxedPlan::uniform(p, 2);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> digits(static_cast<std::size_t>(p), 0);
  while (true) {
    for (long i = 0; i < p; ++i) {
      const double lam = static_cast<double>(digits[static_cast<std::size_t>(i)]) / res;
      plan.rows[static_cast<std::size_t>(i)](0) = lam;
      plan.rows[static_cast<std::size_t>(i)](1) = 1.0 - lam;
    }
    best = std::min(best, objective(plan));
    long carry = 0;
    while (carry < p) {
      if (++digits[static_cast<std::size_t>(carry)] <= res) break;
      digits[static_cast<std::size_t>(carry)] = 0;
      ++carry;
    }
    if (carry == p) break;
  }
  return best;
}

}  // namespace quasimodo::testing
