#pragma once

#include "quasimodo/dynamics.hpp"
#include "quasimodo/quantization.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

struct PodBasis {
  Matrix Psi;  // n_x x ell, orthonormal columns
  Vector singular_values;
  double retained_energy = 0.0;
  bool rank_deficient = false;  // sigma_ell < 1e-12 sigma_1

  int ell() const { return static_cast<int>(Psi.cols()); }
};

// First `ell` left singular vectors of the snapshot matrix.
PodBasis pod_fit(const Matrix& snapshots, int ell);

// Galerkin surrogate: z' = Psi^T g(Psi z, u^j), integrated with RK4 substeps
// over the model step. Discrete projection of the semi-discrete plant rhs.
struct PodModel {
  PodBasis basis;
  SystemModel plant;
  QuantizedControlSet V;
  double dt = 0.0;
  int substeps = 1;
};

Vector pod_reduced_rhs(const PodModel& model, const Vector& z, const Vector& u);
Vector pod_predict(const PodModel& model, int j, const Vector& z);

}  // namespace quasimodo
