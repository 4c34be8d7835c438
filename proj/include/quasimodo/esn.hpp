#pragma once

#include <cstdint>
#include <vector>

#include "quasimodo/datagen.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

// Fixed random reservoir shared by all readouts. W_fb already carries the
// feedback scaling.
struct EsnReservoir {
  Matrix W_res;  // n_r x n_r, sparse draw rescaled to the target spectral radius
  Matrix W_fb;   // n_r x q
  double activation_scale = 0.99;  // sigma in r+ = sigma * tanh(...)
  double spectral_radius = 0.75;
  double sparsity = 0.9;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(W_res.rows()); }
  Vector step(const Vector& r, const Vector& feedback) const {
    return activation_scale * (W_res * r + W_fb * feedback).array().tanh().matrix();
  }
};

double spectral_radius_of(const Matrix& A);

// W_res entries uniform(-1,1), zeroed with probability `sparsity`, rescaled to
// spectral radius rho; W_fb uniform(-1,1) * feedback_scale. Deterministic per seed.
EsnReservoir esn_init(int n_r, int q, double rho, double sparsity, double activation_scale,
                      std::uint64_t seed, double feedback_scale = 1.0);

struct EsnState {
  Vector r;
  bool ready = false;
};

// One reservoir with one linear readout per quantized control.
struct EsnModel {
  EsnReservoir reservoir;
  std::vector<Matrix> W_out;  // per control j: q x n_r
  double ridge_beta = 1e-4;
  int washout = 100;

  int q() const { return static_cast<int>(reservoir.W_fb.cols()); }
  EsnState fresh_state() const { return {Vector::Zero(reservoir.size()), false}; }
};

// Teacher-forced reservoir run over the whole trajectory, then one ridge
// regression of z_{k+1} on r(k+1) per control label.
EsnModel esn_fit(const LabeledTrajectory& traj, const EsnReservoir& reservoir, int washout,
                 double ridge_beta);

// Replays `recent` with teacher forcing from r = 0; afterwards the state is
// ready to predict the step following the last replayed sample.
void esn_sync(const EsnModel& model, EsnState& state, const std::vector<Vector>& recent);

// One reservoir step fed back with z_current, then readout j.
Vector esn_predict(const EsnModel& model, EsnState& state, int j, const Vector& z_current);

// Control-augmented baseline: the control acts through an input matrix and a
// single readout serves all controls.
struct AugmentedEsnModel {
  EsnReservoir reservoir;
  Matrix W_in;   // n_r x n_u
  Matrix W_out;  // q x n_r
  double ridge_beta = 1e-4;
  int washout = 100;

  EsnState fresh_state() const { return {Vector::Zero(reservoir.size()), false}; }
  Vector reservoir_step(const Vector& r, const Vector& z, const Vector& u) const {
    return reservoir.activation_scale *
           (reservoir.W_res * r + reservoir.W_fb * z + W_in * u).array().tanh().matrix();
  }
};

AugmentedEsnModel esn_fit_augmented(const LabeledTrajectory& traj, const EsnReservoir& reservoir,
                                    double w_in_scale, int washout, double ridge_beta,
                                    std::uint64_t w_in_seed);

void esn_sync_augmented(const AugmentedEsnModel& model, EsnState& state,
                        const std::vector<Vector>& recent_z, const std::vector<Vector>& recent_u);

Vector esn_predict_augmented(const AugmentedEsnModel& model, EsnState& state,
                             const Vector& z_current, const Vector& u);

}  // namespace quasimodo
