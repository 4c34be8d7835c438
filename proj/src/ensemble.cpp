#include "quasimodo/ensemble.hpp"

#include "quasimodo/errors.hpp"

namespace quasimodo {

Vector SurrogateEnsemble::one_step(const Vector& z_model, int j, State& state) const {
  return one_step_images(z_model, state).col(j);
}

Vector relaxed_step(const SurrogateEnsemble& ens, const Vector& z_model, const Vector& alpha_row,
                    SurrogateEnsemble::State& state) {
  return ens.one_step_images(z_model, state) * alpha_row;
}

std::vector<Vector> multi_step_predict(const SurrogateEnsemble& ens, const Vector& z0_model,
                                       const std::vector<Vector>& plan_rows,
                                       SurrogateEnsemble::State state) {
  std::vector<Vector> out;
  out.reserve(plan_rows.size());
  Vector z = z0_model;
  for (const auto& row : plan_rows) {
    z = relaxed_step(ens, z, row, state);
    out.push_back(z);
  }
  return out;
}

std::vector<Vector> multi_step_predict(const SurrogateEnsemble& ens, const Vector& z0_model,
                                       const std::vector<int>& indices,
                                       SurrogateEnsemble::State state) {
  std::vector<Vector> out;
  out.reserve(indices.size());
  Vector z = z0_model;
  for (int j : indices) {
    z = ens.one_step(z, j, state);
    out.push_back(z);
  }
  return out;
}

// ---- EDMD ----

EdmdEnsemble::EdmdEnsemble(EdmdModel model, QuantizedControlSet V, double dt,
                           bool propagate_lifted)
    : model_(std::move(model)),
      V_(std::move(V)),
      dt_(dt),
      propagate_lifted_(propagate_lifted),
      readout_(model_.readout_indices()) {}

int EdmdEnsemble::model_dim() const {
  return propagate_lifted_ ? model_.feature_count() : model_.q;
}

Vector EdmdEnsemble::to_model(const Vector& z_obs) const {
  return propagate_lifted_ ? monomial_features(z_obs, model_.dictionary) : z_obs;
}

Vector EdmdEnsemble::to_observable(const Vector& z_model) const {
  if (!propagate_lifted_) return z_model;
  Vector z(model_.q);
  for (int c = 0; c < model_.q; ++c) z(c) = z_model(readout_[c]);
  return z;
}

Matrix EdmdEnsemble::one_step_images(const Vector& z_model, State&) const {
  const int m = num_controls();
  Matrix images(model_dim(), m);
  if (propagate_lifted_) {
    for (int j = 0; j < m; ++j) images.col(j) = model_.Kt[j] * z_model;
  } else {
    const Vector psi = monomial_features(z_model, model_.dictionary);
    for (int j = 0; j < m; ++j) {
      const Vector lifted = model_.Kt[j] * psi;
      for (int c = 0; c < model_.q; ++c) images(c, j) = lifted(readout_[c]);
    }
  }
  return images;
}

Vector EdmdEnsemble::one_step(const Vector& z_model, int j, State&) const {
  if (propagate_lifted_) return model_.Kt[j] * z_model;
  return edmd_predict(model_, j, z_model);
}

// ---- ESN ----

EsnEnsemble::EsnEnsemble(EsnModel model, QuantizedControlSet V, double dt, int sync_window)
    : model_(std::move(model)), V_(std::move(V)), dt_(dt), sync_window_(sync_window) {}

SurrogateEnsemble::State EsnEnsemble::initial_state() const {
  return {Vector::Zero(model_.reservoir.size()), false};
}

void EsnEnsemble::sync(State& state, const std::vector<Vector>& recent_obs) const {
  state.r = Vector::Zero(model_.reservoir.size());
  const std::size_t n = recent_obs.size();
  const std::size_t start = n > static_cast<std::size_t>(sync_window_)
                                ? n - static_cast<std::size_t>(sync_window_)
                                : 0;
  for (std::size_t k = start; k < n; ++k) state.r = model_.reservoir.step(state.r, recent_obs[k]);
  state.ready = true;
}

Matrix EsnEnsemble::one_step_images(const Vector& z_model, State& state) const {
  if (!state.ready) throw ReservoirNotInitialized();
  state.r = model_.reservoir.step(state.r, z_model);
  const int m = num_controls();
  Matrix images(model_.q(), m);
  for (int j = 0; j < m; ++j) images.col(j) = model_.W_out[j] * state.r;
  return images;
}

// ---- POD ----

PodEnsemble::PodEnsemble(PodModel model) : model_(std::move(model)) {}

Vector PodEnsemble::to_model(const Vector& z_obs) const {
  return model_.basis.Psi.transpose() * z_obs;
}

Vector PodEnsemble::to_observable(const Vector& z_model) const {
  return model_.basis.Psi * z_model;
}

Matrix PodEnsemble::one_step_images(const Vector& z_model, State&) const {
  const int m = num_controls();
  Matrix images(model_dim(), m);
  for (int j = 0; j < m; ++j) images.col(j) = pod_predict(model_, j, z_model);
  return images;
}

Vector PodEnsemble::one_step(const Vector& z_model, int j, State&) const {
  return pod_predict(model_, j, z_model);
}

// ---- analytic flow ----

FlowEnsemble::FlowEnsemble(SystemModel system, QuantizedControlSet V, double dt, int substeps,
                           Vector perturbation)
    : V_(std::move(V)), dt_(dt), substeps_(substeps), perturbation_(std::move(perturbation)) {
  if (system.has_delay()) throw InvalidParam("FlowEnsemble supports plain ODE systems only");
  system_ = std::move(system);
  if (perturbation_.size() > 0) {
    if (perturbation_.size() != system_.n_y) throw InvalidParam("perturbation dimension");
    const Rhs base_rhs = system_.rhs;
    const Vector c = perturbation_;
    system_.rhs = [base_rhs, c](const Vector& y, const Vector& u, double t,
                                const DelayHistory* h) { return Vector(base_rhs(y, u, t, h) + c); };
  }
}

Matrix FlowEnsemble::one_step_images(const Vector& z_model, State& state) const {
  const int m = num_controls();
  Matrix images(system_.n_y, m);
  for (int j = 0; j < m; ++j) images.col(j) = one_step(z_model, j, state);
  return images;
}

Vector FlowEnsemble::one_step(const Vector& z_model, int j, State&) const {
  Vector y = z_model;
  const double h = dt_ / substeps_;
  for (int s = 0; s < substeps_; ++s) y = rk4_step(system_, y, V_.points[j], s * h, h);
  return y;
}

}  // namespace quasimodo
