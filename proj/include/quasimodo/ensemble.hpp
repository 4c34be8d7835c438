#pragma once

#include <memory>
#include <vector>

#include "quasimodo/dynamics.hpp"
#include "quasimodo/edmd.hpp"
#include "quasimodo/esn.hpp"
#include "quasimodo/pod.hpp"
#include "quasimodo/quantization.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

// The m one-step predictors Phi^r_{u^j} behind one interface. Rollout state
// (the ESN reservoir) is explicit so parallel rollouts can clone it; each
// one_step call advances the clock by dt once.
class SurrogateEnsemble {
 public:
  virtual ~SurrogateEnsemble() = default;

  virtual int num_controls() const = 0;
  virtual int model_dim() const = 0;       // rollout state dimension
  virtual int observable_dim() const = 0;  // dimension presented to stage costs
  virtual double dt() const = 0;
  virtual const QuantizedControlSet& controls() const = 0;

  virtual Vector to_model(const Vector& z_obs) const { return z_obs; }
  virtual Vector to_observable(const Vector& z_model) const { return z_model; }

  struct State {
    Vector r;
    bool ready = true;
  };
  virtual State initial_state() const { return {}; }
  // Re-synchronize from recently observed data (teacher-forced replay for the
  // ESN backend, no-op otherwise). `recent_obs` excludes the current sample.
  virtual void sync(State& state, const std::vector<Vector>& recent_obs) const {
    (void)recent_obs;
    state.ready = true;
  }

  // All m one-step images of z (columns); advances `state` once.
  virtual Matrix one_step_images(const Vector& z_model, State& state) const = 0;
  // Single image under control j; same state semantics.
  virtual Vector one_step(const Vector& z_model, int j, State& state) const;
};

// z+ = images * alpha_row: the relaxed dynamics of the optimization problem.
Vector relaxed_step(const SurrogateEnsemble& ens, const Vector& z_model, const Vector& alpha_row,
                    SurrogateEnsemble::State& state);

// Rollout under a sequence of simplex rows (relaxed) or control indices
// (pure); returns z_1 .. z_p in model space.
std::vector<Vector> multi_step_predict(const SurrogateEnsemble& ens, const Vector& z0_model,
                                       const std::vector<Vector>& plan_rows,
                                       SurrogateEnsemble::State state);
std::vector<Vector> multi_step_predict(const SurrogateEnsemble& ens, const Vector& z0_model,
                                       const std::vector<int>& indices,
                                       SurrogateEnsemble::State state);

// ---- Backends ----

class EdmdEnsemble : public SurrogateEnsemble {
 public:
  EdmdEnsemble(EdmdModel model, QuantizedControlSet V, double dt, bool propagate_lifted = false);

  int num_controls() const override { return static_cast<int>(model_.Kt.size()); }
  int model_dim() const override;
  int observable_dim() const override { return model_.q; }
  double dt() const override { return dt_; }
  const QuantizedControlSet& controls() const override { return V_; }
  Vector to_model(const Vector& z_obs) const override;
  Vector to_observable(const Vector& z_model) const override;
  Matrix one_step_images(const Vector& z_model, State& state) const override;
  Vector one_step(const Vector& z_model, int j, State& state) const override;

  const EdmdModel& model() const { return model_; }
  bool propagate_lifted() const { return propagate_lifted_; }

 private:
  EdmdModel model_;
  QuantizedControlSet V_;
  double dt_;
  bool propagate_lifted_;
  std::vector<int> readout_;
};

class EsnEnsemble : public SurrogateEnsemble {
 public:
  EsnEnsemble(EsnModel model, QuantizedControlSet V, double dt, int sync_window = 20);

  int num_controls() const override { return static_cast<int>(model_.W_out.size()); }
  int model_dim() const override { return model_.q(); }
  int observable_dim() const override { return model_.q(); }
  double dt() const override { return dt_; }
  const QuantizedControlSet& controls() const override { return V_; }
  State initial_state() const override;
  void sync(State& state, const std::vector<Vector>& recent_obs) const override;
  Matrix one_step_images(const Vector& z_model, State& state) const override;

  const EsnModel& model() const { return model_; }
  int sync_window() const { return sync_window_; }

 private:
  EsnModel model_;
  QuantizedControlSet V_;
  double dt_;
  int sync_window_;
};

class PodEnsemble : public SurrogateEnsemble {
 public:
  PodEnsemble(PodModel model);

  int num_controls() const override { return model_.V.size(); }
  int model_dim() const override { return model_.basis.ell(); }
  int observable_dim() const override { return static_cast<int>(model_.basis.Psi.rows()); }
  double dt() const override { return model_.dt; }
  const QuantizedControlSet& controls() const override { return model_.V; }
  Vector to_model(const Vector& z_obs) const override;
  Vector to_observable(const Vector& z_model) const override;
  Matrix one_step_images(const Vector& z_model, State& state) const override;
  Vector one_step(const Vector& z_model, int j, State& state) const override;

  const PodModel& model() const { return model_; }

 private:
  PodModel model_;
};

// Uses the time-dt flow of an analytic system as the one-step predictor; with
// a perturbation vector this is the perturbed-model surrogate, with zero it
// reproduces the plant flow bit-exactly at equal integrator settings.
class FlowEnsemble : public SurrogateEnsemble {
 public:
  FlowEnsemble(SystemModel system, QuantizedControlSet V, double dt, int substeps,
               Vector perturbation = Vector());

  int num_controls() const override { return V_.size(); }
  int model_dim() const override { return system_.n_y; }
  int observable_dim() const override { return system_.n_y; }
  double dt() const override { return dt_; }
  const QuantizedControlSet& controls() const override { return V_; }
  Matrix one_step_images(const Vector& z_model, State& state) const override;
  Vector one_step(const Vector& z_model, int j, State& state) const override;

  const SystemModel& system() const { return system_; }
  int substeps() const { return substeps_; }
  const Vector& perturbation() const { return perturbation_; }

 private:
  SystemModel system_;  // rhs already includes the perturbation
  QuantizedControlSet V_;
  double dt_;
  int substeps_;
  Vector perturbation_;
};

}  // namespace quasimodo
