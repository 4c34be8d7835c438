#include "quasimodo/esn.hpp"

#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "quasimodo/errors.hpp"

namespace quasimodo {

double spectral_radius_of(const Matrix& A) {
  Eigen::EigenSolver<Matrix> eig(A, /*computeEigenvectors=*/false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

EsnReservoir esn_init(int n_r, int q, double rho, double sparsity, double activation_scale,
                      std::uint64_t seed, double feedback_scale) {
  if (n_r < 1) throw InvalidParam("reservoir size must be >= 1");
  if (sparsity < 0.0 || sparsity >= 1.0) throw InvalidParam("sparsity must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  EsnReservoir res;
  res.activation_scale = activation_scale;
  res.spectral_radius = rho;
  res.sparsity = sparsity;
  res.seed = seed;
  res.W_res.resize(n_r, n_r);
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_r; ++j) {
      const double v = unit(rng);
      res.W_res(i, j) = coin(rng) < sparsity ? 0.0 : v;
    }
  }
  const double current = spectral_radius_of(res.W_res);
  if (current < 1e-14) throw SpectralRadiusZero();
  res.W_res *= rho / current;

  res.W_fb.resize(n_r, q);
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < q; ++j) res.W_fb(i, j) = feedback_scale * unit(rng);
  }
  return res;
}

namespace {

// Shared teacher-forced pass; `drive` maps step k to the extra input term.
Matrix collect_states(const EsnReservoir& res, const std::vector<Vector>& z,
                      const Matrix* W_in, const std::vector<Vector>* controls) {
  const long n = static_cast<long>(z.size());
  Matrix R(res.size(), n - 1);  // column k holds r(k+1)
  Vector r = Vector::Zero(res.size());
  for (long k = 0; k + 1 < n; ++k) {
    Vector pre = res.W_res * r + res.W_fb * z[static_cast<std::size_t>(k)];
    if (W_in) pre += (*W_in) * (*controls)[static_cast<std::size_t>(k)];
    r = res.activation_scale * pre.array().tanh().matrix();
    R.col(k) = r;
  }
  return R;
}

Matrix ridge_readout(const Matrix& R, const Matrix& targets, double beta) {
  // W = Ztilde R^T (R R^T + beta I)^-1, solved as a symmetric system
  const Matrix gram =
      R * R.transpose() + beta * Matrix::Identity(R.rows(), R.rows());
  Eigen::LDLT<Matrix> ldlt(gram);
  return ldlt.solve(R * targets.transpose()).transpose();
}

}  // namespace

EsnModel esn_fit(const LabeledTrajectory& traj, const EsnReservoir& reservoir, int washout,
                 double ridge_beta) {
  const long n = traj.size();
  if (n <= washout + 1) throw InvalidParam("trajectory shorter than washout");
  int m = 0;
  for (int j : traj.control_indices) m = std::max(m, j + 1);

  const Matrix R = collect_states(reservoir, traj.observables, nullptr, nullptr);

  std::vector<std::vector<long>> members(m);
  for (long k = washout; k + 1 < n; ++k) members[traj.control_indices[k]].push_back(k);
  std::string sizes;
  for (int j = 0; j < m; ++j) sizes += (j ? "," : "") + std::to_string(members[j].size());

  EsnModel model;
  model.reservoir = reservoir;
  model.ridge_beta = ridge_beta;
  model.washout = washout;
  model.W_out.resize(m);
  const int q = static_cast<int>(reservoir.W_fb.cols());
  for (int j = 0; j < m; ++j) {
    const long nj = static_cast<long>(members[j].size());
    if (nj == 0) throw InsufficientData(j, sizes);
    Matrix Rj(reservoir.size(), nj), Zt(q, nj);
    for (long c = 0; c < nj; ++c) {
      const long k = members[j][static_cast<std::size_t>(c)];
      Rj.col(c) = R.col(k);  // r(k+1)
      Zt.col(c) = traj.observables[static_cast<std::size_t>(k + 1)];
    }
    model.W_out[j] = ridge_readout(Rj, Zt, ridge_beta);
  }
  return model;
}

void esn_sync(const EsnModel& model, EsnState& state, const std::vector<Vector>& recent) {
  state.r = Vector::Zero(model.reservoir.size());
  for (const auto& z : recent) state.r = model.reservoir.step(state.r, z);
  state.ready = true;
}

Vector esn_predict(const EsnModel& model, EsnState& state, int j, const Vector& z_current) {
  if (!state.ready) throw ReservoirNotInitialized();
  if (j < 0 || j >= static_cast<int>(model.W_out.size())) throw InvalidParam("control index");
  state.r = model.reservoir.step(state.r, z_current);
  return model.W_out[j] * state.r;
}

AugmentedEsnModel esn_fit_augmented(const LabeledTrajectory& traj, const EsnReservoir& reservoir,
                                    double w_in_scale, int washout, double ridge_beta,
                                    std::uint64_t w_in_seed) {
  const long n = traj.size();
  if (n <= washout + 1) throw InvalidParam("trajectory shorter than washout");
  const int n_u =
      traj.controls_applied.empty() ? 0 : static_cast<int>(traj.controls_applied[0].size());

  AugmentedEsnModel model;
  model.reservoir = reservoir;
  model.ridge_beta = ridge_beta;
  model.washout = washout;
  std::mt19937_64 rng(w_in_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  model.W_in.resize(reservoir.size(), n_u);
  for (int i = 0; i < reservoir.size(); ++i) {
    for (int j = 0; j < n_u; ++j) model.W_in(i, j) = w_in_scale * unit(rng);
  }

  const Matrix R = collect_states(reservoir, traj.observables, &model.W_in,
                                  &traj.controls_applied);
  const long n_use = n - 1 - washout;
  if (n_use < 1) throw InvalidParam("trajectory shorter than washout");
  const int q = static_cast<int>(reservoir.W_fb.cols());
  Matrix Ruse(reservoir.size(), n_use), Zt(q, n_use);
  for (long c = 0; c < n_use; ++c) {
    Ruse.col(c) = R.col(washout + c);
    Zt.col(c) = traj.observables[static_cast<std::size_t>(washout + c + 1)];
  }
  model.W_out = ridge_readout(Ruse, Zt, ridge_beta);
  return model;
}

void esn_sync_augmented(const AugmentedEsnModel& model, EsnState& state,
                        const std::vector<Vector>& recent_z,
                        const std::vector<Vector>& recent_u) {
  if (recent_z.size() != recent_u.size()) throw InvalidParam("sync window size mismatch");
  state.r = Vector::Zero(model.reservoir.size());
  for (std::size_t k = 0; k < recent_z.size(); ++k) {
    state.r = model.reservoir_step(state.r, recent_z[k], recent_u[k]);
  }
  state.ready = true;
}

Vector esn_predict_augmented(const AugmentedEsnModel& model, EsnState& state,
                             const Vector& z_current, const Vector& u) {
  if (!state.ready) throw ReservoirNotInitialized();
  state.r = model.reservoir_step(state.r, z_current, u);
  return model.W_out * state.r;
}

}  // namespace quasimodo
