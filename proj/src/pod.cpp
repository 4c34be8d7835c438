#include "quasimodo/pod.hpp"

#include <Eigen/SVD>

#include "quasimodo/errors.hpp"

namespace quasimodo {

PodBasis pod_fit(const Matrix& snapshots, int ell) {
  if (ell < 1 || ell > std::min(snapshots.rows(), snapshots.cols())) {
    throw InvalidParam("pod basis size must satisfy 1 <= ell <= min(n_x, N)");
  }
  Eigen::BDCSVD<Matrix> svd(snapshots, Eigen::ComputeThinU);
  PodBasis basis;
  basis.Psi = svd.matrixU().leftCols(ell);
  basis.singular_values = svd.singularValues();
  const double total = basis.singular_values.squaredNorm();
  basis.retained_energy =
      total > 0.0 ? basis.singular_values.head(ell).squaredNorm() / total : 1.0;
  basis.rank_deficient =
      basis.singular_values(ell - 1) < 1e-12 * basis.singular_values(0);
  return basis;
}

Vector pod_reduced_rhs(const PodModel& model, const Vector& z, const Vector& u) {
  return model.basis.Psi.transpose() *
         model.plant.rhs(model.basis.Psi * z, u, 0.0, nullptr);
}

Vector pod_predict(const PodModel& model, int j, const Vector& z) {
  if (j < 0 || j >= model.V.size()) throw InvalidParam("control index");
  const Vector& u = model.V.points[j];
  const double h = model.dt / model.substeps;
  Vector zk = z;
  for (int s = 0; s < model.substeps; ++s) {
    const Vector k1 = pod_reduced_rhs(model, zk, u);
    const Vector k2 = pod_reduced_rhs(model, zk + 0.5 * h * k1, u);
    const Vector k3 = pod_reduced_rhs(model, zk + 0.5 * h * k2, u);
    const Vector k4 = pod_reduced_rhs(model, zk + h * k3, u);
    zk += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!zk.allFinite()) throw IntegrationDiverged(-1);
  return zk;
}

}  // namespace quasimodo
