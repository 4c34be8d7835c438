#include "quasimodo/edmd.hpp"

#include <Eigen/SVD>

#include "quasimodo/errors.hpp"

namespace quasimodo {

int DictionarySpec::feature_count(int q) const {
  long k = 1;
  for (int i = 1; i <= max_degree; ++i) k = k * (q + i) / i;  // C(q+d, d)
  return static_cast<int>(include_constant ? k : k - 1);
}

namespace {
void enumerate(int q, int pos, int remaining, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
  if (pos == q - 1) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[pos] = e;
    enumerate(q, pos + 1, remaining - e, current, out);
  }
}
}  // namespace

std::vector<std::vector<int>> monomial_exponents(int q, const DictionarySpec& spec) {
  if (q < 1) throw InvalidParam("dictionary needs q >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> current(q, 0);
  for (int d = spec.include_constant ? 0 : 1; d <= spec.max_degree; ++d) {
    enumerate(q, 0, d, current, out);
  }
  return out;
}

Vector monomial_features(const Vector& z, const DictionarySpec& spec) {
  const int q = static_cast<int>(z.size());
  const auto exps = monomial_exponents(q, spec);
  // power table: powers[c][e] = z_c^e
  Matrix powers(q, spec.max_degree + 1);
  for (int c = 0; c < q; ++c) {
    powers(c, 0) = 1.0;
    for (int e = 1; e <= spec.max_degree; ++e) powers(c, e) = powers(c, e - 1) * z(c);
  }
  Vector psi(static_cast<long>(exps.size()));
  for (std::size_t i = 0; i < exps.size(); ++i) {
    double v = 1.0;
    for (int c = 0; c < q; ++c) v *= powers(c, exps[i][c]);
    psi(static_cast<long>(i)) = v;
  }
  return psi;
}

std::vector<int> EdmdModel::readout_indices() const {
  const auto exps = monomial_exponents(q, dictionary);
  std::vector<int> idx(q, -1);
  for (std::size_t i = 0; i < exps.size(); ++i) {
    int degree = 0, coord = -1;
    for (int c = 0; c < q; ++c) {
      degree += exps[i][c];
      if (exps[i][c] == 1) coord = c;
    }
    if (degree == 1) idx[coord] = static_cast<int>(i);
  }
  return idx;
}

EdmdModel edmd_fit(const SnapshotPairs& pairs, const DictionarySpec& spec) {
  EdmdModel model;
  model.dictionary = spec;
  const int m = pairs.num_controls();
  if (m == 0) throw InvalidParam("no snapshot buckets");
  model.q = static_cast<int>(pairs.Z[0].rows());
  const int k = spec.feature_count(model.q);

  std::string sizes;
  for (int j = 0; j < m; ++j) {
    sizes += (j ? "," : "") + std::to_string(pairs.Z[j].cols());
  }

  model.Kt.resize(m);
  model.underdetermined.assign(m, false);
  for (int j = 0; j < m; ++j) {
    const long n = pairs.Z[j].cols();
    if (n == 0) throw InsufficientData(j, sizes);
    if (n < k) model.underdetermined[j] = true;
    Matrix psi_z(k, n), psi_zt(k, n);
    for (long c = 0; c < n; ++c) {
      psi_z.col(c) = monomial_features(pairs.Z[j].col(c), spec);
      psi_zt.col(c) = monomial_features(pairs.Ztilde[j].col(c), spec);
    }
    Eigen::BDCSVD<Matrix> svd(psi_z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
    Vector inv_sv = Vector::Zero(sv.size());
    for (long i = 0; i < sv.size(); ++i) inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
    // pinv(Psi_Z) = V diag(1/s) U^T
    const Matrix pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
    model.Kt[j] = psi_zt * pinv;
  }
  return model;
}

Vector edmd_predict(const EdmdModel& model, int j, const Vector& z) {
  if (j < 0 || j >= static_cast<int>(model.Kt.size())) throw InvalidParam("control index");
  const Vector lifted = model.Kt[j] * monomial_features(z, model.dictionary);
  const auto idx = model.readout_indices();
  Vector out(model.q);
  for (int c = 0; c < model.q; ++c) out(c) = lifted(idx[c]);
  return out;
}

}  // namespace quasimodo
