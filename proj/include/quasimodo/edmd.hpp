#pragma once

#include <vector>

#include "quasimodo/datagen.hpp"
#include "quasimodo/types.hpp"

namespace quasimodo {

struct DictionarySpec {
  int max_degree = 1;
  bool include_constant = true;

  // C(q + max_degree, max_degree), minus one when the constant is dropped.
  int feature_count(int q) const;
};

// Exponent multi-indices in graded-lexicographic order: constant first,
// degree-1 terms in coordinate order, then higher degrees.
std::vector<std::vector<int>> monomial_exponents(int q, const DictionarySpec& spec);

Vector monomial_features(const Vector& z, const DictionarySpec& spec);

struct EdmdModel {
  DictionarySpec dictionary;
  int q = 0;                    // observable dimension
  std::vector<Matrix> Kt;       // per control j: K^T, k x k
  std::vector<bool> underdetermined;  // bucket had fewer than k columns

  int feature_count() const { return dictionary.feature_count(q); }
  // positions of the degree-1 monomials inside the feature vector
  std::vector<int> readout_indices() const;
};

// Least squares K^T = Psi_Ztilde Psi_Z^+ per control, SVD pseudoinverse with
// relative cutoff 1e-10.
EdmdModel edmd_fit(const SnapshotPairs& pairs, const DictionarySpec& spec);

// Lift, apply K^T, read the degree-1 coordinates back.
Vector edmd_predict(const EdmdModel& model, int j, const Vector& z);

}  // namespace quasimodo
