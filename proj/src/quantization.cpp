#include "quasimodo/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "quasimodo/errors.hpp"

namespace quasimodo {

bool BoxControlSet::contains(const Vector& u, double tol) const {
  if (u.size() != lower.size()) return false;
  for (int i = 0; i < u.size(); ++i) {
    if (u(i) < lower(i) - tol || u(i) > upper(i) + tol) return false;
  }
  return true;
}

QuantizedControlSet make_vertex_set(const BoxControlSet& box) {
  const int n = box.dim();
  if (n < 1) throw InvalidParam("control box must have dimension >= 1");
  if (n > 16) throw DimensionTooLarge(n);
  for (int i = 0; i < n; ++i) {
    if (box.lower(i) > box.upper(i)) throw InvalidParam("box lower > upper");
  }
  QuantizedControlSet V;
  V.parent = box;
  const std::size_t m = std::size_t{1} << n;
  V.points.reserve(m);
  for (std::size_t b = 0; b < m; ++b) {
    Vector u(n);
    for (int k = 0; k < n; ++k) {
      const bool high = (b >> (n - 1 - k)) & 1u;
      u(k) = high ? box.upper(k) : box.lower(k);
    }
    V.points.push_back(u);
  }
  return V;
}

QuantizedControlSet make_star_set(const BoxControlSet& box) {
  const int n = box.dim();
  if (n < 1) throw InvalidParam("control box must have dimension >= 1");
  if (!box.contains(Vector::Zero(n))) throw ZeroOutsideBox();
  QuantizedControlSet V;
  V.parent = box;
  V.points.reserve(2 * n + 1);
  V.points.push_back(Vector::Zero(n));
  for (int i = 0; i < n; ++i) {
    Vector lo = Vector::Zero(n), hi = Vector::Zero(n);
    lo(i) = box.lower(i);
    hi(i) = box.upper(i);
    V.points.push_back(lo);
    V.points.push_back(hi);
  }
  return V;
}

bool is_simplex_row(const Vector& w, double tol) {
  if (w.size() == 0) return false;
  double sum = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    if (w(j) < -tol || w(j) > 1.0 + tol) return false;
    sum += w(j);
  }
  return std::abs(sum - 1.0) <= tol;
}

namespace {

double max_norm_residual(const Vector& point, const std::vector<Vector>& vertices,
                         const Vector& lambda) {
  Vector r = point;
  for (std::size_t j = 0; j < vertices.size(); ++j) r -= lambda(static_cast<int>(j)) * vertices[j];
  return r.lpNorm<Eigen::Infinity>();
}

// Minimizes the convex map t -> f(t) on [lo, hi] by ternary search.
template <typename F>
double ternary_min(F&& f, double lo, double hi, int iters, double* arg_out) {
  for (int it = 0; it < iters; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double t = 0.5 * (lo + hi);
  if (arg_out) *arg_out = t;
  return f(t);
}

double hull_distance_exact_small(const Vector& p, const std::vector<Vector>& v) {
  const int m = static_cast<int>(v.size());
  Vector lambda(m);
  if (m == 1) return (p - v[0]).lpNorm<Eigen::Infinity>();
  if (m == 2) {
    auto f = [&](double t) {
      lambda << t, 1.0 - t;
      return max_norm_residual(p, v, lambda);
    };
    return ternary_min(f, 0.0, 1.0, 200, nullptr);
  }
  if (m == 3) {
    auto outer = [&](double t1) {
      auto inner = [&](double t2) {
        lambda << t1, t2, 1.0 - t1 - t2;
        return max_norm_residual(p, v, lambda);
      };
      return ternary_min(inner, 0.0, 1.0 - t1, 130, nullptr);
    };
    return ternary_min(outer, 0.0, 1.0, 130, nullptr);
  }
  // m == 4
  auto outer = [&](double t1) {
    auto mid = [&](double t2) {
      auto inner = [&](double t3) {
        lambda << t1, t2, t3, 1.0 - t1 - t2 - t3;
        return max_norm_residual(p, v, lambda);
      };
      return ternary_min(inner, 0.0, 1.0 - t1 - t2, 70, nullptr);
    };
    return ternary_min(mid, 0.0, 1.0 - t1, 70, nullptr);
  };
  return ternary_min(outer, 0.0, 1.0, 70, nullptr);
}

Vector project_simplex_local(Vector v);

double hull_distance_subgradient(const Vector& p, const std::vector<Vector>& v) {
  const int m = static_cast<int>(v.size());
  Vector lambda = Vector::Constant(m, 1.0 / m);
  double best = max_norm_residual(p, v, lambda);
  double scale = 0.0;
  for (const auto& vj : v) scale = std::max(scale, (p - vj).lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  for (int it = 1; it <= 4000; ++it) {
    Vector r = p;
    for (int j = 0; j < m; ++j) r -= lambda(j) * v[j];
    int d_star = 0;
    r.cwiseAbs().maxCoeff(&d_star);
    const double sgn = r(d_star) >= 0.0 ? 1.0 : -1.0;
    Vector sub(m);
    for (int j = 0; j < m; ++j) sub(j) = -sgn * v[j](d_star);
    lambda = project_simplex_local(lambda - (0.5 * scale / std::sqrt(double(it))) *
                                                sub / std::max(sub.norm(), 1e-300));
    best = std::min(best, max_norm_residual(p, v, lambda));
  }
  return best;
}

Vector project_simplex_local(Vector v) {
  const int m = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  for (int k = 0; k < m; ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / (k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (int j = 0; j < m; ++j) v(j) = std::max(v(j) - theta, 0.0);
  return v;
}

}  // namespace

double hull_distance(const Vector& point, const std::vector<Vector>& vertices) {
  if (vertices.empty()) throw InvalidParam("hull_distance needs at least one vertex");
  if (vertices.size() <= 4) return hull_distance_exact_small(point, vertices);
  return hull_distance_subgradient(point, vertices);
}

double estimate_D(const SystemModel& system, const std::vector<Vector>& trajectory,
                  const BoxControlSet& box, const QuantizedControlSet& V, int samples,
                  std::uint64_t seed) {
  if (trajectory.empty()) throw InvalidParam("estimate_D needs a nonempty trajectory");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n_u = box.dim();
  double d_max = 0.0;
  // Delay terms are frozen at the sampled state; the control dependence of g
  // is unaffected, which is what D measures.
  for (const Vector& y : trajectory) {
    DelayHistory frozen;
    const DelayHistory* hist = nullptr;
    if (system.has_delay()) {
      frozen = constant_history(y, 0.0, system.delay);
      hist = &frozen;
    }
    std::vector<Vector> g_vertices;
    g_vertices.reserve(V.points.size());
    for (const Vector& uj : V.points) g_vertices.push_back(system.rhs(y, uj, 0.0, hist));
    for (int s = 0; s < samples; ++s) {
      Vector u(n_u);
      for (int c = 0; c < n_u; ++c)
        u(c) = box.lower(c) + unit(rng) * (box.upper(c) - box.lower(c));
      d_max = std::max(d_max, hull_distance(system.rhs(y, u, 0.0, hist), g_vertices));
    }
  }
  return d_max;
}

SurResult sur_round(const std::vector<Vector>& alphas, const QuantizedControlSet& V,
                    SurAccumulator& acc) {
  const int m = V.size();
  if (acc.cum_alpha.size() != m) throw InvalidParam("accumulator dimension mismatch");
  SurResult out;
  out.indices.reserve(alphas.size());
  out.controls.reserve(alphas.size());
  out.omegas = Matrix::Zero(static_cast<long>(alphas.size()), m);
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const Vector& a = alphas[i];
    if (!is_simplex_row(a, 1e-9)) throw InvalidParam("sur_round input row is not on the simplex");
    acc.cum_alpha += a;
    const Vector omega_hat = acc.cum_alpha - acc.cum_omega;
    int j_star = 0;
    for (int j = 1; j < m; ++j) {
      if (omega_hat(j) > omega_hat(j_star)) j_star = j;  // ties keep the smaller index
    }
    acc.cum_omega(j_star) += 1.0;
    acc.steps += 1;
    out.indices.push_back(j_star);
    out.controls.push_back(V.points[j_star]);
    out.omegas(static_cast<long>(i), j_star) = 1.0;
  }
  return out;
}

Vector interpolate_control(const Vector& weights, const QuantizedControlSet& V) {
  if (weights.size() != V.size()) throw InvalidParam("weight length != number of control points");
  Vector u = Vector::Zero(V.dim());
  for (int j = 0; j < V.size(); ++j) u += weights(j) * V.points[j];
  return u;
}

}  // namespace quasimodo
