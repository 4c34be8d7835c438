#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "quasimodo/dynamics.hpp"
#include "quasimodo/errors.hpp"
#include "quasimodo/quantization.hpp"

using namespace quasimodo;

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

BoxControlSet box1(double lo, double hi) { return {vec1(lo), vec1(hi)}; }

// Dense grid over the simplex with the given resolution, for oracle checks.
void simplex_grid(int m, int res, std::vector<Vector>& out, Vector& current, int pos, int left) {
  if (pos == m - 1) {
    current(pos) = static_cast<double>(left) / res;
    out.push_back(current);
    return;
  }
  for (int k = 0; k <= left; ++k) {
    current(pos) = static_cast<double>(k) / res;
    simplex_grid(m, res, out, current, pos + 1, left - k);
  }
}

double brute_force_hull_distance(const Vector& p, const std::vector<Vector>& v, int res) {
  std::vector<Vector> grid;
  Vector current(static_cast<long>(v.size()));
  simplex_grid(static_cast<int>(v.size()), res, grid, current, 0, res);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& lam : grid) {
    Vector r = p;
    for (std::size_t j = 0; j < v.size(); ++j) r -= lam(static_cast<long>(j)) * v[j];
    best = std::min(best, r.lpNorm<Eigen::Infinity>());
  }
  return best;
}

}  // namespace

TEST_CASE("vertex set of an interval is its bounds") {
  const auto V = make_vertex_set(box1(-50.0, 50.0));
  REQUIRE(V.size() == 2);
  CHECK(V.points[0](0) == -50.0);
  CHECK(V.points[1](0) == 50.0);

  const auto V2 = make_vertex_set(box1(-4.0, 4.0));
  CHECK(V2.points[0](0) == -4.0);
  CHECK(V2.points[1](0) == 4.0);
}

TEST_CASE("vertex set corner enumeration order") {
  BoxControlSet box{Vector::Zero(2), Vector::Ones(2)};
  const auto V = make_vertex_set(box);
  REQUIRE(V.size() == 4);
  CHECK(V.points[0] == vec2(0, 0));
  CHECK(V.points[1] == vec2(0, 1));
  CHECK(V.points[2] == vec2(1, 0));
  CHECK(V.points[3] == vec2(1, 1));
}

TEST_CASE("vertex set guards against combinatorial blowup") {
  BoxControlSet box{Vector::Zero(17), Vector::Ones(17)};
  CHECK_THROWS_AS(make_vertex_set(box), DimensionTooLarge);
}

TEST_CASE("star set sizes and contents") {
  BoxControlSet b5{Vector::Constant(5, -1.0), Vector::Constant(5, 1.0)};
  CHECK(make_star_set(b5).size() == 11);

  const auto V1 = make_star_set(box1(-1.0, 1.0));
  REQUIRE(V1.size() == 3);
  CHECK(V1.points[0](0) == 0.0);
  CHECK(V1.points[1](0) == -1.0);
  CHECK(V1.points[2](0) == 1.0);

  BoxControlSet b2{vec2(-2.0, -2.0), vec2(3.0, 3.0)};
  const auto V2 = make_star_set(b2);
  REQUIRE(V2.size() == 5);
  CHECK(V2.points[0] == vec2(0, 0));
  CHECK(V2.points[1] == vec2(-2, 0));
  CHECK(V2.points[2] == vec2(3, 0));
  CHECK(V2.points[3] == vec2(0, -2));
  CHECK(V2.points[4] == vec2(0, 3));
}

TEST_CASE("star set requires zero inside the box") {
  CHECK_THROWS_AS(make_star_set(box1(1.0, 2.0)), ZeroOutsideBox);
}

TEST_CASE("hull distance basics") {
  const std::vector<Vector> seg{vec2(0, 0), vec2(1, 0)};
  CHECK(hull_distance(vec2(0, 0), seg) < 1e-12);
  CHECK(hull_distance(vec2(2, 0), seg) == doctest::Approx(1.0).epsilon(1e-9));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector a = vec2(unit(rng), unit(rng));
    const Vector b = vec2(unit(rng), unit(rng));
    const Vector mid = 0.5 * a + 0.5 * b;
    CHECK(hull_distance(mid, {a, b}) < 1e-10);
  }
}

TEST_CASE("hull distance is the max-norm distance, not the euclidean one") {
  // segment (-3,1)-(3,3): the max-norm minimizer trades coordinates
  const std::vector<Vector> seg{vec2(-3, 1), vec2(3, 3)};
  CHECK(hull_distance(vec2(0, 0), seg) == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("hull distance zero iff in hull, against a dense grid") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int m = 2; m <= 4; ++m) {
    for (int rep = 0; rep < 12; ++rep) {
      std::vector<Vector> verts;
      for (int j = 0; j < m; ++j) verts.push_back(vec2(unit(rng), unit(rng)));
      const Vector p = vec2(unit(rng), unit(rng));
      const double ours = hull_distance(p, verts);
      const double grid = brute_force_hull_distance(p, verts, 60);
      CHECK(ours <= grid + 1e-9);          // grid is an upper bound for the min
      CHECK(grid - ours <= 0.35);          // grid resolution error bound
      if (grid < 1e-9) CHECK(ours < 1e-6);
    }
  }
}

TEST_CASE("estimate_D vanishes for control-affine systems with vertex quantization") {
  const SystemModel s = builtin_system("lorenz_affine");
  const BoxControlSet U = box1(-50.0, 50.0);
  const auto V = make_vertex_set(U);
  std::vector<Vector> traj{Vector::Ones(3), (Vector(3) << 2.0, -1.0, 20.0).finished()};
  CHECK(estimate_D(s, traj, U, V, 40, 3) < 1e-10);
}

TEST_CASE("estimate_D on the cosine-input Lorenz system") {
  const SystemModel s = builtin_system("lorenz_cos");
  const BoxControlSet U = box1(0.0, M_PI);
  std::vector<Vector> traj{Vector::Ones(3), (Vector(3) << -3.0, 4.0, 15.0).finished()};

  QuantizedControlSet v_full;
  v_full.parent = U;
  v_full.points = {vec1(0.0), vec1(M_PI)};
  CHECK(estimate_D(s, traj, U, v_full, 60, 5) < 1e-8);  // cos([0,pi]) spanned by endpoints

  QuantizedControlSet v_short;
  v_short.parent = U;
  v_short.points = {vec1(0.0), vec1(0.8 * M_PI)};
  CHECK(estimate_D(s, traj, U, v_short, 60, 5) > 1.0);  // cos(pi) < cos(0.8 pi)
}

TEST_CASE("sur_round passes binary plans through") {
  QuantizedControlSet V;
  V.parent = box1(-1.0, 1.0);
  V.points = {vec1(-1.0), vec1(1.0)};
  SurAccumulator acc(2, 0.1);
  std::vector<Vector> alphas{vec2(1, 0), vec2(0, 1), vec2(0, 1), vec2(1, 0)};
  const auto out = sur_round(alphas, V, acc);
  CHECK(out.indices == std::vector<int>{0, 1, 1, 0});
  CHECK(out.controls[0](0) == -1.0);
  CHECK(out.controls[1](0) == 1.0);
}

TEST_CASE("sur_round hand-applied tie rule on the half-half plan") {
  QuantizedControlSet V;
  V.parent = box1(-1.0, 1.0);
  V.points = {vec1(-1.0), vec1(1.0)};
  SurAccumulator acc(2, 0.1);
  std::vector<Vector> alphas{vec2(0.5, 0.5), vec2(0.5, 0.5)};
  const auto out = sur_round(alphas, V, acc);
  // step 0: omega_hat = (0.5, 0.5), tie -> j = 0; step 1: omega_hat = (0, 1) -> j = 1
  CHECK(out.indices == std::vector<int>{0, 1});
  CHECK(out.omegas(0, 0) == 1.0);
  CHECK(out.omegas(1, 1) == 1.0);
}

TEST_CASE("sur integrality gap stays below (m-1) grid units on random plans") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> m_pick(2, 6);
  std::uniform_int_distribution<int> p_pick(1, 50);
  for (int rep = 0; rep < 1000; ++rep) {
    const int m = m_pick(rng);
    const int p = p_pick(rng);
    QuantizedControlSet V;
    V.parent = box1(0.0, 1.0);
    for (int j = 0; j < m; ++j) V.points.push_back(vec1(static_cast<double>(j) / m));
    SurAccumulator acc(m, 0.01);
    std::vector<Vector> alphas;
    for (int i = 0; i < p; ++i) {
      Vector a(m);
      for (int j = 0; j < m; ++j) a(j) = -std::log(std::max(unit(rng), 1e-12));
      a /= a.sum();
      alphas.push_back(a);
    }
    const auto out = sur_round(alphas, V, acc);
    Vector running = Vector::Zero(m);
    for (int i = 0; i < p; ++i) {
      running += alphas[static_cast<std::size_t>(i)] - out.omegas.row(i).transpose();
      CHECK(running.lpNorm<Eigen::Infinity>() <= static_cast<double>(m - 1));
    }
  }
}

TEST_CASE("sur_round is deterministic and the accumulator carries across calls") {
  QuantizedControlSet V;
  V.parent = box1(0.0, 1.0);
  V.points = {vec1(0.0), vec1(0.5), vec1(1.0)};
  std::vector<Vector> alphas(5, (Vector(3) << 0.2, 0.3, 0.5).finished());

  SurAccumulator a1(3, 0.1), a2(3, 0.1);
  const auto r1 = sur_round(alphas, V, a1);
  const auto r2 = sur_round(alphas, V, a2);
  CHECK(r1.indices == r2.indices);

  // one call over 10 rows equals two chained calls over 5 + 5
  SurAccumulator whole(3, 0.1);
  std::vector<Vector> both = alphas;
  both.insert(both.end(), alphas.begin(), alphas.end());
  const auto rw = sur_round(both, V, whole);
  SurAccumulator chained(3, 0.1);
  const auto rc1 = sur_round(alphas, V, chained);
  const auto rc2 = sur_round(alphas, V, chained);
  std::vector<int> glued = rc1.indices;
  glued.insert(glued.end(), rc2.indices.begin(), rc2.indices.end());
  CHECK(rw.indices == glued);
}

TEST_CASE("interpolate_control") {
  QuantizedControlSet V;
  V.parent = box1(-50.0, 50.0);
  V.points = {vec1(-50.0), vec1(50.0)};
  CHECK(interpolate_control(vec2(1, 0), V)(0) == -50.0);
  CHECK(interpolate_control(vec2(0.5, 0.5), V)(0) == 0.0);

  QuantizedControlSet Vpi;
  Vpi.parent = box1(0.0, M_PI);
  Vpi.points = {vec1(0.0), vec1(M_PI)};
  CHECK(interpolate_control(vec2(0.25, 0.75), Vpi)(0) == doctest::Approx(0.75 * M_PI));

  // box membership property
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    Vector w(2);
    w << unit(rng), 0.0;
    w(1) = 1.0 - w(0);
    CHECK(V.parent.contains(interpolate_control(w, V)));
  }
}
