#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "quasimodo/bounds.hpp"
#include "quasimodo/errors.hpp"

using namespace quasimodo;

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }

QuantizedControlSet interval_V(double lo, double hi) {
  QuantizedControlSet V;
  V.parent = {vec1(lo), vec1(hi)};
  V.points = {vec1(lo), vec1(hi)};
  return V;
}

}  // namespace

TEST_CASE("gronwall envelope closed forms") {
  CHECK(gronwall_envelope(0.0, 0.0, 3.0, 2.0) == 0.0);
  CHECK(gronwall_envelope(0.7, 0.3, 0.0, 5.0) == doctest::Approx(1.0));
  CHECK(gronwall_envelope(1.0, 0.0, 1.0, 1.0) == doctest::Approx(std::exp(1.0)));
  CHECK_THROWS_AS(gronwall_envelope(-1.0, 0.0, 1.0, 1.0), InvalidParam);
}

TEST_CASE("m1 and m2 bounds") {
  CHECK(m1_bound(0.0, 10.0) == 0.0);
  CHECK(m1_bound(0.5, 2.0) == doctest::Approx(1.0));
  CHECK(m2_bound(1.0, 2.0, 1.0, 3, 0.0) == 0.0);
  CHECK(m2_bound(1.0, 2.0, 1.0, 3, 0.01) == doctest::Approx(0.06));
}

TEST_CASE("amplification factor limits and identities") {
  // limit dt -> 0 equals the horizon length
  for (long p = 1; p <= 10; ++p) {
    for (double L : {0.1, 1.0, 10.0}) {
      CHECK(std::abs(amplification(L, 1e-10, p) - static_cast<double>(p)) < 1e-6);
    }
  }
  // p = 1 collapses to e^{L dt}
  CHECK(amplification(2.0, 0.3, 1) == doctest::Approx(std::exp(0.6)));
  // L = 0 exactly p
  CHECK(amplification(0.0, 0.05, 7) == 7.0);
  // always at least p
  for (double L : {0.0, 0.5, 2.0, 8.0}) {
    for (long p : {1L, 3L, 10L}) {
      CHECK(amplification(L, 0.01, p) >= static_cast<double>(p) - 1e-12);
    }
  }
}

TEST_CASE("model error recursion") {
  const auto zero = model_error_sequence(0.0, perturbation_model_error_bound(0.0, 2.0), 0.1, 5);
  for (double e : zero) CHECK(e == 0.0);

  const auto one = model_error_sequence(0.0, perturbation_model_error_bound(0.1, 2.0), 0.05, 1);
  CHECK(one.back() == doctest::Approx(0.1 * 0.05 * std::exp(0.1)));

  const auto grow = model_error_sequence(0.0, perturbation_model_error_bound(0.2, 1.5), 0.1, 20);
  for (std::size_t k = 1; k < grow.size(); ++k) CHECK(grow[k] >= grow[k - 1]);
}

TEST_CASE("composite bounds formulas and orderings") {
  BoundInputs in;
  in.L_P = 2.0;
  in.M1 = 0.0;
  in.M2 = 0.3;
  in.M2r = 0.25;
  in.A = 4.0;
  in.Ar = 5.0;
  in.E_model = std::vector<double>{0.0, 0.0, 0.0};
  const CompositeBounds cb = composite_bounds(in);
  CHECK(cb.E_V == 0.0);
  CHECK(cb.E_r == 0.0);
  CHECK(cb.E3 == 0.0);
  CHECK(cb.E1 == doctest::Approx(cb.E_MI));
  CHECK(cb.E2b == doctest::Approx(cb.E_MI));
  CHECK(cb.E_MI == doctest::Approx(2.0 * 0.3 * 4.0));

  in.E_model = std::vector<double>{0.0, 0.01, 0.03};
  const CompositeBounds cb2 = composite_bounds(in);
  CHECK(cb2.E2b <= cb2.E2a);
  CHECK(cb2.E3 <= cb2.E2b);
  CHECK(cb2.E_r == doctest::Approx(2.0 * 2.0 * 0.04));

  // monotone nondecreasing in each component input
  BoundInputs more = in;
  more.M2 = 0.4;
  CHECK(composite_bounds(more).E2b >= cb2.E2b);
  more = in;
  more.L_P = 3.0;
  CHECK(composite_bounds(more).E1 >= cb2.E1);
}

TEST_CASE("missing components are named") {
  BoundInputs in;
  in.L_P = 1.0;
  try {
    composite_bounds(in);
    FAIL("expected MissingComponent");
  } catch (const MissingComponent& e) {
    CHECK(std::string(e.what()).find("M1") != std::string::npos);
  }
}

TEST_CASE("estimated Lipschitz constant of a linear system matches the matrix norm") {
  SystemModel s;
  s.name = "linear";
  s.n_y = 2;
  s.n_u = 1;
  Matrix A(2, 2);
  A << -1.0, 2.0, 0.5, -3.0;
  s.rhs = [A](const Vector& y, const Vector& u, double, const DelayHistory*) {
    return Vector(A * y + Vector::Constant(2, u(0)));
  };
  const QuantizedControlSet V = interval_V(-1.0, 1.0);
  const ConstantsEstimate est = estimate_constants(s, V, Vector::Constant(2, -1.0),
                                                   Vector::Constant(2, 1.0), 8, 0.2, 0.01, 2, 3);
  const double a_norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  CHECK(est.L_g == doctest::Approx(a_norm).epsilon(0.1));
}

TEST_CASE("constant rhs has vanishing C1 and C2 equal to the velocity norm") {
  SystemModel s;
  s.name = "constant";
  s.n_y = 2;
  s.n_u = 1;
  const Vector c = (Vector(2) << 0.75, -0.25).finished();
  s.rhs = [c](const Vector&, const Vector&, double, const DelayHistory*) { return c; };
  const QuantizedControlSet V = interval_V(-1.0, 1.0);
  const ConstantsEstimate est = estimate_constants(s, V, Vector::Constant(2, -1.0),
                                                   Vector::Constant(2, 1.0), 4, 0.2, 0.01, 2, 5);
  CHECK(est.C1 < 1e-6);
  CHECK(est.C2 == doctest::Approx(0.75));
  CHECK(est.L_g < 1e-6);
}

TEST_CASE("stage-cost Lipschitz bound on a 1D ball") {
  const StageCost P = [](const Vector& y) { return y.squaredNorm(); };
  const double R = 1.7;
  const double L_P = estimate_stage_lipschitz(P, vec1(-R), vec1(R), 32, 11);
  CHECK(L_P == doctest::Approx(2.0 * R).epsilon(0.1));
}

TEST_CASE("gronwall numeric check passes on perturbed duffing pairs") {
  const SystemModel base = builtin_system("duffing");
  Vector perturbation = Vector::Zero(2);
  perturbation(1) = 0.1;
  const QuantizedControlSet V = interval_V(-4.0, 4.0);
  const GronwallCheckResult res =
      gronwall_numeric_check(base, perturbation, V, 20, 1.0, 0.002, 1, 1.1, 7);
  CHECK(res.violations == 0);
  CHECK(res.max_ratio <= 1.0);
  CHECK(res.L_est > 0.0);
}

TEST_CASE("halving the SUR grid halves the integrated control deviation") {
  const QuantizedControlSet V = interval_V(0.0, 1.0);
  auto alpha = [](double t) {
    Vector a(2);
    a(0) = 0.5 + 0.4 * std::sin(1.7 * t);
    a(1) = 1.0 - a(0);
    return a;
  };
  const double coarse = sur_integral_deviation(alpha, 2, 4.0, 0.02, V);
  const double fine = sur_integral_deviation(alpha, 2, 4.0, 0.01, V);
  const double ratio = fine / coarse;
  CHECK(ratio > 0.35);
  CHECK(ratio < 0.65);
}
