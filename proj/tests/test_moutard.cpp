#include "doctest.h"

#include <cmath>
#include <random>

#include "printed_formulas.hpp"
#include "vnw/errors.hpp"
#include "vnw/moutard.hpp"

using namespace vnw;
using vnw::testing::printed_p_leading;
using vnw::testing::printed_q;
using R = RingElement;
using cd = std::complex<double>;

TEST_CASE("closedness residual") {
  const R w1 = builtin_omega1();
  const R w2 = builtin_omega2();
  CHECK(is_zero(closedness_residual(w1, w2)));
  CHECK(is_zero(closedness_residual(w1, w1)));
  const R mismatch = closedness_residual(R::cos_x(), R::cos_y(2));
  CHECK(mismatch == Rational(-3) * R::cos_x() * R::cos_y(2));

  const auto n1 = NumericSolution::from_ring(w1);
  const auto n2 = NumericSolution::from_ring(w2);
  CHECK(closedness_residual(n1, n2, {}) < 1e-9);
  const auto bad = NumericSolution::from_ring(R::cos_y(2), 2.0);
  CHECK(closedness_residual(NumericSolution::from_ring(R::cos_x()), bad, {}) > 1.0);
}

TEST_CASE("theta_exact reproduces the printed Q") {
  for (const Rational C : {Rational(0), Rational(-1), Rational(-100), Rational(5, 7)}) {
    const auto theta = theta_exact(builtin_omega1(), builtin_omega2(), kappa_from_C(C));
    CHECK(theta.Q == printed_q(C));
    CHECK(theta.Q.eval(0, 0) == doctest::Approx(Rational(4 * C + 1).get_d()));
  }
}

TEST_CASE("theta_exact with phi = omega is the constant kappa") {
  const auto theta = theta_exact(builtin_omega1(), builtin_omega1(), Rational(7, 2));
  CHECK(theta.Q == R::constant(Rational(7, 2)));
  CHECK(theta.theta().denominator() == builtin_omega1());
}

TEST_CASE("theta system holds for random Helmholtz pairs") {
  std::mt19937 rng(31);
  const cd roots[] = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
  std::uniform_int_distribution<int> pick_root(0, 3);
  std::uniform_int_distribution<int> pick_m(0, 3);
  std::uniform_int_distribution<int> pick_part(0, 1);
  std::uniform_int_distribution<int> pick_w(-3, 3);
  auto random_solution = [&] {
    R sum;
    for (int i = 0; i < 2; ++i) {
      sum += Rational(pick_w(rng)) * family_exact(roots[pick_root(rng)], pick_m(rng),
                                                  pick_part(rng) ? Part::kReal : Part::kImag);
    }
    return sum;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const R w = random_solution();
    const R phi = random_solution();
    const Rational kappa(pick_w(rng));
    const auto theta = theta_exact(w, phi, kappa);
    CHECK(is_zero(diff_x(theta.Q) + (w * diff_y(phi) - phi * diff_y(w))));
    CHECK(is_zero(diff_y(theta.Q) - (w * diff_x(phi) - phi * diff_x(w))));
    CHECK(theta.Q.at_y0().at_x0() == R::constant(kappa));

    // Integration-constant covariance and antisymmetry.
    const auto shifted = theta_exact(w, phi, kappa + 5);
    CHECK(shifted.Q - theta.Q == R::constant(5));
    const R sum = theta_exact(w, phi, 0).Q + theta_exact(phi, w, 0).Q;
    CHECK(sum.max_total_degree() <= 0);
    CHECK(sum.size() <= 1);
  }
}

TEST_CASE("theta_exact rejects non-closed forms") {
  CHECK_THROWS_AS(theta_exact(R::cos_x(), R::cos_y(2), 0), ConsistencyError);
  CHECK_THROWS_AS(double_potential(R::cos_x(), R::cos_y(2), -1), ConsistencyError);
}

TEST_CASE("theta_numeric agrees with the exact Q") {
  const R w1 = builtin_omega1();
  const R w2 = builtin_omega2();
  const Rational C(-3);
  const R Q = theta_exact(w1, w2, kappa_from_C(C)).Q;
  const auto n1 = NumericSolution::from_ring(w1);
  const auto n2 = NumericSolution::from_ring(w2);
  const double kappa = kappa_from_C(C).get_d();

  std::mt19937 rng(2013);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const auto r = theta_numeric_detail(n1, n2, kappa, x, y);
    CHECK(std::fabs(r.Q - Q.eval(x, y)) < 1e-8);
    CHECK(std::fabs(r.Q - r.Q_alternate) < 1e-8);
  }
  CHECK(theta_numeric(n1, n1, 2.5, 3.0, -4.0) == 2.5);
  CHECK(std::fabs(loop_integral(n1, n2, 0, 0, 3, 2)) < 1e-8);
}

TEST_CASE("theta_numeric refuses a non-closed pair") {
  const auto a = NumericSolution::from_ring(R::cos_x());
  const auto b = NumericSolution::from_ring(R::cos_y(2), 2.0);
  CHECK_THROWS_AS(theta_numeric(a, b, 0.0, 1.0, 1.0), ConsistencyError);
  QuadratureOptions no_precheck;
  no_precheck.closedness_tol = 1e300;
  CHECK_THROWS_AS(theta_numeric(a, b, 0.0, 1.0, 1.0, no_precheck), PathDependenceError);
}

TEST_CASE("theta_numeric works on numeric family members") {
  const auto a = family_numeric({1.0, std::polar(1.0, 0.3), 1, Part::kReal});
  const auto b = family_numeric({1.0, std::polar(1.0, 1.9), 2, Part::kImag});
  CHECK(std::fabs(loop_integral(a, b, -1, -2, 2.5, 1.5)) < 1e-8);
  CHECK_NOTHROW(theta_numeric(a, b, 1.0, 2.0, -3.0));
}

TEST_CASE("single Moutard potential") {
  const RationalField u = single_moutard_potential(-1, R::cos_x());
  const R cos2 = R::cos_x() * R::cos_x();
  CHECK(u.denominator() == cos2);
  CHECK(is_zero(u.numerator() - (R::constant(2) - cos2)));
  CHECK(single_moutard_potential(0, R::constant(1)).numerator().is_zero());

  // Quotient formula against finite differences of log|w|.
  const R w = builtin_omega1();
  const RationalField lap_log = single_moutard_potential(0, w);  // -2 Laplace log w
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u01(-3, 3);
  int checked = 0;
  while (checked < 20) {
    const double x = u01(rng);
    const double y = u01(rng);
    if (std::fabs(w.eval(x, y)) < 0.5) continue;
    auto f = [&](double a, double b) { return std::log(std::fabs(w.eval(a, b))); };
    auto five_point = [&](double h) {
      return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / (h * h);
    };
    // Richardson extrapolation removes the O(h^2) term.
    const double fd = (4 * five_point(5e-4) - five_point(1e-3)) / 3;
    CHECK(-2 * fd == doctest::Approx(lap_log.eval(x, y)).epsilon(1e-6));
    ++checked;
  }
}

TEST_CASE("double potential of the explicit example") {
  const auto pkg = double_potential(builtin_omega1(), builtin_omega2(), -100);
  CHECK(pkg.Q == printed_q(-100));
  CHECK(pkg.Q.eval(0, 0) == -399.0);
  CHECK(pkg.energy == 1);
  CHECK(pkg.background == -1);
  CHECK(pkg.P.max_total_degree() == 7);
  CHECK(pkg.P.homogeneous_part(7) == printed_p_leading());
  CHECK(pkg.P == p_from_q(pkg.Q));
}

TEST_CASE("eigen identities hold for every C and fail under mutation") {
  for (const Rational C : {Rational(0), Rational(-1), Rational(-10), Rational(-100)}) {
    const auto pkg = double_potential(builtin_omega1(), builtin_omega2(), C);
    const auto verdict = verify_eigen_identity(pkg);
    CHECK(verdict.psi1);
    CHECK(verdict.psi2);
    for (const auto& check : verify_package(pkg)) {
      INFO(check.name);
      CHECK(check.passed);
    }
  }
  auto pkg = double_potential(builtin_omega1(), builtin_omega2(), -10);
  pkg.Q += R::term(1, 2, 0, {}, Trig::cos(1));
  CHECK_FALSE(verify_eigen_identity(pkg).psi1);
  CHECK_FALSE(verify_eigen_identity(pkg).psi2);
}
