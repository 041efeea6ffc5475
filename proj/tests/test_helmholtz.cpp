#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "vnw/errors.hpp"
#include "vnw/helmholtz.hpp"

using namespace vnw;
using R = RingElement;
using cd = std::complex<double>;

namespace {

const cd kRoots[] = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};

}  // namespace

TEST_CASE("built-in solutions") {
  const R w1 = builtin_omega1();
  const R w2 = builtin_omega2();
  CHECK(is_zero(laplacian(w1) + w1));
  CHECK(w2.eval(0, 0) == 0.0);
  REQUIRE(w2.size() == 2);
  CHECK(w2.coefficient({0, 1, Trig::cos(1), Trig::none()}) == 4);
  CHECK(w2.coefficient({1, 0, Trig::none(), Trig::sin(1)}) == 4);
  CHECK(verify_helmholtz(w1).satisfied);
  CHECK(verify_helmholtz(w2).satisfied);
}

TEST_CASE("exact family members") {
  CHECK(family_exact(cd(1, 0), 0, Part::kReal) == R::cos_x());
  CHECK(family_exact(cd(0, 1), 0, Part::kReal) == R::cos_y());
  CHECK(family_exact(cd(0, 1), 0, Part::kImag) == -R::sin_y());
  CHECK(family_exact(cd(1, 0), 1, Part::kReal) == -(R::y() * R::cos_x()));
  for (const cd lambda : kRoots) {
    for (int m = 0; m <= 4; ++m) {
      for (const Part part : {Part::kReal, Part::kImag}) {
        const R f = family_exact(lambda, m, part);
        CHECK(is_zero(laplacian(f) + f));
      }
    }
  }
  CHECK_THROWS_AS(family_exact(cd(std::sqrt(0.5), std::sqrt(0.5)), 0, Part::kReal),
                  ParameterError);
  CHECK_THROWS_AS(family_exact(cd(1, 0), 9, Part::kReal), ParameterError);
  CHECK_THROWS_AS(family_exact(cd(1, 0), -1, Part::kReal), ParameterError);
}

TEST_CASE("family representations of the built-in solutions") {
  CHECK(combine_family(omega1_family_representation()) == builtin_omega1());
  CHECK(combine_family(omega2_family_representation()) == builtin_omega2());
}

TEST_CASE("numeric family members") {
  const auto f0 = family_numeric({1.0, cd(1, 0), 0, Part::kReal});
  CHECK(f0(0.7, -0.3).value == doctest::Approx(std::cos(0.7)).epsilon(1e-12));
  const auto f1 = family_numeric({1.0, cd(1, 0), 1, Part::kReal});
  CHECK(std::fabs(f1(0.0, 0.0).value) < 1e-15);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
  for (int m = 0; m <= 4; ++m) {
    const cd lambda = std::polar(1.0, angle(rng));
    const auto f = family_numeric({1.3, lambda, m, m % 2 ? Part::kImag : Part::kReal});
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng);
      const double y = u(rng);
      const Jet j = f(x, y);
      const double scale = std::max(1.0, std::fabs(j.dxx) + std::fabs(j.dyy));
      CHECK(std::fabs(j.laplacian() + 1.69 * j.value) < 1e-10 * scale);
      CHECK_NOTHROW(f.evaluate_checked(x, y));
    }
  }

  const auto tilted = family_numeric({1.0, std::polar(1.0, std::numbers::pi / 5), 2, Part::kReal});
  CHECK(verify_helmholtz(tilted, 1.0).sup_residual < 1e-10);

  CHECK_THROWS_AS(family_numeric({1.0, cd(2, 0), 0, Part::kReal}), ParameterError);
  FamilyOptions unsafe;
  unsafe.allow_off_circle = true;
  CHECK_NOTHROW(family_numeric({1.0, cd(2, 0), 0, Part::kReal}, unsafe));
  CHECK_THROWS_AS(family_numeric({-1.0, cd(1, 0), 0, Part::kReal}), ParameterError);
}

TEST_CASE("exact and numeric family agree on the fourth roots of unity") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (const cd lambda : kRoots) {
    for (int m = 0; m <= 4; ++m) {
      for (const Part part : {Part::kReal, Part::kImag}) {
        const R exact = family_exact(lambda, m, part);
        const auto numeric = family_numeric({1.0, lambda, m, part});
        for (int i = 0; i < 100 / 8 + 1; ++i) {
          const double x = u(rng);
          const double y = u(rng);
          const double scale = std::max(1.0, envelope(exact).eval(x, y));
          CHECK(std::fabs(numeric(x, y).value - exact.eval(x, y)) < 1e-10 * scale);
        }
      }
    }
  }
}

TEST_CASE("numeric derivatives agree with central differences") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-4, 4);
  const auto f = family_numeric({0.8, std::polar(1.0, 0.4), 3, Part::kImag});
  const double h = 1e-5;
  for (int i = 0; i < 30; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const Jet j = f(x, y);
    const double fd_x = (f(x + h, y).value - f(x - h, y).value) / (2 * h);
    const double fd_y = (f(x, y + h).value - f(x, y - h).value) / (2 * h);
    const double fd_xx = (f(x + h, y).dx - f(x - h, y).dx) / (2 * h);
    const double fd_xy = (f(x, y + h).dx - f(x, y - h).dx) / (2 * h);
    const double fd_yy = (f(x, y + h).dy - f(x, y - h).dy) / (2 * h);
    const double scale = 1.0 + std::fabs(j.value) + std::fabs(j.dx) + std::fabs(j.dy);
    CHECK(std::fabs(fd_x - j.dx) < 1e-6 * scale);
    CHECK(std::fabs(fd_y - j.dy) < 1e-6 * scale);
    CHECK(std::fabs(fd_xx - j.dxx) < 1e-6 * scale);
    CHECK(std::fabs(fd_xy - j.dxy) < 1e-6 * scale);
    CHECK(std::fabs(fd_yy - j.dyy) < 1e-6 * scale);
  }
}

TEST_CASE("linear combinations") {
  const R w1 = builtin_omega1();
  const R w2 = builtin_omega2();
  const std::vector<Rational> weights{1, 0};
  const std::vector<R> sols{w1, w2};
  CHECK(linear_combination(weights, sols) == w1);
  const std::vector<Rational> mixed{Rational(3, 2), -2};
  CHECK(verify_helmholtz(linear_combination(mixed, sols)).satisfied);

  // 4 (y cos x + x sin y) from the m = 1 members at lambda = 1 and lambda = i.
  const std::vector<double> w{-4.0, 4.0};
  const std::vector<NumericSolution> members{family_numeric({1.0, cd(1, 0), 1, Part::kReal}),
                                             family_numeric({1.0, cd(0, 1), 1, Part::kReal})};
  const auto combo = linear_combination(w, members);
  CHECK(combo.provenance().size() == 2);
  CHECK(combo.provenance()[0].weight == -4.0);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-8, 8);
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    CHECK(combo(x, y).value == doctest::Approx(w2.eval(x, y)).epsilon(1e-12));
  }
  CHECK(verify_helmholtz(combo, 1.0).sup_residual < 1e-10);

  const std::vector<NumericSolution> clash{family_numeric({1.0, cd(1, 0), 0, Part::kReal}),
                                           family_numeric({2.0, cd(1, 0), 0, Part::kReal})};
  const std::vector<double> ones{1.0, 1.0};
  CHECK_THROWS_AS(linear_combination(ones, clash), IncompatibleWavenumber);
}

TEST_CASE("verify_helmholtz flags violations") {
  const auto perturbed = NumericSolution::from_ring(R::cos_x() + R::constant(Rational(1, 2)));
  CHECK(verify_helmholtz(perturbed, 1.0).sup_residual == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(perturbed.evaluate_checked(0.3, 0.1), HelmholtzViolation);
  const auto report = verify_helmholtz(R::cos_x() + R::constant(1));
  CHECK_FALSE(report.satisfied);
  CHECK(report.residual == R::constant(1));
  CHECK(verify_helmholtz(NumericSolution::from_ring(builtin_omega1()), 1.0).sup_residual < 1e-10);
}
