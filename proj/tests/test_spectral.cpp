#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "printed_formulas.hpp"
#include "vnw/errors.hpp"
#include "vnw/spectral.hpp"

using namespace vnw;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr long kC = -12;

const PotentialPackage& package() {
  static const PotentialPackage pkg = double_potential(builtin_omega1(), builtin_omega2(), kC);
  return pkg;
}

const PositivityCertificate& certificate() {
  static const PositivityCertificate cert = certify(package().Q, kC);
  return cert;
}

std::vector<double> dense_eigenvalues(const SparseMatrix& A) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(MatrixXd(A), Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

}  // namespace

TEST_CASE("grid spec") {
  const GridSpec g(30, 0.1);
  CHECK(g.intervals() == 600);
  CHECK(g.unknowns() == 599L * 599L);
  CHECK(g.node(0) == -30.0);
  CHECK(g.node(600) == doctest::Approx(30.0));
  CHECK_THROWS_AS(GridSpec(1.0, 0.3), ParameterError);
  CHECK_THROWS_AS(GridSpec(-1.0, 0.1), ParameterError);
  CHECK_THROWS_AS(GridSpec(1.0, 0.0), ParameterError);
}

TEST_CASE("stencil operator matches the assembled matrix and is split independent") {
  const PackageFields fields(package());
  const GridSpec g(4, 0.25);
  const SparseMatrix A = assemble_operator(g, fields.potential_field());
  const StencilOperator op(g, fields.potential_field());
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  VectorXd v(g.unknowns());
  for (auto& e : v) e = u(rng);
  const VectorXd one = op.apply(v, 1);
  const VectorXd three = op.apply(v, 3);
  CHECK((one - three).cwiseAbs().maxCoeff() == 0.0);
  CHECK((A * v - one).norm() <= 1e-12 * one.norm());
  CHECK(MatrixXd(A).isApprox(MatrixXd(A).transpose()));
}

TEST_CASE("inertia count agrees with a dense eigensolver") {
  const PackageFields fields(package());
  const GridSpec g(3, 0.25);
  const SparseMatrix A = assemble_operator(g, fields.potential_field());
  const auto values = dense_eigenvalues(A);
  for (double shift : {-0.3, 0.5, 1.0, 2.7, 10.0}) {
    const long dense = std::count_if(values.begin(), values.end(), [&](double v) { return v < shift; });
    CHECK(count_below(A, shift) == dense);
  }
}

TEST_CASE("window eigenpairs agree with a dense eigensolver") {
  const PackageFields fields(package());
  const GridSpec g(3, 0.25);
  const SparseMatrix A = assemble_operator(g, fields.potential_field());
  const auto values = dense_eigenvalues(A);
  EigenOptions options;
  options.center = 4.0;
  options.half_width = 3.0;
  std::vector<double> expected;
  for (double v : values) {
    if (v > 1.0 && v < 7.0) expected.push_back(v);
  }
  REQUIRE(expected.size() >= 4);

  for (const InnerSolver inner : {InnerSolver::kDirectLdlt, InnerSolver::kMinres}) {
    options.inner = inner;
    const EigenResult r = eigen_window(A, options);
    CHECK(r.window_count == static_cast<long>(expected.size()));
    REQUIRE(r.pairs.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(r.pairs[i].value == doctest::Approx(expected[i]).epsilon(1e-9));
      // Reported residuals are recomputable from the stored vector.
      const VectorXd& v = r.pairs[i].vector;
      CHECK(v.norm() == doctest::Approx(1.0));
      const double res = (A * v - r.pairs[i].value * v).norm();
      CHECK(res == doctest::Approx(r.pairs[i].residual).epsilon(1e-6));
      CHECK(res < 1e-6);
    }
    CHECK(r.max_solve_residual <= options.solve_tol);
  }
}

TEST_CASE("degenerate eigenvalues of the free square are all found") {
  const GridSpec g(3, 0.25);
  const SparseMatrix A = assemble_operator(g, [](double, double) { return 0.0; });
  const auto values = dense_eigenvalues(A);
  EigenOptions options;
  options.center = 3.0;
  options.half_width = 2.5;
  const EigenResult r = eigen_window(A, options);
  std::vector<double> expected;
  for (double v : values) {
    if (v > 0.5 && v < 5.5) expected.push_back(v);
  }
  REQUIRE(r.pairs.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(r.pairs[i].value == doctest::Approx(expected[i]).epsilon(1e-9));
  }
  // Eigenvectors are orthonormal even inside degenerate pairs.
  MatrixXd V(A.rows(), static_cast<Eigen::Index>(r.pairs.size()));
  for (std::size_t i = 0; i < r.pairs.size(); ++i) V.col(static_cast<Eigen::Index>(i)) = r.pairs[i].vector;
  CHECK((V.transpose() * V - MatrixXd::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("stalled inner solves raise SolverStagnation") {
  const GridSpec g(3, 0.25);
  const SparseMatrix A = assemble_operator(g, [](double, double) { return 0.0; });
  EigenOptions options;
  options.center = 3.0;
  options.half_width = 2.5;
  options.inner = InnerSolver::kMinres;
  options.minres_max_iterations = 2;
  CHECK_THROWS_AS(eigen_window(A, options), SolverStagnation);
}

TEST_CASE("principal angles") {
  MatrixXd a(3, 1), b(3, 1);
  a << 1, 0, 0;
  b << 1, 1, 0;
  CHECK(principal_angles_deg(a, b)[0] == doctest::Approx(45.0));
  MatrixXd plane(3, 2);
  plane << 1, 0, 0, 1, 0, 0;
  MatrixXd skew(3, 2);
  skew << 2, 1, 1, 3, 0, 0;
  const auto same = principal_angles_deg(plane, skew);
  CHECK(same[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(same[1] < 1e-6);
  MatrixXd e3(3, 1);
  e3 << 0, 0, 5;
  CHECK(principal_angles_deg(plane, e3)[0] == doctest::Approx(90.0));
}

TEST_CASE("correlated selection stops once the angle is small") {
  std::vector<EigenPair> pairs(4);
  const int n = 4;
  for (int i = 0; i < 4; ++i) {
    pairs[i].vector = VectorXd::Unit(n, i);
    pairs[i].value = 1.0 + 0.01 * i;
  }
  MatrixXd psi(n, 2);
  psi.col(0) = VectorXd::Unit(n, 2) + 0.01 * VectorXd::Unit(n, 0);
  psi.col(1) = VectorXd::Unit(n, 3);
  const auto sel = select_correlated(pairs, psi, 5.0);
  CHECK(sel.indices == std::vector<int>{3, 2});
  CHECK(sel.angle_deg < 1.0);
  CHECK(sel.min_value == doctest::Approx(1.02));
  CHECK(sel.max_value == doctest::Approx(1.03));
}

TEST_CASE("residual check requires a matching certificate") {
  const GridSpec g(5, 0.1);
  CHECK_THROWS_AS(residual_check(package(), g, nullptr), CertificateMissing);
  const PositivityCertificate failed = certify(vnw::testing::printed_q(0), 0);
  CHECK_THROWS_AS(residual_check(package(), g, &failed), CertificateMissing);
  const PositivityCertificate other = certify(double_potential(builtin_omega1(), builtin_omega2(), -13).Q, -13);
  CHECK_THROWS_AS(residual_check(package(), g, &other), CertificateMissing);
  CHECK_NOTHROW(residual_check(package(), g, &certificate()));
}

TEST_CASE("discrete residual is second order, the free control is not") {
  const ResidualStudy study = residual_orders(package(), 20, {0.2, 0.1, 0.05}, &certificate());
  REQUIRE(study.order.size() == 2);
  for (double order : study.order) {
    CHECK(order >= 1.6);
    CHECK(order <= 2.4);
  }
  for (double r : study.residual) CHECK(std::isfinite(r));
  MESSAGE("residuals " << study.residual[0] << " " << study.residual[1] << " " << study.residual[2]);

  ResidualOptions control;
  control.free_potential = true;
  const ResidualStudy free = residual_orders(package(), 20, {0.2, 0.1, 0.05}, &certificate(), control);
  CHECK(free.residual.back() > 0.1);
  CHECK(free.residual.back() > 100 * study.residual.back());
  for (double order : free.order) CHECK(std::fabs(order) < 0.5);
}

TEST_CASE("small box spectrum and the free control") {
  const GridSpec g(10, 0.1);
  SpectrumOptions options;
  const SpectrumSummary s = spectrum(package(), g, &certificate(), options);
  CHECK(s.eigen.window_count >= 2);
  CHECK(s.correlated.indices.size() >= 2);
  for (const auto& p : s.eigen.pairs) CHECK(p.residual < 1e-6);

  options.free_potential = true;
  options.eigen.center = 1.0;
  options.eigen.half_width = 0.1;
  const SpectrumSummary free = spectrum(package(), g, &certificate(), options);
  CHECK(free.eigen.window_count >= 1);
  CHECK(free.window_angle_deg > 45.0);
  CHECK_FALSE(free.passed);
}

TEST_CASE("decay profile") {
  const PackageFields fields(package());
  const DecayStudy s = decay_study(fields, {50, 100, 200, 400});
  CHECK(s.factor_U <= 3.0);
  CHECK(s.factor_psi1 <= 3.0);
  CHECK(s.factor_psi2 <= 3.0);
  CHECK(strictly_increasing(s.U_next));
  CHECK(strictly_increasing(s.psi1_next));
  CHECK(strictly_increasing(s.psi2_next));
  // r^3 |psi1| grows roughly linearly.
  CHECK(s.psi1_next.back() / s.psi1_next.front() > 8.0 / 3.0);
  // r |U| stays away from zero.
  for (double v : s.U) CHECK(v > 1e-3);
  CHECK_THROWS_AS(decay_profile(fields.psi1_field(), 2, {5.0}), ParameterError);

  // Oracle: r^2 |cos t / r^2| = |cos t| with sup 1 at t = 0.
  const Field f = [](double x, double y) { return x / std::pow(x * x + y * y, 1.5); };
  CHECK(circle_sup(f, 30, 2) == doctest::Approx(1.0));
  CHECK(variation_factor({1.0, 2.0, 1.5}) == 2.0);
}

TEST_CASE("quadrature oracles") {
  // Integral of r^-2 over R <= r <= 2R is 2 pi ln 2.
  const Field inv_r = [](double x, double y) { return 1.0 / std::sqrt(x * x + y * y); };
  CHECK(annulus_mass(inv_r, 10, 20) == doctest::Approx(2 * std::numbers::pi * std::log(2.0)).epsilon(1e-12));
  // Oscillating integrand: integral of cos^2(x) over the annulus [0, R] is pi R^2 / 2 + (pi R/2) J1(2R).
  const Field c = [](double x, double) { return std::cos(x); };
  const double R = 7.0;
  CHECK(annulus_mass(c, 0.0, R) ==
        doctest::Approx(std::numbers::pi * R * R / 2 + std::numbers::pi * R / 2 * std::cyl_bessel_j(1.0, 2 * R))
            .epsilon(1e-10));
  const Field gauss = [](double x, double y) { return std::exp(-(x * x + y * y) / 2); };
  CHECK(square_inner(gauss, gauss, 10) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK_THROWS_AS(annulus_mass(c, 2, 1), ParameterError);
}

TEST_CASE("L2 tails and linear independence") {
  const PackageFields fields(package());
  const auto t1 = l2_tail(fields.psi1_field(), {25, 50, 100});
  const auto t2 = l2_tail(fields.psi2_field(), {25, 50, 100});
  for (std::size_t i = 0; i + 1 < t1.size(); ++i) {
    const double ratio1 = t1[i + 1] / t1[i];
    CHECK(ratio1 >= 1.0 / 8);
    CHECK(ratio1 <= 1.0 / 2);
    CHECK(t2[i + 1] / t2[i] <= ratio1);
  }

  const double m50 = square_inner(fields.psi1_field(), fields.psi1_field(), 50);
  const double m100 = square_inner(fields.psi1_field(), fields.psi1_field(), 100);
  CHECK(std::fabs(m100 - m50) / m100 < 0.05);

  const Eigen::Matrix2d G = gram_matrix(fields.psi1_field(), fields.psi2_field(), 50);
  CHECK(G(0, 1) == G(1, 0));
  const Eigen::Matrix2d N = normalized(G);
  CHECK(N(0, 0) == doctest::Approx(1.0));
  CHECK(N(1, 1) == doctest::Approx(1.0));
  CHECK(N.determinant() > 0.01);
  MESSAGE("normalized Gram " << N(0, 1) << " det " << N.determinant());
}

TEST_CASE("principal angles are symmetric and accurate for tiny angles") {
  MatrixXd a(4, 1), b(4, 1);
  a << 1, 0, 0, 0;
  b << 1, 1e-9, 0, 0;
  CHECK(principal_angles_deg(a, b)[0] == doctest::Approx(1e-9 * 180 / std::numbers::pi).epsilon(1e-6));
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  MatrixXd X(30, 5), Y(30, 2);
  for (auto& v : X.reshaped()) v = g(rng);
  for (auto& v : Y.reshaped()) v = g(rng);
  const auto xy = principal_angles_deg(X, Y);
  const auto yx = principal_angles_deg(Y, X);
  REQUIRE(xy.size() == 2);
  REQUIRE(yx.size() == 2);
  CHECK(xy[0] == doctest::Approx(yx[0]));
  CHECK(xy[1] == doctest::Approx(yx[1]));
  // Oracle: arccos of the singular values of the orthonormalized cross product.
  const MatrixXd QX = Eigen::HouseholderQR<MatrixXd>(X).householderQ() * MatrixXd::Identity(30, 5);
  const MatrixXd QY = Eigen::HouseholderQR<MatrixXd>(Y).householderQ() * MatrixXd::Identity(30, 2);
  const Eigen::JacobiSVD<MatrixXd> svd(QX.transpose() * QY);
  CHECK(xy[0] == doctest::Approx(std::acos(svd.singularValues()[0]) * 180 / std::numbers::pi).epsilon(1e-8));
  CHECK(xy[1] == doctest::Approx(std::acos(svd.singularValues()[1]) * 180 / std::numbers::pi).epsilon(1e-8));
}

TEST_CASE("psi1 and psi2 are orthogonal by the y -> -y symmetry") {
  // Q and w1 are even in y, w2 is odd, so psi1 psi2 integrates to zero on any square.
  const auto& pkg = package();
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    CHECK(pkg.Q.eval(x, -y) == doctest::Approx(pkg.Q.eval(x, y)).epsilon(1e-13));
    CHECK(pkg.psi1_num.eval(x, -y) == doctest::Approx(pkg.psi1_num.eval(x, y)).epsilon(1e-13));
    CHECK(pkg.psi2_num.eval(x, -y) == doctest::Approx(-pkg.psi2_num.eval(x, y)).epsilon(1e-13));
  }
  const PackageFields fields(pkg);
  const Eigen::Matrix2d N = normalized(gram_matrix(fields.psi1_field(), fields.psi2_field(), 20));
  CHECK(std::fabs(N(0, 1)) < 1e-12);
}
