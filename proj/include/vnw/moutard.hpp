#pragma once

// Moutard transformations of -Laplace + U with U = -k^2.
//
// Given zero modes w, phi of the background operator, Q = w * theta solves
//     Q_x = -(w phi_y - phi w_y),   Q_y = w phi_x - phi w_x,
// which is integrable exactly when w Laplace(phi) - phi Laplace(w) = 0.
// The doubly transformed potential is  U_hat = -2 Laplace(log Q) = P / Q^2  with
//     P = -2 (Q Laplace(Q) - Q_x^2 - Q_y^2),
// and w/Q, phi/Q solve (-Laplace + U_hat) psi = k^2 psi.

#include <optional>

#include "vnw/helmholtz.hpp"
#include "vnw/trigring.hpp"

namespace vnw {

struct ThetaSolution {
  RingElement Q;  // w * theta
  RingElement omega;
  RingElement phi;
  Rational kappa;  // Q(0, 0)

  /// theta = Q / w
  RationalField theta() const { return RationalField(Q, omega); }
};

/// The potential U_hat = P / Q^2 with its two eigenfunction numerators.
struct PotentialPackage {
  RingElement Q;
  RingElement P;
  Rational background = -1;  // U = -k^2
  Rational C = 0;
  Rational energy = 1;  // E = k^2
  double k = 1.0;
  RingElement psi1_num;  // psi1 = psi1_num / Q
  RingElement psi2_num;  // psi2 = psi2_num / Q

  RationalField potential() const { return RationalField(P, Q * Q); }
  RationalField psi1() const { return RationalField(psi1_num, Q); }
  RationalField psi2() const { return RationalField(psi2_num, Q); }
};

/// w Laplace(phi) - phi Laplace(w)
RingElement closedness_residual(const RingElement& omega, const RingElement& phi);
/// Sup of |w Laplace(phi) - phi Laplace(w)| on a sample grid.
double closedness_residual(const NumericSolution& omega, const NumericSolution& phi,
                           const SampleBox& box);

/// Integrates the theta system along y = 0 and then in y, with Q(0, 0) = kappa.
/// Throws ConsistencyError when the one-form is not closed.
ThetaSolution theta_exact(const RingElement& omega, const RingElement& phi, const Rational& kappa);

/// kappa = 4C + 1, reproducing the constant term of the explicit example.
Rational kappa_from_C(const Rational& C);

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double path_tol = 1e-8;
  /// Relative closedness bound checked on the bounding box before integrating.
  double closedness_tol = 1e-10;
  int closedness_samples = 6;
  int max_intervals = 4000;
};

struct ThetaNumericResult {
  double Q = 0.0;  // via (0,0) -> (x,0) -> (x,y)
  double Q_alternate = 0.0;  // via (0,0) -> (0,y) -> (x,y)
  double error_estimate = 0.0;
};

/// Q at a point by adaptive Gauss-Kronrod along the axis-aligned hook through
/// the origin, cross-checked against the other hook.
/// Throws ConsistencyError, QuadratureError or PathDependenceError.
ThetaNumericResult theta_numeric_detail(const NumericSolution& omega, const NumericSolution& phi,
                                        double kappa, double x, double y,
                                        const QuadratureOptions& options = {});
double theta_numeric(const NumericSolution& omega, const NumericSolution& phi, double kappa,
                     double x, double y, const QuadratureOptions& options = {});

/// Integral of the theta one-form counterclockwise around [x0,x1] x [y0,y1].
double loop_integral(const NumericSolution& omega, const NumericSolution& phi, double x0,
                     double y0, double x1, double y1, const QuadratureOptions& options = {});

/// U - 2 (w Laplace(w) - w_x^2 - w_y^2) / w^2 as an exact quotient.
RationalField single_moutard_potential(const Rational& U, const RingElement& omega);

/// -2 (Q Laplace(Q) - Q_x^2 - Q_y^2)
RingElement p_from_q(const RingElement& Q);

PotentialPackage double_potential(const RingElement& omega1, const RingElement& omega2,
                                  const Rational& C);

/// Denominator-cleared form of (-Laplace + P/Q^2)(w/Q) - E w/Q, multiplied by Q^3.
RingElement eigen_identity_residual(const RingElement& omega, const RingElement& Q,
                                    const RingElement& P, const Rational& energy);

struct EigenIdentityVerdict {
  bool psi1 = false;
  bool psi2 = false;
  bool both() const { return psi1 && psi2; }
};

EigenIdentityVerdict verify_eigen_identity(const PotentialPackage& pkg);

/// One exact identity with its verdict, for reporting.
struct IdentityCheck {
  std::string name;
  bool passed = false;
};

/// Helmholtz checks for both numerators, the theta system for Q, closedness,
/// the P formula and both eigen-identities.
std::vector<IdentityCheck> verify_package(const PotentialPackage& pkg);

}  // namespace vnw
