#include "vnw/moutard.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include "vnw/errors.hpp"

namespace vnw {

namespace {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  const auto& nodes = gauss_kronrod<double, 15>::abscissa();
  const auto& kw = gauss_kronrod<double, 15>::weights();
  const auto& gw = gauss<double, 7>::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  const double f0 = f(mid);
  double kronrod = kw[0] * f0;
  double gauss_sum = gw[0] * f0;
  double abs_sum = kw[0] * std::fabs(f0);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double fl = f(mid - half * nodes[i]);
    const double fr = f(mid + half * nodes[i]);
    kronrod += kw[i] * (fl + fr);
    abs_sum += kw[i] * (std::fabs(fl) + std::fabs(fr));
    // Gauss nodes are the even-indexed Kronrod nodes.
    if (i % 2 == 0) gauss_sum += gw[i / 2] * (fl + fr);
  }
  double error = std::fabs((kronrod - gauss_sum) * half);
  // Differences at the rounding level of the panel cannot be reduced by splitting.
  if (error <= 50.0 * std::numeric_limits<double>::epsilon() * abs_sum * std::fabs(half)) {
    error = 0.0;
  }
  return {a, b, kronrod * half, error};
}

QuadratureResult adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& options) {
  if (a == b) return {};
  std::priority_queue<Panel> panels;
  panels.push(gk15(f, a, b));
  double total_error = panels.top().error;
  int count = 1;
  while (total_error > options.abs_tol && count < options.max_intervals) {
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }
  QuadratureResult result;
  // Sum in a fixed order so the value does not depend on heap layout.
  std::vector<Panel> all;
  all.reserve(panels.size());
  while (!panels.empty()) {
    all.push_back(panels.top());
    panels.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  for (const auto& p : all) {
    result.value += p.value;
    result.error += p.error;
  }
  if (result.error > options.abs_tol) {
    std::ostringstream os;
    os << "adaptive quadrature on [" << a << ", " << b << "] reached error " << result.error
       << " > " << options.abs_tol << " after " << count << " panels";
    throw QuadratureError(os.str());
  }
  return result;
}

// Components of the closed one-form dQ.
double form_x(const NumericSolution& omega, const NumericSolution& phi, double x, double y) {
  const Jet w = omega(x, y);
  const Jet p = phi(x, y);
  return -(w.value * p.dy - p.value * w.dy);
}

double form_y(const NumericSolution& omega, const NumericSolution& phi, double x, double y) {
  const Jet w = omega(x, y);
  const Jet p = phi(x, y);
  return w.value * p.dx - p.value * w.dx;
}

QuadratureResult integrate_horizontal(const NumericSolution& omega, const NumericSolution& phi,
                                      double x0, double x1, double y,
                                      const QuadratureOptions& options) {
  return adaptive_integrate([&](double s) { return form_x(omega, phi, s, y); }, x0, x1, options);
}

QuadratureResult integrate_vertical(const NumericSolution& omega, const NumericSolution& phi,
                                    double x, double y0, double y1,
                                    const QuadratureOptions& options) {
  return adaptive_integrate([&](double t) { return form_y(omega, phi, x, t); }, y0, y1, options);
}

double relative_closedness(const Jet& w, const Jet& p) {
  const double r = w.value * p.laplacian() - p.value * w.laplacian();
  const double scale =
      std::max(1.0, std::fabs(w.value * p.laplacian()) + std::fabs(p.value * w.laplacian()));
  return std::fabs(r) / scale;
}

void require_closed_on_box(const NumericSolution& omega, const NumericSolution& phi, double x0,
                           double y0, double x1, double y1, const QuadratureOptions& options) {
  const int n = std::max(2, options.closedness_samples);
  for (int i = 0; i < n; ++i) {
    const double x = x0 + (x1 - x0) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double y = y0 + (y1 - y0) * j / (n - 1);
      const double r = relative_closedness(omega(x, y), phi(x, y));
      if (r > options.closedness_tol) {
        std::ostringstream os;
        os << "theta one-form is not closed: relative residual " << r << " at (" << x << ", "
           << y << ")";
        throw ConsistencyError(os.str());
      }
    }
  }
}

}  // namespace

RingElement closedness_residual(const RingElement& omega, const RingElement& phi) {
  return omega * laplacian(phi) - phi * laplacian(omega);
}

double closedness_residual(const NumericSolution& omega, const NumericSolution& phi,
                           const SampleBox& box) {
  if (box.points_per_side < 2) throw ParameterError("sample grid needs at least 2 points per side");
  double sup = 0.0;
  const int n = box.points_per_side;
  for (int i = 0; i < n; ++i) {
    const double x = box.xmin + (box.xmax - box.xmin) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double y = box.ymin + (box.ymax - box.ymin) * j / (n - 1);
      const Jet w = omega(x, y);
      const Jet p = phi(x, y);
      sup = std::max(sup, std::fabs(w.value * p.laplacian() - p.value * w.laplacian()));
    }
  }
  return sup;
}

ThetaSolution theta_exact(const RingElement& omega, const RingElement& phi,
                          const Rational& kappa) {
  const RingElement residual = closedness_residual(omega, phi);
  if (!residual.is_zero()) {
    throw ConsistencyError("theta system is not integrable: w Laplace(phi) - phi Laplace(w) = " +
                           residual.to_string());
  }
  const RingElement qx = -(omega * diff_y(phi) - phi * diff_y(omega));
  const RingElement qy = omega * diff_x(phi) - phi * diff_x(omega);
  // Along y = 0 from the origin, then vertically at fixed x.
  RingElement Q = RingElement::constant(kappa) + integrate_x(qx.at_y0()) + integrate_y(qy);
  return {std::move(Q), omega, phi, kappa};
}

Rational kappa_from_C(const Rational& C) { return 4 * C + 1; }

ThetaNumericResult theta_numeric_detail(const NumericSolution& omega, const NumericSolution& phi,
                                        double kappa, double x, double y,
                                        const QuadratureOptions& options) {
  require_closed_on_box(omega, phi, std::min(0.0, x), std::min(0.0, y), std::max(0.0, x),
                        std::max(0.0, y), options);
  const auto h1 = integrate_horizontal(omega, phi, 0.0, x, 0.0, options);
  const auto v1 = integrate_vertical(omega, phi, x, 0.0, y, options);
  const auto v2 = integrate_vertical(omega, phi, 0.0, 0.0, y, options);
  const auto h2 = integrate_horizontal(omega, phi, 0.0, x, y, options);

  ThetaNumericResult result;
  result.Q = kappa + h1.value + v1.value;
  result.Q_alternate = kappa + v2.value + h2.value;
  result.error_estimate = h1.error + v1.error;
  const double gap = std::fabs(result.Q - result.Q_alternate);
  if (gap > options.path_tol) {
    std::ostringstream os;
    os << "theta integral depends on the path at (" << x << ", " << y << "): difference " << gap;
    throw PathDependenceError(os.str());
  }
  return result;
}

double theta_numeric(const NumericSolution& omega, const NumericSolution& phi, double kappa,
                     double x, double y, const QuadratureOptions& options) {
  return theta_numeric_detail(omega, phi, kappa, x, y, options).Q;
}

double loop_integral(const NumericSolution& omega, const NumericSolution& phi, double x0,
                     double y0, double x1, double y1, const QuadratureOptions& options) {
  const double bottom = integrate_horizontal(omega, phi, x0, x1, y0, options).value;
  const double right = integrate_vertical(omega, phi, x1, y0, y1, options).value;
  const double top = integrate_horizontal(omega, phi, x0, x1, y1, options).value;
  const double left = integrate_vertical(omega, phi, x0, y0, y1, options).value;
  return bottom + right - top - left;
}

RationalField single_moutard_potential(const Rational& U, const RingElement& omega) {
  const RingElement wx = diff_x(omega);
  const RingElement wy = diff_y(omega);
  const RingElement w2 = omega * omega;
  RingElement num = U * w2 - 2 * (omega * laplacian(omega) - wx * wx - wy * wy);
  return RationalField(std::move(num), w2);
}

RingElement p_from_q(const RingElement& Q) {
  const RingElement qx = diff_x(Q);
  const RingElement qy = diff_y(Q);
  return Rational(-2) * (Q * laplacian(Q) - qx * qx - qy * qy);
}

PotentialPackage double_potential(const RingElement& omega1, const RingElement& omega2,
                                  const Rational& C) {
  ThetaSolution theta = theta_exact(omega1, omega2, kappa_from_C(C));
  PotentialPackage pkg;
  pkg.P = p_from_q(theta.Q);
  pkg.Q = std::move(theta.Q);
  pkg.C = C;
  pkg.background = -1;
  pkg.energy = 1;
  pkg.k = 1.0;
  pkg.psi1_num = omega1;
  pkg.psi2_num = omega2;
  return pkg;
}

RingElement eigen_identity_residual(const RingElement& omega, const RingElement& Q,
                                    const RingElement& P, const Rational& energy) {
  const RingElement wx = diff_x(omega);
  const RingElement wy = diff_y(omega);
  const RingElement qx = diff_x(Q);
  const RingElement qy = diff_y(Q);
  const RingElement q2 = Q * Q;
  // Q^3 Laplace(w/Q)
  const RingElement q3_lap = laplacian(omega) * q2 - 2 * (wx * qx + wy * qy) * Q -
                             omega * laplacian(Q) * Q + 2 * omega * (qx * qx + qy * qy);
  return -q3_lap + P * omega - energy * (omega * q2);
}

EigenIdentityVerdict verify_eigen_identity(const PotentialPackage& pkg) {
  return {eigen_identity_residual(pkg.psi1_num, pkg.Q, pkg.P, pkg.energy).is_zero(),
          eigen_identity_residual(pkg.psi2_num, pkg.Q, pkg.P, pkg.energy).is_zero()};
}

std::vector<IdentityCheck> verify_package(const PotentialPackage& pkg) {
  const RingElement& w1 = pkg.psi1_num;
  const RingElement& w2 = pkg.psi2_num;
  std::vector<IdentityCheck> checks;
  checks.push_back({"helmholtz(omega1)", verify_helmholtz(w1, pkg.energy).satisfied});
  checks.push_back({"helmholtz(omega2)", verify_helmholtz(w2, pkg.energy).satisfied});
  checks.push_back({"closedness(omega1, omega2)", closedness_residual(w1, w2).is_zero()});
  checks.push_back({"closedness antisymmetry",
                    (closedness_residual(w1, w2) + closedness_residual(w2, w1)).is_zero()});
  checks.push_back({"theta system d/dx",
                    (diff_x(pkg.Q) + (w1 * diff_y(w2) - w2 * diff_y(w1))).is_zero()});
  checks.push_back({"theta system d/dy",
                    (diff_y(pkg.Q) - (w1 * diff_x(w2) - w2 * diff_x(w1))).is_zero()});
  checks.push_back({"Q(0,0) = 4C+1",
                    pkg.Q.at_y0().at_x0() == RingElement::constant(kappa_from_C(pkg.C))});
  checks.push_back({"P = -2(Q Laplace Q - |grad Q|^2)", pkg.P == p_from_q(pkg.Q)});
  const auto eigen = verify_eigen_identity(pkg);
  checks.push_back({"eigen-identity psi1", eigen.psi1});
  checks.push_back({"eigen-identity psi2", eigen.psi2});
  return checks;
}

}  // namespace vnw
