#pragma once

// Solutions of the Helmholtz equation  -Laplace(w) = k^2 w.
//
// The plane-wave family is generated from
//     F(lambda) = exp(i k/2 (lambda z + conj(z)/lambda)),   z = x + i y,
// by taking m lambda-derivatives: d^m F / d lambda^m = g_m F with
//     g_0 = 1,   g_{j+1} = d g_j / d lambda + g_j (i k/2)(z - conj(z)/lambda^2).
// For lambda in {1, i, -1, -i} and k = 1 the real and imaginary parts lie in
// the exact trig ring.

#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "vnw/trigring.hpp"

namespace vnw {

/// Value and partial derivatives up to order two at one point.
struct Jet {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;

  double laplacian() const { return dxx + dyy; }
};

enum class Part { kReal, kImag };

struct FamilyParams {
  double k = 1.0;
  std::complex<double> lambda{1.0, 0.0};
  int m = 0;
  Part part = Part::kReal;
};

struct FamilyOptions {
  int max_m = 8;
  /// Allows |lambda| != 1. Such members grow exponentially in some direction.
  bool allow_off_circle = false;
};

struct WeightedParams {
  FamilyParams params;
  double weight = 1.0;
};

/// A Helmholtz solution given by an evaluation oracle.
class NumericSolution {
 public:
  using Oracle = std::function<Jet(double, double)>;

  NumericSolution(Oracle oracle, double k, std::vector<WeightedParams> provenance = {});

  /// Wraps an exact ring element; derivatives are taken symbolically.
  static NumericSolution from_ring(const RingElement& element, double k = 1.0);

  Jet operator()(double x, double y) const { return oracle_(x, y); }
  /// Evaluates and throws HelmholtzViolation when
  /// |dxx + dyy + k^2 value| > 1e-10 * max(1, |dxx| + |dyy| + k^2 |value|).
  Jet evaluate_checked(double x, double y) const;

  double k() const { return k_; }
  const std::vector<WeightedParams>& provenance() const { return provenance_; }

 private:
  Oracle oracle_;
  double k_;
  std::vector<WeightedParams> provenance_;
};

/// x^2 cos y - y sin y + y^2 sin x + x cos x
RingElement builtin_omega1();
/// 4 (y cos x + x sin y)
RingElement builtin_omega2();

/// part[d^m/dlambda^m F] at k = 1 and lambda in {1, i, -1, -i}.
/// Throws ParameterError for any other lambda or m outside [0, max_m].
RingElement family_exact(std::complex<double> lambda, int m, Part part,
                         const FamilyOptions& options = {});

NumericSolution family_numeric(const FamilyParams& params, const FamilyOptions& options = {});

RingElement linear_combination(std::span<const Rational> weights,
                               std::span<const RingElement> solutions);
/// Throws IncompatibleWavenumber unless all solutions share the same k.
NumericSolution linear_combination(std::span<const double> weights,
                                   std::span<const NumericSolution> solutions);

/// A family member expressed with a weight; used to document representations
/// of the built-in solutions.
struct ExactFamilyTerm {
  std::complex<double> lambda;
  int m;
  Part part;
  Rational weight;
};

RingElement combine_family(std::span<const ExactFamilyTerm> terms,
                           const FamilyOptions& options = {});
/// A family representation of builtin_omega1 found by inspection.
std::vector<ExactFamilyTerm> omega1_family_representation();
/// A family representation of builtin_omega2 found by inspection.
std::vector<ExactFamilyTerm> omega2_family_representation();

struct ExactHelmholtzReport {
  bool satisfied = false;
  RingElement residual;  // Laplace(w) + k^2 w
};

struct SampleBox {
  double xmin = -10.0;
  double xmax = 10.0;
  double ymin = -10.0;
  double ymax = 10.0;
  int points_per_side = 41;
};

struct NumericHelmholtzReport {
  double sup_residual = 0.0;
  std::pair<double, double> worst_point{0.0, 0.0};
};

ExactHelmholtzReport verify_helmholtz(const RingElement& w, const Rational& k_squared = 1);
NumericHelmholtzReport verify_helmholtz(const NumericSolution& w, double k,
                                        const SampleBox& box = {});

}  // namespace vnw
