#include "vnw/helmholtz.hpp"

#include <cmath>
#include <map>
#include <memory>

#include "vnw/errors.hpp"

namespace vnw {

namespace {

// Polynomial in (z, conj z): exponent pair (p, q) -> coefficient.
template <class S>
using ZPoly = std::map<std::pair<int, int>, S>;
// Laurent polynomial in lambda with ZPoly coefficients.
template <class S>
using Laurent = std::map<int, ZPoly<S>>;

struct GaussRational {
  Rational re = 0;
  Rational im = 0;
};

GaussRational operator*(const GaussRational& a, const GaussRational& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
GaussRational& operator+=(GaussRational& a, const GaussRational& b) {
  a.re += b.re;
  a.im += b.im;
  return a;
}

template <class S>
void add_into(ZPoly<S>& into, const std::pair<int, int>& key, const S& value) {
  auto [it, inserted] = into.try_emplace(key, value);
  if (!inserted) it->second += value;
}

// One step of g_{j+1} = dg/dlambda + g * c * (z - conj(z) lambda^-2).
template <class S>
Laurent<S> recurrence_step(const Laurent<S>& g, const S& c, const S& minus_c,
                           S (*scale)(const S&, int)) {
  Laurent<S> next;
  for (const auto& [power, poly] : g) {
    for (const auto& [key, coeff] : poly) {
      if (power != 0) add_into(next[power - 1], key, scale(coeff, power));
      add_into(next[power], {key.first + 1, key.second}, coeff * c);
      add_into(next[power - 2], {key.first, key.second + 1}, coeff * minus_c);
    }
  }
  return next;
}

std::complex<double> scale_complex(const std::complex<double>& v, int s) {
  return v * static_cast<double>(s);
}
GaussRational scale_gauss(const GaussRational& v, int s) { return {v.re * s, v.im * s}; }

template <class S>
Laurent<S> lambda_derivative_factor(int m, const S& c, const S& minus_c,
                                    S (*scale)(const S&, int), const S& one) {
  Laurent<S> g;
  g[0][{0, 0}] = one;
  for (int j = 0; j < m; ++j) g = recurrence_step(g, c, minus_c, scale);
  return g;
}

void check_m(int m, const FamilyOptions& options) {
  if (m < 0 || m > options.max_m) {
    throw ParameterError("lambda-derivative order m=" + std::to_string(m) +
                         " outside [0, " + std::to_string(options.max_m) + "]");
  }
}

// Index q with lambda = i^q, or -1 if lambda is not a fourth root of unity.
int quarter_turns(std::complex<double> lambda) {
  if (lambda == std::complex<double>(1, 0)) return 0;
  if (lambda == std::complex<double>(0, 1)) return 1;
  if (lambda == std::complex<double>(-1, 0)) return 2;
  if (lambda == std::complex<double>(0, -1)) return 3;
  return -1;
}

struct ComplexRing {
  RingElement re;
  RingElement im;
};

ComplexRing operator*(const ComplexRing& a, const ComplexRing& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

struct FamilyOracle {
  ZPoly<std::complex<double>> g;
  std::complex<double> a;  // coefficient of z in the exponent
  std::complex<double> b;  // coefficient of conj(z) in the exponent
  Part part;
  int max_p = 0;
  int max_q = 0;

  Jet operator()(double x, double y) const {
    using C = std::complex<double>;
    const C z(x, y);
    const C zb(x, -y);
    std::vector<C> zp(max_p + 1, C(1.0));
    std::vector<C> zbp(max_q + 1, C(1.0));
    for (int i = 1; i <= max_p; ++i) zp[i] = zp[i - 1] * z;
    for (int i = 1; i <= max_q; ++i) zbp[i] = zbp[i - 1] * zb;

    C g0, gz, gzb, gzz, gzzb, gzbzb;
    for (const auto& [key, c] : g) {
      const auto [p, q] = key;
      g0 += c * zp[p] * zbp[q];
      if (p >= 1) gz += c * static_cast<double>(p) * zp[p - 1] * zbp[q];
      if (q >= 1) gzb += c * static_cast<double>(q) * zp[p] * zbp[q - 1];
      if (p >= 2) gzz += c * static_cast<double>(p * (p - 1)) * zp[p - 2] * zbp[q];
      if (q >= 2) gzbzb += c * static_cast<double>(q * (q - 1)) * zp[p] * zbp[q - 2];
      if (p >= 1 && q >= 1) gzzb += c * static_cast<double>(p * q) * zp[p - 1] * zbp[q - 1];
    }
    const C e = std::exp(a * z + b * zb);
    const C f = g0 * e;
    const C fz = (gz + a * g0) * e;
    const C fzb = (gzb + b * g0) * e;
    const C fzz = (gzz + 2.0 * a * gz + a * a * g0) * e;
    const C fzbzb = (gzbzb + 2.0 * b * gzb + b * b * g0) * e;
    const C fzzb = (gzzb + a * gzb + b * gz + a * b * g0) * e;
    const C i(0.0, 1.0);

    const C fx = fz + fzb;
    const C fy = i * (fz - fzb);
    const C fxx = fzz + 2.0 * fzzb + fzbzb;
    const C fyy = -fzz + 2.0 * fzzb - fzbzb;
    const C fxy = i * (fzz - fzbzb);
    auto take = [this](const C& v) { return part == Part::kReal ? v.real() : v.imag(); };
    return {take(f), take(fx), take(fy), take(fxx), take(fxy), take(fyy)};
  }
};

struct RingOracle {
  CompiledElement v, dx, dy, dxx, dxy, dyy;

  explicit RingOracle(const RingElement& e)
      : v(e),
        dx(diff_x(e)),
        dy(diff_y(e)),
        dxx(diff_x(diff_x(e))),
        dxy(diff_x(diff_y(e))),
        dyy(diff_y(diff_y(e))) {}

  Jet operator()(double x, double y) const {
    return {v(x, y), dx(x, y), dy(x, y), dxx(x, y), dxy(x, y), dyy(x, y)};
  }
};

}  // namespace

NumericSolution::NumericSolution(Oracle oracle, double k, std::vector<WeightedParams> provenance)
    : oracle_(std::move(oracle)), k_(k), provenance_(std::move(provenance)) {
  if (!(k_ > 0.0)) throw ParameterError("wavenumber must be positive");
}

NumericSolution NumericSolution::from_ring(const RingElement& element, double k) {
  auto oracle = std::make_shared<const RingOracle>(element);
  return NumericSolution([oracle](double x, double y) { return (*oracle)(x, y); }, k);
}

Jet NumericSolution::evaluate_checked(double x, double y) const {
  const Jet j = oracle_(x, y);
  const double k2 = k_ * k_;
  const double residual = std::fabs(j.dxx + j.dyy + k2 * j.value);
  const double scale = std::max(1.0, std::fabs(j.dxx) + std::fabs(j.dyy) + k2 * std::fabs(j.value));
  if (residual > 1e-10 * scale) {
    throw HelmholtzViolation("Helmholtz self-check failed at (" + std::to_string(x) + ", " +
                             std::to_string(y) + "): residual " + std::to_string(residual));
  }
  return j;
}

RingElement builtin_omega1() {
  using R = RingElement;
  return R::term(1, 2, 0, {}, Trig::cos(1)) - R::term(1, 0, 1, {}, Trig::sin(1)) +
         R::term(1, 0, 2, Trig::sin(1)) + R::term(1, 1, 0, Trig::cos(1));
}

RingElement builtin_omega2() {
  using R = RingElement;
  return R::term(4, 0, 1, Trig::cos(1)) + R::term(4, 1, 0, {}, Trig::sin(1));
}

RingElement family_exact(std::complex<double> lambda, int m, Part part,
                         const FamilyOptions& options) {
  check_m(m, options);
  const int q = quarter_turns(lambda);
  if (q < 0) {
    throw ParameterError("exact family members require lambda in {1, i, -1, -i}");
  }
  // c = i k / 2 with k = 1.
  const GaussRational c{0, Rational(1, 2)};
  const GaussRational minus_c{0, Rational(-1, 2)};
  const auto g = lambda_derivative_factor<GaussRational>(m, c, minus_c, &scale_gauss,
                                                         GaussRational{1, 0});

  // Evaluate at lambda = i^q: lambda^p = i^(p q mod 4).
  ZPoly<GaussRational> at_lambda;
  for (const auto& [power, poly] : g) {
    const int turns = (((power * q) % 4) + 4) % 4;
    GaussRational unit{1, 0};
    for (int t = 0; t < turns; ++t) unit = unit * GaussRational{0, 1};
    for (const auto& [key, coeff] : poly) add_into(at_lambda, key, coeff * unit);
  }

  const ComplexRing z{RingElement::x(), RingElement::y()};
  const ComplexRing zb{RingElement::x(), -RingElement::y()};
  ComplexRing poly{RingElement(), RingElement()};
  for (const auto& [key, coeff] : at_lambda) {
    if (coeff.re == 0 && coeff.im == 0) continue;
    ComplexRing mono{RingElement::constant(coeff.re), RingElement::constant(coeff.im)};
    for (int i = 0; i < key.first; ++i) mono = mono * z;
    for (int i = 0; i < key.second; ++i) mono = mono * zb;
    poly.re += mono.re;
    poly.im += mono.im;
  }

  // exp(i/2 (lambda z + conj(z)/lambda)) for the four admissible lambdas.
  ComplexRing wave;
  switch (q) {
    case 0: wave = {RingElement::cos_x(), RingElement::sin_x()}; break;
    case 1: wave = {RingElement::cos_y(), -RingElement::sin_y()}; break;
    case 2: wave = {RingElement::cos_x(), -RingElement::sin_x()}; break;
    default: wave = {RingElement::cos_y(), RingElement::sin_y()}; break;
  }
  const ComplexRing full = poly * wave;
  return part == Part::kReal ? full.re : full.im;
}

NumericSolution family_numeric(const FamilyParams& params, const FamilyOptions& options) {
  check_m(params.m, options);
  if (!(params.k > 0.0)) throw ParameterError("wavenumber must be positive");
  const double modulus = std::abs(params.lambda);
  if (modulus == 0.0) throw ParameterError("lambda must be nonzero");
  if (!options.allow_off_circle && std::fabs(modulus - 1.0) > 1e-12) {
    throw ParameterError("|lambda| must be 1 unless off-circle members are explicitly allowed");
  }
  using C = std::complex<double>;
  const C c(0.0, params.k / 2.0);
  const auto g = lambda_derivative_factor<C>(params.m, c, -c, &scale_complex, C(1.0));

  FamilyOracle oracle;
  for (const auto& [power, poly] : g) {
    const C unit = std::pow(params.lambda, power);
    for (const auto& [key, coeff] : poly) add_into(oracle.g, key, coeff * unit);
  }
  for (const auto& [key, coeff] : oracle.g) {
    oracle.max_p = std::max(oracle.max_p, key.first);
    oracle.max_q = std::max(oracle.max_q, key.second);
  }
  oracle.a = c * params.lambda;
  oracle.b = c / params.lambda;
  oracle.part = params.part;
  return NumericSolution(std::move(oracle), params.k, {{params, 1.0}});
}

RingElement linear_combination(std::span<const Rational> weights,
                               std::span<const RingElement> solutions) {
  if (weights.size() != solutions.size()) {
    throw ParameterError("weights and solutions differ in length");
  }
  RingElement sum;
  for (std::size_t i = 0; i < weights.size(); ++i) sum += weights[i] * solutions[i];
  return sum;
}

NumericSolution linear_combination(std::span<const double> weights,
                                   std::span<const NumericSolution> solutions) {
  if (weights.size() != solutions.size() || solutions.empty()) {
    throw ParameterError("weights and solutions must be nonempty and of equal length");
  }
  const double k = solutions.front().k();
  std::vector<WeightedParams> provenance;
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    if (std::fabs(solutions[i].k() - k) > 1e-12 * k) {
      throw IncompatibleWavenumber("cannot combine solutions with k=" + std::to_string(k) +
                                   " and k=" + std::to_string(solutions[i].k()));
    }
    for (auto wp : solutions[i].provenance()) {
      wp.weight *= weights[i];
      provenance.push_back(wp);
    }
  }
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<NumericSolution> s(solutions.begin(), solutions.end());
  auto oracle = [w = std::move(w), s = std::move(s)](double x, double y) {
    Jet sum;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Jet j = s[i](x, y);
      sum.value += w[i] * j.value;
      sum.dx += w[i] * j.dx;
      sum.dy += w[i] * j.dy;
      sum.dxx += w[i] * j.dxx;
      sum.dxy += w[i] * j.dxy;
      sum.dyy += w[i] * j.dyy;
    }
    return sum;
  };
  return NumericSolution(std::move(oracle), k, std::move(provenance));
}

RingElement combine_family(std::span<const ExactFamilyTerm> terms, const FamilyOptions& options) {
  RingElement sum;
  for (const auto& t : terms) sum += t.weight * family_exact(t.lambda, t.m, t.part, options);
  return sum;
}

std::vector<ExactFamilyTerm> omega1_family_representation() {
  const std::complex<double> one(1, 0);
  const std::complex<double> i(0, 1);
  return {{one, 2, Part::kImag, 1},
          {i, 2, Part::kReal, -1},
          {one, 1, Part::kImag, 1},
          {i, 1, Part::kImag, -1}};
}

std::vector<ExactFamilyTerm> omega2_family_representation() {
  const std::complex<double> one(1, 0);
  const std::complex<double> i(0, 1);
  return {{one, 1, Part::kReal, -4}, {i, 1, Part::kReal, 4}};
}

ExactHelmholtzReport verify_helmholtz(const RingElement& w, const Rational& k_squared) {
  ExactHelmholtzReport report;
  report.residual = laplacian(w) + k_squared * w;
  report.satisfied = report.residual.is_zero();
  return report;
}

NumericHelmholtzReport verify_helmholtz(const NumericSolution& w, double k, const SampleBox& box) {
  if (box.points_per_side < 2) throw ParameterError("sample grid needs at least 2 points per side");
  NumericHelmholtzReport report;
  const int n = box.points_per_side;
  for (int i = 0; i < n; ++i) {
    const double x = box.xmin + (box.xmax - box.xmin) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double y = box.ymin + (box.ymax - box.ymin) * j / (n - 1);
      const Jet jet = w(x, y);
      const double r = std::fabs(jet.laplacian() + k * k * jet.value);
      if (r > report.sup_residual) {
        report.sup_residual = r;
        report.worst_point = {x, y};
      }
    }
  }
  return report;
}

}  // namespace vnw
