#pragma once

// Exact arithmetic in the differential ring Q[x, y] (x) trig(Zx) (x) trig(Zy).
//
// An element is a finite sum of terms  c * x^a * y^b * T(n x) * S(m y)  with
// T, S in {1, sin, cos}, integer frequencies n, m >= 1 and rational c.  The
// basis is linearly independent over R, so an element is zero exactly when
// its normalized term list is empty.

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace vnw {

using Rational = mpq_class;

/// Parses "p/q", an integer, or a plain decimal such as "-0.25" exactly.
Rational parse_rational(const std::string& text);
/// Canonical "p/q" rendering (denominator always present).
std::string rational_to_string(const Rational& r);

enum class TrigKind : int { kNone = 0, kSin = 1, kCos = 2 };

/// A trigonometric factor T(freq * t). kNone is stored with freq 0.
struct Trig {
  int freq = 0;
  TrigKind kind = TrigKind::kNone;

  static Trig none() { return {}; }
  static Trig sin(int n) { return {n, TrigKind::kSin}; }
  static Trig cos(int n) { return {n, TrigKind::kCos}; }

  double eval(double t) const;
  auto operator<=>(const Trig&) const = default;
};

/// Term key. Ordered lexicographically on (xdeg, ydeg, xfreq, xkind, yfreq, ykind).
struct Monomial {
  int xdeg = 0;
  int ydeg = 0;
  Trig xtrig;
  Trig ytrig;

  int total_degree() const { return xdeg + ydeg; }
  auto operator<=>(const Monomial&) const = default;
};

struct Term {
  Rational coeff;
  Monomial mono;
};

class RingElement {
 public:
  RingElement() = default;

  static RingElement constant(const Rational& c);
  static RingElement term(const Rational& c, int xdeg, int ydeg, Trig xtrig = {},
                          Trig ytrig = {});
  static RingElement x() { return term(1, 1, 0); }
  static RingElement y() { return term(1, 0, 1); }
  static RingElement sin_x(int n = 1) { return term(1, 0, 0, Trig::sin(n)); }
  static RingElement cos_x(int n = 1) { return term(1, 0, 0, Trig::cos(n)); }
  static RingElement sin_y(int n = 1) { return term(1, 0, 0, {}, Trig::sin(n)); }
  static RingElement cos_y(int n = 1) { return term(1, 0, 0, {}, Trig::cos(n)); }

  /// Normalizes an arbitrary term list: canonical trig form, like terms merged,
  /// zero coefficients dropped.
  static RingElement from_terms(std::vector<Term> terms);

  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Term-by-term floating evaluation.
  double eval(double x, double y) const;

  /// Coefficient of a monomial (zero when absent).
  Rational coefficient(const Monomial& m) const;
  /// Largest xdeg + ydeg over all terms; -1 for the zero element.
  int max_total_degree() const;
  /// Terms whose polynomial total degree equals `degree`.
  RingElement homogeneous_part(int degree) const;
  /// Substitutes y = 0 (resp. x = 0).
  RingElement at_y0() const;
  RingElement at_x0() const;

  std::string to_string() const;

  RingElement operator-() const;
  RingElement& operator+=(const RingElement& other);
  RingElement& operator-=(const RingElement& other);
  RingElement& operator*=(const RingElement& other);
  RingElement& operator*=(const Rational& s);

  friend RingElement operator+(RingElement a, const RingElement& b) { return a += b; }
  friend RingElement operator-(RingElement a, const RingElement& b) { return a -= b; }
  friend RingElement operator*(const RingElement& a, const RingElement& b);
  friend RingElement operator*(RingElement a, const Rational& s) { return a *= s; }
  friend RingElement operator*(const Rational& s, RingElement a) { return a *= s; }
  friend bool operator==(const RingElement& a, const RingElement& b);

 private:
  explicit RingElement(std::vector<Term> normalized) : terms_(std::move(normalized)) {}

  std::vector<Term> terms_;
};

RingElement add(const RingElement& a, const RingElement& b);
RingElement mul(const RingElement& a, const RingElement& b);
RingElement diff_x(const RingElement& a);
RingElement diff_y(const RingElement& a);
RingElement laplacian(const RingElement& a);
/// Antiderivative in x whose x-dependent factor vanishes at x = 0.
RingElement integrate_x(const RingElement& a);
/// Antiderivative in y whose y-dependent factor vanishes at y = 0.
RingElement integrate_y(const RingElement& a);
double eval(const RingElement& a, double x, double y);
bool is_zero(const RingElement& a);
RingElement pow(const RingElement& a, unsigned n);

/// Quotient of two ring elements. The denominator is never the zero element.
class RationalField {
 public:
  RationalField(RingElement numerator, RingElement denominator);

  const RingElement& numerator() const { return num_; }
  const RingElement& denominator() const { return den_; }
  double eval(double x, double y) const;

 private:
  RingElement num_;
  RingElement den_;
};

/// Trig-free polynomial majorant in (|x|, |y|) with nonnegative coefficients.
class Envelope {
 public:
  Envelope() = default;
  explicit Envelope(std::map<std::pair<int, int>, Rational> coeffs);

  const std::map<std::pair<int, int>, Rational>& coefficients() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }
  /// Evaluates at (|ax|, |ay|). Rounded upward by a relative 1e-12 so the
  /// floating value still majorizes the exact one.
  double eval(double ax, double ay) const;
  /// Coefficients c_d of s -> envelope(s, s), indexed by total degree d.
  std::vector<Rational> diagonal() const;
  int degree() const;
  /// True when the envelope is a constant; `value` receives it.
  bool is_constant(Rational* value = nullptr) const;

 private:
  std::map<std::pair<int, int>, Rational> coeffs_;
};

/// |sin|, |cos| <= 1 and |c| for every coefficient.
Envelope envelope(const RingElement& a);

/// Fast repeated evaluation: coefficients converted to double once and
/// trig/power factors shared across terms.
class CompiledElement {
 public:
  CompiledElement() = default;
  explicit CompiledElement(const RingElement& element);

  double operator()(double x, double y) const;
  std::size_t size() const { return coeff_.size(); }

 private:
  struct Factor {
    int deg;
    int trig;  // index into trig table, -1 for none
  };
  std::vector<double> coeff_;
  std::vector<int> xfactor_;
  std::vector<int> yfactor_;
  std::vector<Factor> xfactors_;
  std::vector<Factor> yfactors_;
  std::vector<Trig> xtrigs_;
  std::vector<Trig> ytrigs_;
  int max_xdeg_ = 0;
  int max_ydeg_ = 0;
};

// Canonical JSON: [{"coeff": "p/q", "xdeg": a, "ydeg": b,
//                   "xtrig": [kind, freq], "ytrig": [kind, freq]}, ...]
// with kind in {"none", "sin", "cos"}.
void to_json(nlohmann::json& j, const RingElement& e);
void from_json(const nlohmann::json& j, RingElement& e);

}  // namespace vnw
