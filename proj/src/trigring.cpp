#include "vnw/trigring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "vnw/errors.hpp"

namespace vnw {

namespace {

using Accumulator = std::map<Monomial, Rational>;

// One factor c * t^deg * T(freq t) of a single variable.
struct Factor1D {
  Rational coeff;
  int deg;
  Trig trig;
};

// Brings a trig factor into canonical form. Returns the sign to apply to the
// coefficient, or 0 if the factor vanishes identically (sin 0).
int canonicalize(Trig& t) {
  if (t.kind == TrigKind::kNone) {
    t.freq = 0;
    return 1;
  }
  int sign = 1;
  if (t.freq < 0) {
    t.freq = -t.freq;
    if (t.kind == TrigKind::kSin) sign = -1;
  }
  if (t.freq == 0) {
    if (t.kind == TrigKind::kSin) return 0;
    t.kind = TrigKind::kNone;
  }
  return sign;
}

void accumulate(Accumulator& acc, const Rational& c, Monomial m) {
  const int sx = canonicalize(m.xtrig);
  const int sy = canonicalize(m.ytrig);
  if (sx == 0 || sy == 0 || c == 0) return;
  acc[m] += (sx * sy == 1) ? c : Rational(-c);
}

std::vector<Term> flatten(const Accumulator& acc) {
  std::vector<Term> out;
  out.reserve(acc.size());
  for (const auto& [m, c] : acc) {
    if (c != 0) out.push_back({c, m});
  }
  return out;
}

// Product-to-sum for two factors of the same variable. At most two results.
std::vector<std::pair<Rational, Trig>> trig_product(Trig a, Trig b) {
  if (a.kind == TrigKind::kNone) return {{Rational(1), b}};
  if (b.kind == TrigKind::kNone) return {{Rational(1), a}};
  const Rational half(1, 2);
  const int diff = a.freq - b.freq;
  const int sum = a.freq + b.freq;
  if (a.kind == TrigKind::kSin && b.kind == TrigKind::kSin) {
    return {{half, Trig::cos(diff)}, {-half, Trig::cos(sum)}};
  }
  if (a.kind == TrigKind::kCos && b.kind == TrigKind::kCos) {
    return {{half, Trig::cos(diff)}, {half, Trig::cos(sum)}};
  }
  if (a.kind == TrigKind::kSin) {  // sin a cos b
    return {{half, Trig::sin(sum)}, {half, Trig::sin(diff)}};
  }
  return {{half, Trig::sin(sum)}, {half, Trig::sin(-diff)}};  // cos a sin b
}

// d/dt of t^deg T(freq t).
std::vector<Factor1D> diff_factor(int deg, Trig t) {
  std::vector<Factor1D> out;
  if (deg > 0) out.push_back({Rational(deg), deg - 1, t});
  if (t.kind == TrigKind::kSin) out.push_back({Rational(t.freq), deg, Trig::cos(t.freq)});
  if (t.kind == TrigKind::kCos) out.push_back({Rational(-t.freq), deg, Trig::sin(t.freq)});
  return out;
}

// Antiderivative of t^deg T(freq t) by the by-parts recurrence, without the
// base-point correction.
void integrate_factor_raw(const Rational& scale, int deg, Trig t, std::vector<Factor1D>& out) {
  if (t.kind == TrigKind::kNone) {
    out.push_back({scale / (deg + 1), deg + 1, t});
    return;
  }
  const Rational n(t.freq);
  if (t.kind == TrigKind::kSin) {
    // int t^a sin(nt) = -t^a cos(nt)/n + (a/n) int t^(a-1) cos(nt)
    out.push_back({-scale / n, deg, Trig::cos(t.freq)});
    if (deg > 0) integrate_factor_raw(scale * deg / n, deg - 1, Trig::cos(t.freq), out);
  } else {
    // int t^a cos(nt) = t^a sin(nt)/n - (a/n) int t^(a-1) sin(nt)
    out.push_back({scale / n, deg, Trig::sin(t.freq)});
    if (deg > 0) integrate_factor_raw(-scale * deg / n, deg - 1, Trig::sin(t.freq), out);
  }
}

std::vector<Factor1D> integrate_factor(int deg, Trig t) {
  std::vector<Factor1D> out;
  integrate_factor_raw(Rational(1), deg, t, out);
  Rational at_zero = 0;
  for (const auto& f : out) {
    if (f.deg == 0 && f.trig.kind != TrigKind::kSin) at_zero += f.coeff;
  }
  if (at_zero != 0) out.push_back({-at_zero, 0, Trig::none()});
  return out;
}

template <bool InX>
RingElement apply_factor_map(const RingElement& a,
                             std::vector<Factor1D> (*fn)(int, Trig)) {
  std::vector<Term> out;
  for (const auto& term : a.terms()) {
    const int deg = InX ? term.mono.xdeg : term.mono.ydeg;
    const Trig trig = InX ? term.mono.xtrig : term.mono.ytrig;
    for (const auto& f : fn(deg, trig)) {
      Monomial m = term.mono;
      if constexpr (InX) {
        m.xdeg = f.deg;
        m.xtrig = f.trig;
      } else {
        m.ydeg = f.deg;
        m.ytrig = f.trig;
      }
      out.push_back({term.coeff * f.coeff, m});
    }
  }
  return RingElement::from_terms(std::move(out));
}

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

const char* kind_name(TrigKind k) {
  switch (k) {
    case TrigKind::kSin: return "sin";
    case TrigKind::kCos: return "cos";
    default: return "none";
  }
}

TrigKind kind_from_name(const std::string& s) {
  if (s == "none") return TrigKind::kNone;
  if (s == "sin") return TrigKind::kSin;
  if (s == "cos") return TrigKind::kCos;
  throw FormatError("unknown trig kind '" + s + "'");
}

std::string factor_string(const char* var, int deg, Trig t) {
  std::string s;
  if (deg == 1) s += var;
  if (deg > 1) s += std::string(var) + "^" + std::to_string(deg);
  if (t.kind != TrigKind::kNone) {
    if (!s.empty()) s += "*";
    s += kind_name(t.kind);
    s += "(";
    if (t.freq != 1) s += std::to_string(t.freq);
    s += var;
    s += ")";
  }
  return s;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  }
  if (s.empty()) throw FormatError("empty rational");
  try {
    if (s.find('/') != std::string::npos) {
      Rational r(s, 10);
      if (r.get_den() == 0) throw FormatError("zero denominator in '" + text + "'");
      r.canonicalize();
      return r;
    }
    // Decimal with optional exponent, parsed exactly.
    std::size_t pos = 0;
    bool negative = false;
    if (s[pos] == '+' || s[pos] == '-') negative = (s[pos++] == '-');
    std::string digits;
    int scale = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (; pos < s.size(); ++pos) {
      const char ch = s[pos];
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        digits += ch;
        seen_digit = true;
        if (seen_point) ++scale;
      } else if (ch == '.' && !seen_point) {
        seen_point = true;
      } else {
        break;
      }
    }
    if (!seen_digit) throw FormatError("malformed rational '" + text + "'");
    long exponent = 0;
    if (pos < s.size()) {
      if (s[pos] != 'e' && s[pos] != 'E') throw FormatError("malformed rational '" + text + "'");
      const std::string exp_text = s.substr(pos + 1);
      std::size_t used = 0;
      exponent = std::stol(exp_text, &used);
      if (used != exp_text.size()) throw FormatError("malformed rational '" + text + "'");
    }
    mpz_class num(digits, 10);
    mpz_class den = 1;
    long shift = exponent - scale;
    mpz_class ten = 10;
    mpz_class p;
    mpz_pow_ui(p.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(std::labs(shift)));
    if (shift >= 0) num *= p;
    else den = p;
    Rational r(num, den);
    r.canonicalize();
    return negative ? Rational(-r) : r;
  } catch (const std::invalid_argument&) {
    throw FormatError("malformed rational '" + text + "'");
  } catch (const std::out_of_range&) {
    throw FormatError("malformed rational '" + text + "'");
  }
}

std::string rational_to_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

double Trig::eval(double t) const {
  switch (kind) {
    case TrigKind::kSin: return std::sin(freq * t);
    case TrigKind::kCos: return std::cos(freq * t);
    default: return 1.0;
  }
}

RingElement RingElement::constant(const Rational& c) { return term(c, 0, 0); }

RingElement RingElement::term(const Rational& c, int xdeg, int ydeg, Trig xtrig, Trig ytrig) {
  if (xdeg < 0 || ydeg < 0) throw ParameterError("negative polynomial degree");
  return from_terms({{c, {xdeg, ydeg, xtrig, ytrig}}});
}

RingElement RingElement::from_terms(std::vector<Term> terms) {
  Accumulator acc;
  for (auto& t : terms) accumulate(acc, t.coeff, t.mono);
  return RingElement(flatten(acc));
}

double RingElement::eval(double x, double y) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    sum += t.coeff.get_d() * ipow(x, t.mono.xdeg) * ipow(y, t.mono.ydeg) *
           t.mono.xtrig.eval(x) * t.mono.ytrig.eval(y);
  }
  return sum;
}

Rational RingElement::coefficient(const Monomial& m) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                             [](const Term& t, const Monomial& key) { return t.mono < key; });
  if (it != terms_.end() && it->mono == m) return it->coeff;
  return 0;
}

int RingElement::max_total_degree() const {
  int d = -1;
  for (const auto& t : terms_) d = std::max(d, t.mono.total_degree());
  return d;
}

RingElement RingElement::homogeneous_part(int degree) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.mono.total_degree() == degree) out.push_back(t);
  }
  return RingElement(std::move(out));
}

RingElement RingElement::at_y0() const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.mono.ydeg > 0 || t.mono.ytrig.kind == TrigKind::kSin) continue;
    Monomial m = t.mono;
    m.ytrig = Trig::none();
    out.push_back({t.coeff, m});
  }
  return from_terms(std::move(out));
}

RingElement RingElement::at_x0() const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.mono.xdeg > 0 || t.mono.xtrig.kind == TrigKind::kSin) continue;
    Monomial m = t.mono;
    m.xtrig = Trig::none();
    out.push_back({t.coeff, m});
  }
  return from_terms(std::move(out));
}

std::string RingElement::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    Rational c = it->coeff;
    const bool negative = c < 0;
    if (negative) c = -c;
    if (first) os << (negative ? "-" : "");
    else os << (negative ? " - " : " + ");
    first = false;

    std::string body;
    for (const auto& part : {factor_string("x", it->mono.xdeg, it->mono.xtrig),
                             factor_string("y", it->mono.ydeg, it->mono.ytrig)}) {
      if (part.empty()) continue;
      if (!body.empty()) body += "*";
      body += part;
    }
    std::string coeff = c.get_den() == 1 ? c.get_num().get_str() : "(" + c.get_str() + ")";
    if (body.empty()) os << coeff;
    else if (c == 1) os << body;
    else os << coeff << "*" << body;
  }
  return os.str();
}

RingElement RingElement::operator-() const {
  RingElement r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

RingElement& RingElement::operator+=(const RingElement& other) {
  std::vector<Term> merged;
  merged.reserve(terms_.size() + other.terms_.size());
  auto a = terms_.begin();
  auto b = other.terms_.begin();
  while (a != terms_.end() || b != other.terms_.end()) {
    if (b == other.terms_.end() || (a != terms_.end() && a->mono < b->mono)) {
      merged.push_back(*a++);
    } else if (a == terms_.end() || b->mono < a->mono) {
      merged.push_back(*b++);
    } else {
      Rational c = a->coeff + b->coeff;
      if (c != 0) merged.push_back({c, a->mono});
      ++a;
      ++b;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

RingElement& RingElement::operator-=(const RingElement& other) { return *this += -other; }

RingElement& RingElement::operator*=(const RingElement& other) {
  *this = *this * other;
  return *this;
}

RingElement& RingElement::operator*=(const Rational& s) {
  if (s == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coeff *= s;
  return *this;
}

RingElement operator*(const RingElement& a, const RingElement& b) {
  Accumulator acc;
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      const Rational c = ta.coeff * tb.coeff;
      const auto xs = trig_product(ta.mono.xtrig, tb.mono.xtrig);
      const auto ys = trig_product(ta.mono.ytrig, tb.mono.ytrig);
      for (const auto& [cx, tx] : xs) {
        for (const auto& [cy, ty] : ys) {
          accumulate(acc, c * cx * cy,
                     {ta.mono.xdeg + tb.mono.xdeg, ta.mono.ydeg + tb.mono.ydeg, tx, ty});
        }
      }
    }
  }
  return RingElement(flatten(acc));
}

bool operator==(const RingElement& a, const RingElement& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (a.terms_[i].mono != b.terms_[i].mono || a.terms_[i].coeff != b.terms_[i].coeff) {
      return false;
    }
  }
  return true;
}

RingElement add(const RingElement& a, const RingElement& b) { return a + b; }
RingElement mul(const RingElement& a, const RingElement& b) { return a * b; }

RingElement diff_x(const RingElement& a) { return apply_factor_map<true>(a, &diff_factor); }
RingElement diff_y(const RingElement& a) { return apply_factor_map<false>(a, &diff_factor); }

RingElement laplacian(const RingElement& a) {
  return diff_x(diff_x(a)) + diff_y(diff_y(a));
}

RingElement integrate_x(const RingElement& a) {
  return apply_factor_map<true>(a, &integrate_factor);
}

RingElement integrate_y(const RingElement& a) {
  return apply_factor_map<false>(a, &integrate_factor);
}

double eval(const RingElement& a, double x, double y) { return a.eval(x, y); }

bool is_zero(const RingElement& a) { return a.is_zero(); }

RingElement pow(const RingElement& a, unsigned n) {
  RingElement result = RingElement::constant(1);
  RingElement base = a;
  while (n > 0) {
    if (n & 1U) result *= base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  return result;
}

RationalField::RationalField(RingElement numerator, RingElement denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
  if (den_.is_zero()) throw ParameterError("rational field with zero denominator");
}

double RationalField::eval(double x, double y) const { return num_.eval(x, y) / den_.eval(x, y); }

Envelope::Envelope(std::map<std::pair<int, int>, Rational> coeffs) : coeffs_(std::move(coeffs)) {
  std::erase_if(coeffs_, [](const auto& kv) { return kv.second == 0; });
  for (const auto& [key, c] : coeffs_) {
    if (c < 0) throw ParameterError("envelope coefficients must be nonnegative");
  }
}

double Envelope::eval(double ax, double ay) const {
  ax = std::fabs(ax);
  ay = std::fabs(ay);
  double sum = 0.0;
  for (const auto& [key, c] : coeffs_) sum += c.get_d() * ipow(ax, key.first) * ipow(ay, key.second);
  // Outward rounding: each operation above has relative error below 1e-15.
  return sum * (1.0 + 1e-12) + 1e-300;
}

std::vector<Rational> Envelope::diagonal() const {
  std::vector<Rational> out(static_cast<std::size_t>(std::max(degree(), 0)) + 1, Rational(0));
  for (const auto& [key, c] : coeffs_) out[key.first + key.second] += c;
  return out;
}

int Envelope::degree() const {
  int d = -1;
  for (const auto& [key, c] : coeffs_) d = std::max(d, key.first + key.second);
  return d;
}

bool Envelope::is_constant(Rational* value) const {
  if (degree() > 0) return false;
  if (value != nullptr) *value = coeffs_.empty() ? Rational(0) : coeffs_.begin()->second;
  return true;
}

Envelope envelope(const RingElement& a) {
  std::map<std::pair<int, int>, Rational> coeffs;
  for (const auto& t : a.terms()) coeffs[{t.mono.xdeg, t.mono.ydeg}] += abs(t.coeff);
  return Envelope(std::move(coeffs));
}

CompiledElement::CompiledElement(const RingElement& element) {
  auto intern = [](std::vector<Trig>& table, Trig t) -> int {
    if (t.kind == TrigKind::kNone) return -1;
    auto it = std::find(table.begin(), table.end(), t);
    if (it != table.end()) return static_cast<int>(it - table.begin());
    table.push_back(t);
    return static_cast<int>(table.size() - 1);
  };
  auto intern_factor = [](std::vector<Factor>& table, Factor f) -> int {
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i].deg == f.deg && table[i].trig == f.trig) return static_cast<int>(i);
    }
    table.push_back(f);
    return static_cast<int>(table.size() - 1);
  };
  for (const auto& t : element.terms()) {
    coeff_.push_back(t.coeff.get_d());
    const int xt = intern(xtrigs_, t.mono.xtrig);
    const int yt = intern(ytrigs_, t.mono.ytrig);
    xfactor_.push_back(intern_factor(xfactors_, {t.mono.xdeg, xt}));
    yfactor_.push_back(intern_factor(yfactors_, {t.mono.ydeg, yt}));
    max_xdeg_ = std::max(max_xdeg_, t.mono.xdeg);
    max_ydeg_ = std::max(max_ydeg_, t.mono.ydeg);
  }
}

double CompiledElement::operator()(double x, double y) const {
  thread_local std::vector<double> scratch;
  const std::size_t need = static_cast<std::size_t>(max_xdeg_ + max_ydeg_ + 2) + xtrigs_.size() +
                           ytrigs_.size() + xfactors_.size() + yfactors_.size();
  if (scratch.size() < need) scratch.resize(need);
  double* xp = scratch.data();
  double* yp = xp + max_xdeg_ + 1;
  double* xt = yp + max_ydeg_ + 1;
  double* yt = xt + xtrigs_.size();
  double* xf = yt + ytrigs_.size();
  double* yf = xf + xfactors_.size();

  xp[0] = 1.0;
  for (int i = 1; i <= max_xdeg_; ++i) xp[i] = xp[i - 1] * x;
  yp[0] = 1.0;
  for (int i = 1; i <= max_ydeg_; ++i) yp[i] = yp[i - 1] * y;
  for (std::size_t i = 0; i < xtrigs_.size(); ++i) xt[i] = xtrigs_[i].eval(x);
  for (std::size_t i = 0; i < ytrigs_.size(); ++i) yt[i] = ytrigs_[i].eval(y);
  for (std::size_t i = 0; i < xfactors_.size(); ++i) {
    xf[i] = xp[xfactors_[i].deg] * (xfactors_[i].trig < 0 ? 1.0 : xt[xfactors_[i].trig]);
  }
  for (std::size_t i = 0; i < yfactors_.size(); ++i) {
    yf[i] = yp[yfactors_[i].deg] * (yfactors_[i].trig < 0 ? 1.0 : yt[yfactors_[i].trig]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < coeff_.size(); ++i) sum += coeff_[i] * xf[xfactor_[i]] * yf[yfactor_[i]];
  return sum;
}

void to_json(nlohmann::json& j, const RingElement& e) {
  j = nlohmann::json::array();
  for (const auto& t : e.terms()) {
    j.push_back({{"coeff", rational_to_string(t.coeff)},
                 {"xdeg", t.mono.xdeg},
                 {"ydeg", t.mono.ydeg},
                 {"xtrig", {kind_name(t.mono.xtrig.kind), t.mono.xtrig.freq}},
                 {"ytrig", {kind_name(t.mono.ytrig.kind), t.mono.ytrig.freq}}});
  }
}

void from_json(const nlohmann::json& j, RingElement& e) {
  if (!j.is_array()) throw FormatError("ring element must be a JSON array of terms");
  std::vector<Term> terms;
  try {
    for (const auto& item : j) {
      Term t;
      t.coeff = parse_rational(item.at("coeff").get<std::string>());
      t.mono.xdeg = item.at("xdeg").get<int>();
      t.mono.ydeg = item.at("ydeg").get<int>();
      if (t.mono.xdeg < 0 || t.mono.ydeg < 0) throw FormatError("negative degree in ring term");
      const auto& xt = item.at("xtrig");
      const auto& yt = item.at("ytrig");
      t.mono.xtrig = {xt.at(1).get<int>(), kind_from_name(xt.at(0).get<std::string>())};
      t.mono.ytrig = {yt.at(1).get<int>(), kind_from_name(yt.at(0).get<std::string>())};
      terms.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed ring term: ") + ex.what());
  }
  e = RingElement::from_terms(std::move(terms));
}

}  // namespace vnw
