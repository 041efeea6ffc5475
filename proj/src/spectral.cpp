#include "vnw/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>

#include "vnw/errors.hpp"

namespace vnw {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

int thread_count(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

template <typename F>
void parallel_rows(int rows, int threads, F&& body) {
  const int t = std::min(thread_count(threads), std::max(rows, 1));
  if (t == 1) {
    body(0, rows);
    return;
  }
  std::vector<std::thread> pool;
  for (int k = 0; k < t; ++k) {
    const int begin = rows * k / t;
    const int end = rows * (k + 1) / t;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

// Gauss-Legendre rule with 8 points on [a, b].
struct Gauss8 {
  std::vector<double> x;
  std::vector<double> w;
  Gauss8() {
    using rule = boost::math::quadrature::gauss<double, 8>;
    const auto& abscissa = rule::abscissa();
    const auto& weights = rule::weights();
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      x.push_back(abscissa[i]);
      w.push_back(weights[i]);
      if (abscissa[i] != 0) {
        x.push_back(-abscissa[i]);
        w.push_back(weights[i]);
      }
    }
  }
};

const Gauss8& gauss8() {
  static const Gauss8 rule;
  return rule;
}

// Nodes and weights of a composite 8-point rule on [a, b] with panels of width <= 1.
void composite_rule(double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) - 1e-12)));
  const double width = (b - a) / panels;
  const Gauss8& g = gauss8();
  nodes.clear();
  weights.clear();
  for (int p = 0; p < panels; ++p) {
    const double mid = a + width * (p + 0.5);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      nodes.push_back(mid + width / 2 * g.x[i]);
      weights.push_back(width / 2 * g.w[i]);
    }
  }
}

double max_residual(const GridSpec& grid, const std::vector<double>& psi,
                    const std::vector<double>& U, double energy) {
  const int n = grid.intervals();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  double worst = 0.0;
  auto at = [&](int i, int j) { return psi[static_cast<std::size_t>(j) * (n + 1) + i]; };
  for (int j = 1; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const double c = at(i, j);
      const double lap = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4 * c) * inv_h2;
      const double r = -lap + U[static_cast<std::size_t>(j) * (n + 1) + i] * c - energy * c;
      worst = std::max(worst, std::fabs(r));
    }
  }
  return worst;
}

std::vector<double> sample_nodes(const GridSpec& grid, const Field& f) {
  const int n = grid.intervals();
  std::vector<double> out(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(j) * (n + 1) + i] = f(grid.node(i), grid.node(j));
  }
  return out;
}

}  // namespace

GridSpec::GridSpec(double L, double h) : L_(L), h_(h) {
  if (!(L > 0) || !(h > 0)) throw ParameterError("grid needs L > 0 and h > 0");
  const double ratio = L / h;
  const double rounded = std::round(ratio);
  if (std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1) {
    throw ParameterError("L / h must be an integer");
  }
  n_ = static_cast<int>(2 * rounded);
}

PackageFields::PackageFields(const PotentialPackage& pkg)
    : Q_(pkg.Q), P_(pkg.P), w1_(pkg.psi1_num), w2_(pkg.psi2_num), energy_(pkg.energy.get_d()) {}

double PackageFields::potential(double x, double y) const {
  const double q = Q_(x, y);
  return P_(x, y) / (q * q);
}

double PackageFields::psi1(double x, double y) const { return w1_(x, y) / Q_(x, y); }
double PackageFields::psi2(double x, double y) const { return w2_(x, y) / Q_(x, y); }

Field PackageFields::potential_field() const {
  return [this](double x, double y) { return potential(x, y); };
}
Field PackageFields::psi1_field() const {
  return [this](double x, double y) { return psi1(x, y); };
}
Field PackageFields::psi2_field() const {
  return [this](double x, double y) { return psi2(x, y); };
}

void require_certificate(const PotentialPackage& pkg, const PositivityCertificate* cert) {
  if (cert == nullptr) throw CertificateMissing("no positivity certificate supplied");
  if (!cert->certified) throw CertificateMissing("the supplied certificate is not certified");
  if (cert->C != pkg.C) {
    throw CertificateMissing("certificate was issued for C = " + cert->C.get_str() +
                             ", package has C = " + pkg.C.get_str());
  }
}

double residual_check(const PotentialPackage& pkg, const GridSpec& grid,
                      const PositivityCertificate* cert, const ResidualOptions& options) {
  require_certificate(pkg, cert);
  const PackageFields fields(pkg);
  const std::vector<double> U = options.free_potential
                                    ? std::vector<double>(static_cast<std::size_t>(grid.intervals() + 1) *
                                                              (grid.intervals() + 1),
                                                          0.0)
                                    : sample_nodes(grid, fields.potential_field());
  const double r1 = max_residual(grid, sample_nodes(grid, fields.psi1_field()), U, fields.energy());
  const double r2 = max_residual(grid, sample_nodes(grid, fields.psi2_field()), U, fields.energy());
  return std::max(r1, r2);
}

ResidualStudy residual_orders(const PotentialPackage& pkg, double L, const std::vector<double>& hs,
                              const PositivityCertificate* cert, const ResidualOptions& options) {
  ResidualStudy study;
  for (double h : hs) {
    study.h.push_back(h);
    study.residual.push_back(residual_check(pkg, GridSpec(L, h), cert, options));
  }
  for (std::size_t k = 0; k + 1 < study.residual.size(); ++k) {
    study.order.push_back(std::log2(study.residual[k] / study.residual[k + 1]) /
                          std::log2(study.h[k] / study.h[k + 1]));
  }
  return study;
}

SparseMatrix assemble_operator(const GridSpec& grid, const Field& potential) {
  const int m = grid.interior();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(grid.unknowns()) * 5);
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      const long k = grid.index(i, j);
      entries.emplace_back(k, k, 4 * inv_h2 + potential(grid.node(i), grid.node(j)));
      if (i > 1) entries.emplace_back(k, grid.index(i - 1, j), -inv_h2);
      if (i < m) entries.emplace_back(k, grid.index(i + 1, j), -inv_h2);
      if (j > 1) entries.emplace_back(k, grid.index(i, j - 1), -inv_h2);
      if (j < m) entries.emplace_back(k, grid.index(i, j + 1), -inv_h2);
    }
  }
  SparseMatrix A(grid.unknowns(), grid.unknowns());
  A.setFromTriplets(entries.begin(), entries.end());
  return A;
}

StencilOperator::StencilOperator(const GridSpec& grid, const Field& potential)
    : grid_(grid), diag_(sample(grid, potential)) {
  diag_.array() += 4.0 / (grid.h() * grid.h());
}

VectorXd StencilOperator::apply(const VectorXd& v, int threads) const {
  const int m = grid_.interior();
  const double inv_h2 = 1.0 / (grid_.h() * grid_.h());
  VectorXd out(v.size());
  parallel_rows(m, threads, [&](int begin, int end) {
    for (int j = begin + 1; j <= end; ++j) {
      for (int i = 1; i <= m; ++i) {
        const long k = grid_.index(i, j);
        double s = diag_[k] * v[k];
        if (i > 1) s -= inv_h2 * v[k - 1];
        if (i < m) s -= inv_h2 * v[k + 1];
        if (j > 1) s -= inv_h2 * v[k - m];
        if (j < m) s -= inv_h2 * v[k + m];
        out[k] = s;
      }
    }
  });
  return out;
}

VectorXd sample(const GridSpec& grid, const Field& f) {
  const int m = grid.interior();
  VectorXd out(grid.unknowns());
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) out[grid.index(i, j)] = f(grid.node(i), grid.node(j));
  }
  return out;
}

MatrixXd sample_psi(const PackageFields& fields, const GridSpec& grid) {
  MatrixXd B(grid.unknowns(), 2);
  B.col(0) = sample(grid, fields.psi1_field());
  B.col(1) = sample(grid, fields.psi2_field());
  return B;
}

std::vector<double> principal_angles_deg(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() == 0 || B.cols() == 0) {
    throw ParameterError("principal angles need nonempty bases of equal length");
  }
  if (A.cols() < B.cols()) return principal_angles_deg(B, A);
  const MatrixXd QA = Eigen::HouseholderQR<MatrixXd>(A).householderQ() *
                      MatrixXd::Identity(A.rows(), A.cols());
  const MatrixXd QB = Eigen::HouseholderQR<MatrixXd>(B).householderQ() *
                      MatrixXd::Identity(B.rows(), B.cols());
  // Cosines from QA^T QB, sines from the part of QB outside span(QA); atan2 keeps
  // small angles accurate.
  const MatrixXd M = QA.transpose() * QB;
  const Eigen::JacobiSVD<MatrixXd> cosines(M);
  const Eigen::JacobiSVD<MatrixXd> sines(QB - QA * M);
  const Eigen::Index k = QB.cols();
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = cosines.singularValues()[i];
    // Singular values come sorted descending; pair the largest cosine with the smallest sine.
    const double sn = sines.singularValues()[k - 1 - i];
    angles.push_back(std::atan2(sn, c) * 180.0 / kPi);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

CorrelatedSubspace select_correlated(const std::vector<EigenPair>& pairs, const MatrixXd& psi,
                                     double threshold_deg) {
  CorrelatedSubspace out;
  if (pairs.empty()) return out;
  const MatrixXd Qpsi =
      Eigen::HouseholderQR<MatrixXd>(psi).householderQ() * MatrixXd::Identity(psi.rows(), psi.cols());
  std::vector<double> overlap(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    overlap[i] = (Qpsi.transpose() * pairs[i].vector).norm() / pairs[i].vector.norm();
  }
  std::vector<int> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return overlap[a] > overlap[b]; });

  MatrixXd V(psi.rows(), 0);
  for (int idx : order) {
    V.conservativeResize(Eigen::NoChange, V.cols() + 1);
    V.col(V.cols() - 1) = pairs[idx].vector;
    out.indices.push_back(idx);
    out.overlaps.push_back(overlap[idx]);
    if (V.cols() >= std::min<Eigen::Index>(2, static_cast<Eigen::Index>(pairs.size()))) {
      out.angle_deg = principal_angles_deg(V, psi).back();
      if (V.cols() >= 2 && out.angle_deg < threshold_deg) break;
    }
  }
  out.min_value = out.max_value = pairs[out.indices.front()].value;
  for (int idx : out.indices) {
    out.min_value = std::min(out.min_value, pairs[idx].value);
    out.max_value = std::max(out.max_value, pairs[idx].value);
  }
  return out;
}

SpectrumSummary spectrum(const PotentialPackage& pkg, const GridSpec& grid,
                         const PositivityCertificate* cert, const SpectrumOptions& options) {
  require_certificate(pkg, cert);
  const PackageFields fields(pkg);
  const Field zero = [](double, double) { return 0.0; };
  const SparseMatrix A =
      assemble_operator(grid, options.free_potential ? zero : fields.potential_field());
  SpectrumSummary s;
  s.eigen = eigen_window(A, options.eigen);
  const MatrixXd psi = sample_psi(fields, grid);
  const auto& pairs = s.eigen.pairs;
  if (!pairs.empty()) {
    MatrixXd V(psi.rows(), static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) V.col(static_cast<Eigen::Index>(i)) = pairs[i].vector;
    s.window_angle_deg = principal_angles_deg(V, psi).back();
    s.correlated = select_correlated(pairs, psi, options.angle_threshold_deg);
    if (pairs.size() >= 2) {
      MatrixXd best(psi.rows(), 2);
      best.col(0) = pairs[s.correlated.indices[0]].vector;
      best.col(1) = pairs[s.correlated.indices[1]].vector;
      s.best_pair_angle_deg = principal_angles_deg(best, psi).back();
    }
  }
  s.passed = s.eigen.window_count >= 2 && s.correlated.indices.size() >= 2 &&
             s.correlated.angle_deg < options.angle_threshold_deg;
  return s;
}

double circle_sup(const Field& f, double r, double exponent, int angles) {
  double sup = 0.0;
  const double scale = std::pow(r, exponent);
  for (int k = 0; k < angles; ++k) {
    const double t = 2 * kPi * k / angles;
    sup = std::max(sup, scale * std::fabs(f(r * std::cos(t), r * std::sin(t))));
  }
  return sup;
}

std::vector<double> decay_profile(const Field& f, double exponent, const std::vector<double>& radii,
                                  int angles) {
  std::vector<double> out;
  for (double r : radii) {
    if (r < 10) throw ParameterError("decay radii must be at least 10");
    out.push_back(circle_sup(f, r, exponent, angles));
  }
  return out;
}

double variation_factor(const std::vector<double>& values) {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*lo > 0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

bool strictly_increasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) return false;
  }
  return true;
}

DecayStudy decay_study(const PackageFields& fields, const std::vector<double>& radii) {
  DecayStudy s;
  s.radii = radii;
  const Field U = fields.potential_field();
  const Field p1 = fields.psi1_field();
  const Field p2 = fields.psi2_field();
  s.U = decay_profile(U, 1, radii);
  s.psi1 = decay_profile(p1, 2, radii);
  s.psi2 = decay_profile(p2, 3, radii);
  s.U_next = decay_profile(U, 2, radii);
  s.psi1_next = decay_profile(p1, 3, radii);
  s.psi2_next = decay_profile(p2, 4, radii);
  s.factor_U = variation_factor(s.U);
  s.factor_psi1 = variation_factor(s.psi1);
  s.factor_psi2 = variation_factor(s.psi2);
  return s;
}

double annulus_mass(const Field& f, double R0, double R1) {
  if (!(R1 > R0) || R0 < 0) throw ParameterError("annulus needs 0 <= R0 < R1");
  std::vector<double> nodes, weights;
  composite_rule(R0, R1, nodes, weights);
  const int angles = 4 * static_cast<int>(std::ceil(R1)) + 64;
  std::vector<double> c(angles), s(angles);
  for (int k = 0; k < angles; ++k) {
    c[k] = std::cos(2 * kPi * k / angles);
    s[k] = std::sin(2 * kPi * k / angles);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double r = nodes[i];
    double ring = 0.0;
    for (int k = 0; k < angles; ++k) {
      const double v = f(r * c[k], r * s[k]);
      ring += v * v;
    }
    total += weights[i] * r * ring * (2 * kPi / angles);
  }
  return total;
}

std::vector<double> l2_tail(const Field& f, const std::vector<double>& R_list) {
  std::vector<double> out;
  for (double R : R_list) out.push_back(annulus_mass(f, R, 2 * R));
  return out;
}

double square_inner(const Field& f, const Field& g, double L) {
  if (!(L > 0)) throw ParameterError("square half width must be positive");
  std::vector<double> nodes, weights;
  composite_rule(-L, L, nodes, weights);
  double total = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    double row = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      row += weights[i] * f(nodes[i], nodes[j]) * g(nodes[i], nodes[j]);
    }
    total += weights[j] * row;
  }
  return total;
}

Eigen::Matrix2d gram_matrix(const Field& psi1, const Field& psi2, double L) {
  Eigen::Matrix2d G;
  G(0, 0) = square_inner(psi1, psi1, L);
  G(1, 1) = square_inner(psi2, psi2, L);
  G(0, 1) = G(1, 0) = square_inner(psi1, psi2, L);
  return G;
}

Eigen::Matrix2d normalized(const Eigen::Matrix2d& gram) {
  Eigen::Matrix2d N;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) N(i, j) = gram(i, j) / std::sqrt(gram(i, i) * gram(j, j));
  }
  return N;
}

void to_json(nlohmann::json& j, const ResidualStudy& s) {
  j = nlohmann::json{{"h", s.h}, {"residual", s.residual}, {"order", s.order}};
}

void to_json(nlohmann::json& j, const SpectrumSummary& s) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.eigen.pairs.size(); ++i) {
    pairs.push_back({{"value", s.eigen.pairs[i].value}, {"residual", s.eigen.pairs[i].residual}});
  }
  for (std::size_t k = 0; k < s.correlated.indices.size(); ++k) {
    pairs[s.correlated.indices[k]]["psi_overlap"] = s.correlated.overlaps[k];
  }
  j = nlohmann::json{{"window", {s.eigen.center - s.eigen.half_width, s.eigen.center + s.eigen.half_width}},
                     {"window_count", s.eigen.window_count},
                     {"eigenpairs", pairs},
                     {"window_angle_deg", s.window_angle_deg},
                     {"best_pair_angle_deg", s.best_pair_angle_deg},
                     {"correlated",
                      {{"indices", s.correlated.indices},
                       {"angle_deg", s.correlated.angle_deg},
                       {"min_value", s.correlated.min_value},
                       {"max_value", s.correlated.max_value}}},
                     {"restarts", s.eigen.restarts},
                     {"inner_solves", s.eigen.inner_solves},
                     {"max_solve_residual", s.eigen.max_solve_residual},
                     {"passed", s.passed}};
}

void to_json(nlohmann::json& j, const DecayStudy& s) {
  j = nlohmann::json{{"radii", s.radii},
                     {"r_U", s.U},
                     {"r2_psi1", s.psi1},
                     {"r3_psi2", s.psi2},
                     {"r2_U", s.U_next},
                     {"r3_psi1", s.psi1_next},
                     {"r4_psi2", s.psi2_next},
                     {"factor_U", s.factor_U},
                     {"factor_psi1", s.factor_psi1},
                     {"factor_psi2", s.factor_psi2}};
}

void write_fields_csv(const std::string& path, const PackageFields& fields, const GridSpec& grid) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path + " for writing");
  out.precision(17);
  out << "x,y,U_hat,psi1,psi2\n";
  for (int j = 0; j <= grid.intervals(); ++j) {
    for (int i = 0; i <= grid.intervals(); ++i) {
      const double x = grid.node(i);
      const double y = grid.node(j);
      out << x << ',' << y << ',' << fields.potential(x, y) << ',' << fields.psi1(x, y) << ','
          << fields.psi2(x, y) << '\n';
    }
  }
}

}  // namespace vnw
