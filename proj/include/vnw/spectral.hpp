#pragma once

// Numerical experiments on H = -Laplace + U_hat with U_hat = P / Q^2:
// discrete residuals, eigenpairs near E on a Dirichlet square, decay
// profiles and L^2 integrals of psi = w / Q.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vnw/eigensolver.hpp"
#include "vnw/moutard.hpp"
#include "vnw/positivity.hpp"

namespace vnw {

/// Uniform grid on [-L, L]^2 with Dirichlet boundary; unknowns are the interior nodes.
class GridSpec {
 public:
  /// Throws ParameterError unless L > 0, h > 0 and L / h is an integer.
  GridSpec(double L, double h);

  double L() const { return L_; }
  double h() const { return h_; }
  int intervals() const { return n_; }  // 2L / h
  int interior() const { return n_ - 1; }  // per side
  long unknowns() const { return static_cast<long>(n_ - 1) * (n_ - 1); }
  /// Coordinate of node i, 0 <= i <= intervals().
  double node(int i) const { return -L_ + h_ * i; }
  /// Index of interior node (i, j), 1 <= i, j < intervals(); x varies fastest.
  long index(int i, int j) const { return static_cast<long>(j - 1) * (n_ - 1) + (i - 1); }

 private:
  double L_;
  double h_;
  int n_;
};

using Field = std::function<double(double, double)>;

/// Floating evaluators for U_hat, psi1, psi2 built from the exact package.
class PackageFields {
 public:
  explicit PackageFields(const PotentialPackage& pkg);

  double potential(double x, double y) const;
  double psi1(double x, double y) const;
  double psi2(double x, double y) const;
  double energy() const { return energy_; }

  Field potential_field() const;
  Field psi1_field() const;
  Field psi2_field() const;

 private:
  CompiledElement Q_;
  CompiledElement P_;
  CompiledElement w1_;
  CompiledElement w2_;
  double energy_;
};

/// Throws CertificateMissing unless `cert` is a certified certificate for pkg.C.
void require_certificate(const PotentialPackage& pkg, const PositivityCertificate* cert);

struct ResidualOptions {
  bool free_potential = false;  // replace U_hat by 0 (control)
};

/// max_i max over interior nodes of |(-Laplace_h + U_hat - E) psi_i|.
double residual_check(const PotentialPackage& pkg, const GridSpec& grid,
                      const PositivityCertificate* cert, const ResidualOptions& options = {});

struct ResidualStudy {
  std::vector<double> h;
  std::vector<double> residual;
  std::vector<double> order;  // log2(residual[k] / residual[k + 1]) for halving h
};

ResidualStudy residual_orders(const PotentialPackage& pkg, double L, const std::vector<double>& hs,
                              const PositivityCertificate* cert,
                              const ResidualOptions& options = {});

/// -Laplace_h + U on the interior nodes.
SparseMatrix assemble_operator(const GridSpec& grid, const Field& potential);

/// Matrix-free 5-point operator; rows are split across threads, each output
/// entry is computed by exactly one thread so results do not depend on the split.
class StencilOperator {
 public:
  StencilOperator(const GridSpec& grid, const Field& potential);
  Eigen::VectorXd apply(const Eigen::VectorXd& v, int threads = 0) const;

 private:
  GridSpec grid_;
  Eigen::VectorXd diag_;
};

/// Samples f at the interior nodes in the operator's ordering.
Eigen::VectorXd sample(const GridSpec& grid, const Field& f);
/// Columns psi1, psi2 at the interior nodes.
Eigen::MatrixXd sample_psi(const PackageFields& fields, const GridSpec& grid);

/// Principal angles in degrees between the column spans, ascending.
std::vector<double> principal_angles_deg(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct CorrelatedSubspace {
  std::vector<int> indices;  // into the eigenpair list, by decreasing overlap with span(psi)
  std::vector<double> overlaps;  // norm of the projection of each eigenvector onto span(psi)
  double angle_deg = 90.0;  // largest principal angle of the selected span to span(psi)
  double min_value = 0.0;
  double max_value = 0.0;
};

/// Adds eigenvectors in order of overlap with span(psi) until at least two are
/// chosen and the largest principal angle drops below threshold_deg (or all are used).
CorrelatedSubspace select_correlated(const std::vector<EigenPair>& pairs, const Eigen::MatrixXd& psi,
                                     double threshold_deg);

struct SpectrumOptions {
  EigenOptions eigen;
  double angle_threshold_deg = 5.0;
  bool free_potential = false;
};

struct SpectrumSummary {
  EigenResult eigen;
  double window_angle_deg = 90.0;  // whole window eigenspace vs span(psi)
  double best_pair_angle_deg = 90.0;  // two eigenvectors of largest overlap
  CorrelatedSubspace correlated;
  bool passed = false;  // >= 2 eigenvalues in the window and correlated angle < threshold
};

SpectrumSummary spectrum(const PotentialPackage& pkg, const GridSpec& grid,
                         const PositivityCertificate* cert, const SpectrumOptions& options = {});

/// sup over `angles` equispaced points of r^exponent |f| on the circle of radius r.
double circle_sup(const Field& f, double r, double exponent, int angles = 720);

/// One column per radius. Throws ParameterError for radii below 10.
std::vector<double> decay_profile(const Field& f, double exponent, const std::vector<double>& radii,
                                  int angles = 720);

/// max / min of a positive sequence.
double variation_factor(const std::vector<double>& values);
bool strictly_increasing(const std::vector<double>& values);

struct DecayStudy {
  std::vector<double> radii;
  std::vector<double> U, psi1, psi2;  // r |U|, r^2 |psi1|, r^3 |psi2|
  std::vector<double> U_next, psi1_next, psi2_next;  // exponents + 1
  double factor_U = 0, factor_psi1 = 0, factor_psi2 = 0;
};

DecayStudy decay_study(const PackageFields& fields, const std::vector<double>& radii);

/// Integral of f^2 over R0 <= r <= R1 (polar Gauss-Legendre x trapezoid).
double annulus_mass(const Field& f, double R0, double R1);
/// annulus_mass over [R, 2R] for each R.
std::vector<double> l2_tail(const Field& f, const std::vector<double>& R_list);
/// Integral of f g over [-L, L]^2 (tensor Gauss-Legendre on unit panels).
double square_inner(const Field& f, const Field& g, double L);

/// Gram matrix of psi1, psi2 on [-L, L]^2.
Eigen::Matrix2d gram_matrix(const Field& psi1, const Field& psi2, double L);
/// G_ij / sqrt(G_ii G_jj)
Eigen::Matrix2d normalized(const Eigen::Matrix2d& gram);

void to_json(nlohmann::json& j, const ResidualStudy& s);
void to_json(nlohmann::json& j, const SpectrumSummary& s);
void to_json(nlohmann::json& j, const DecayStudy& s);

/// Writes "x,y,U_hat,psi1,psi2" rows on the nodes of `grid` (boundary included).
void write_fields_csv(const std::string& path, const PackageFields& fields, const GridSpec& grid);

}  // namespace vnw
