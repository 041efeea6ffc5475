#include "vnw/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/IterativeSolvers>

#include "vnw/errors.hpp"

namespace vnw {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SparseMatrix shifted(const SparseMatrix& A, double shift) {
  SparseMatrix I(A.rows(), A.cols());
  I.setIdentity();
  return A - shift * I;
}

// Solves (A - sigma I) x = b to a relative residual of options.solve_tol.
class ShiftedSolver {
 public:
  ShiftedSolver(const SparseMatrix& A, double sigma, const EigenOptions& options)
      : sigma_(sigma), options_(options), M_(shifted(A, sigma)) {
    if (options.inner == InnerSolver::kDirectLdlt) {
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(M_);
      if (ldlt_->info() != Eigen::Success) throw SolverStagnation("LDL^T factorization failed");
    } else {
      minres_ = std::make_unique<Minres>();
      minres_->setTolerance(options.solve_tol * 0.1);
      minres_->setMaxIterations(options.minres_max_iterations);
      minres_->compute(M_);
    }
  }

  VectorXd solve(const VectorXd& b) {
    ++count_;
    const double bnorm = b.norm();
    if (bnorm == 0) return VectorXd::Zero(b.size());
    VectorXd x;
    double rel = 0.0;
    if (ldlt_) {
      x = ldlt_->solve(b);
      for (int it = 0;; ++it) {
        const VectorXd r = b - M_ * x;
        rel = r.norm() / bnorm;
        if (rel <= options_.solve_tol) break;
        if (it == 4) fail(rel);
        x += ldlt_->solve(r);
      }
    } else {
      x = minres_->solve(b);
      rel = (b - M_ * x).norm() / bnorm;
      if (rel > options_.solve_tol) fail(rel);
    }
    worst_ = std::max(worst_, rel);
    return x;
  }

  long count() const { return count_; }
  double worst() const { return worst_; }

 private:
  using Minres =
      Eigen::MINRES<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>;

  [[noreturn]] void fail(double rel) const {
    std::ostringstream os;
    os << "inner solve stalled at relative residual " << rel << " (shift " << sigma_ << ")";
    throw SolverStagnation(os.str());
  }

  double sigma_;
  EigenOptions options_;
  SparseMatrix M_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
  std::unique_ptr<Minres> minres_;
  long count_ = 0;
  double worst_ = 0.0;
};

VectorXd random_unit(Eigen::Index n, std::mt19937_64& rng) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  }
  return v / v.norm();
}

// Removes the components along the columns of X and V(:, 0..cols), twice.
void orthogonalize(VectorXd& w, const MatrixXd& X, const MatrixXd& V, Eigen::Index cols,
                   VectorXd* coeffs) {
  if (coeffs) coeffs->setZero(cols);
  for (int pass = 0; pass < 2; ++pass) {
    if (X.cols() > 0) w -= X * (X.transpose() * w);
    if (cols > 0) {
      const VectorXd h = V.leftCols(cols).transpose() * w;
      w -= V.leftCols(cols) * h;
      if (coeffs) *coeffs += h;
    }
  }
}

struct RoundResult {
  std::vector<EigenPair> pairs;
  int restarts = 0;
};

// Lanczos for the nev largest |theta| of S = (A - sigma)^{-1} restricted to X^perp.
RoundResult lanczos_round(const SparseMatrix& A, ShiftedSolver& S, const MatrixXd& X, int nev,
                          const EigenOptions& options, std::mt19937_64& rng) {
  const Eigen::Index n = A.rows();
  const Eigen::Index free_dim = n - X.cols();
  nev = static_cast<int>(std::min<Eigen::Index>(nev, free_dim));
  const int ncv =
      static_cast<int>(std::min<Eigen::Index>(std::max(2 * nev + 10, nev + 24), free_dim));
  MatrixXd V(n, ncv + 1);
  MatrixXd T = MatrixXd::Zero(ncv, ncv);
  {
    VectorXd v = random_unit(n, rng);
    orthogonalize(v, X, V, 0, nullptr);
    V.col(0) = v / v.norm();
  }
  int k = 0;
  VectorXd h;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  std::vector<int> order(ncv);
  RoundResult out;
  for (int restart = 0;; ++restart) {
    double beta = 0.0;
    for (int j = k; j < ncv; ++j) {
      VectorXd w = S.solve(V.col(j));
      orthogonalize(w, X, V, j + 1, &h);
      T.col(j).head(j + 1) = h;
      T.row(j).head(j + 1) = h.transpose();
      beta = w.norm();
      if (j + 1 == free_dim) {
        beta = 0.0;
        V.col(j + 1).setZero();
        break;
      }
      if (beta <= 1e-13 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
        // Invariant subspace: continue from a fresh direction.
        w = random_unit(n, rng);
        orthogonalize(w, X, V, j + 1, nullptr);
        V.col(j + 1) = w / w.norm();
        beta = 0.0;
        continue;
      }
      V.col(j + 1) = w / beta;
    }
    es.compute(T);
    const VectorXd& theta = es.eigenvalues();
    const MatrixXd& Y = es.eigenvectors();
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::fabs(theta[a]) > std::fabs(theta[b]); });
    int nconv = 0;
    for (int i = 0; i < nev; ++i) {
      const int c = order[i];
      if (std::fabs(beta * Y(ncv - 1, c)) <= options.ritz_tol * std::fabs(theta[c])) ++nconv;
    }
    if (nconv == nev || ncv == free_dim) {
      for (int i = 0; i < nev; ++i) {
        const int c = order[i];
        EigenPair p;
        p.vector = V.leftCols(ncv) * Y.col(c);
        p.vector /= p.vector.norm();
        p.value = options.center + 1.0 / theta[c];
        p.residual = (A * p.vector - p.value * p.vector).norm();
        out.pairs.push_back(std::move(p));
      }
      out.restarts = restart;
      return out;
    }
    if (restart >= options.max_restarts) {
      throw SolverStagnation("Lanczos did not converge within the restart limit");
    }
    // Thick restart: keep the wanted Ritz vectors plus part of the converged surplus.
    const int keep = std::min(ncv - 2, nev + std::min(nconv, (ncv - nev) / 2));
    MatrixXd Ykeep(ncv, keep);
    for (int i = 0; i < keep; ++i) Ykeep.col(i) = Y.col(order[i]);
    const MatrixXd kept = V.leftCols(ncv) * Ykeep;
    V.col(keep) = V.col(ncv);
    V.leftCols(keep) = kept;
    T.setZero();
    for (int i = 0; i < keep; ++i) T(i, i) = theta[order[i]];
    k = keep;
  }
}

}  // namespace

long count_below(const SparseMatrix& A, double shift) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(A, shift));
  if (ldlt.info() != Eigen::Success) throw SolverStagnation("LDL^T factorization failed");
  const VectorXd& d = ldlt.vectorD();
  if ((d.array() == 0).any()) throw SolverStagnation("shift is an eigenvalue");
  return static_cast<long>((d.array() < 0).count());
}

EigenResult eigen_window(const SparseMatrix& A, const EigenOptions& options) {
  if (!(options.half_width > 0)) throw ParameterError("window half width must be positive");
  EigenResult result;
  result.center = options.center;
  result.half_width = options.half_width;
  const double lo = options.center - options.half_width;
  const double hi = options.center + options.half_width;
  result.window_count = count_below(A, hi) - count_below(A, lo);
  if (result.window_count == 0) return result;

  ShiftedSolver S(A, options.center, options);
  std::mt19937_64 rng(options.seed);
  MatrixXd X(A.rows(), 0);
  for (int round = 0; round < options.max_rounds; ++round) {
    const int missing = static_cast<int>(result.window_count - static_cast<long>(result.pairs.size()));
    RoundResult r = lanczos_round(A, S, X, missing + options.extra, options, rng);
    result.restarts += r.restarts;
    for (EigenPair& p : r.pairs) {
      if (p.value <= lo || p.value >= hi) continue;
      if (p.residual > options.residual_tol * std::max(1.0, std::fabs(p.value))) continue;
      X.conservativeResize(Eigen::NoChange, X.cols() + 1);
      X.col(X.cols() - 1) = p.vector;
      result.pairs.push_back(std::move(p));
    }
    if (static_cast<long>(result.pairs.size()) >= result.window_count) break;
  }
  result.inner_solves = S.count();
  result.max_solve_residual = S.worst();
  if (static_cast<long>(result.pairs.size()) != result.window_count) {
    std::ostringstream os;
    os << "found " << result.pairs.size() << " of " << result.window_count
       << " eigenvalues in the window";
    throw SolverStagnation(os.str());
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
  return result;
}

}  // namespace vnw
