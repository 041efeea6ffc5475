#pragma once

// Eigenpairs of a sparse symmetric matrix inside a window (c - d, c + d).
//
// The window is counted exactly from the inertia of LDL^T factorizations of
// A - (c +- d) I. Eigenvectors come from thick-restart Lanczos with full
// reorthogonalization applied to (A - c I)^{-1}; the eigenvalues in the window
// are exactly the ones with |theta| > 1/d.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace vnw {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class InnerSolver {
  kDirectLdlt,  // sparse LDL^T with iterative refinement
  kMinres,  // Jacobi-preconditioned MINRES; practical on small grids only
};

struct EigenOptions {
  double center = 1.0;
  double half_width = 0.05;
  double ritz_tol = 1e-10;  // relative, on the shift-inverted Ritz values
  double residual_tol = 1e-6;  // ||A v - mu v|| accepted for a converged pair
  double solve_tol = 1e-8;  // relative residual of every inner solve
  InnerSolver inner = InnerSolver::kDirectLdlt;
  int minres_max_iterations = 20000;
  int extra = 4;  // Ritz values kept beyond the window count
  int max_restarts = 300;
  int max_rounds = 4;  // deflated reruns when a degenerate copy was missed
  unsigned long long seed = 1;
};

struct EigenPair {
  double value = 0.0;
  double residual = 0.0;  // ||A v - value v|| with ||v|| = 1
  Eigen::VectorXd vector;
};

struct EigenResult {
  double center = 0.0;
  double half_width = 0.0;
  long window_count = 0;  // from inertia
  std::vector<EigenPair> pairs;  // inside the window, ascending
  int restarts = 0;
  long inner_solves = 0;
  double max_solve_residual = 0.0;
};

/// Number of eigenvalues of A strictly below `shift`. Throws SolverStagnation
/// if the factorization breaks down.
long count_below(const SparseMatrix& A, double shift);

/// Throws SolverStagnation when an inner solve misses solve_tol or Lanczos
/// does not converge within max_restarts.
EigenResult eigen_window(const SparseMatrix& A, const EigenOptions& options = {});

}  // namespace vnw
