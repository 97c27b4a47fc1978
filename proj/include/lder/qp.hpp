#ifndef LDER_QP_HPP
#define LDER_QP_HPP

/// Self-contained convex QP solver for problems of the form
///
///   minimize    1/2 x'Qx + c'x
///   subject to  l <= Ax <= u        (entries of l may be -inf, of u +inf)
///
/// with Q symmetric positive semidefinite. The solver runs an operator
/// splitting (ADMM) iteration with over-relaxation on a reduced KKT system,
/// adapts the penalty rho from the primal/dual residual ratio, caches the
/// factorization between rho updates, and finishes with an active-set polish
/// solve that typically lands on the KKT point to machine precision.
///
/// Everything is deterministic: identical inputs produce bit-identical
/// iterates regardless of thread count.

#include <optional>
#include <string>
#include <vector>

#include "lder/common.hpp"

namespace lder::qp {

// Compressed sparse rows plus a column-compressed copy of the same matrix,
// so both A*x and A'*w parallelize over independent outputs.
struct SparseMatrix {
  Index rows = 0, cols = 0;
  std::vector<Index> row_ptr, col_idx;
  std::vector<double> val;
  std::vector<Index> col_ptr, row_idx;
  std::vector<double> val_csc;

  struct Triplet {
    Index row, col;
    double value;
  };

  static SparseMatrix from_triplets(Index rows, Index cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const Mat& dense);
  Mat dense() const;
  Index nnz() const { return static_cast<Index>(val.size()); }

  // out = A x, optionally with per-row weights: out_i = w_i * (A x)_i
  void multiply(const Vec& x, Vec& out) const;
  // out = A' w
  void multiply_transpose(const Vec& w, Vec& out) const;
};

// Quadratic term, stored dense or diagonal-tagged.
struct QuadTerm {
  bool is_diag = true;
  Vec diag;
  Mat dense;

  static QuadTerm diagonal(Vec d);
  static QuadTerm from_dense(Mat q);
  Index size() const { return is_diag ? diag.size() : dense.rows(); }
  void multiply(const Vec& x, Vec& out) const;
  double max_abs() const;
};

struct QpProblem {
  QuadTerm Q;
  Vec c;
  SparseMatrix A;
  Vec l, u;  // bounds; l defaults to -inf when constructed via helpers

  Index dim() const { return c.size(); }
  Index constraints() const { return A.rows; }

  // Shape checks plus a probabilistic PSD test (random Rayleigh quotients
  // must be >= -1e-10). Throws DimensionError / DomainError.
  void validate() const;
  double objective(const Vec& x) const;

  // Debug dump {"Q":..., "c":..., "A":..., "l":..., "u":...} with null for
  // infinite bounds, for offline cross-checking against a reference solver.
  void dump_json(const std::string& path) const;
};

QpProblem make_qp(QuadTerm q, Vec c, SparseMatrix a, Vec l, Vec u);
// Upper bounds only: l_i = -inf.
QpProblem make_qp_upper(QuadTerm q, Vec c, SparseMatrix a, Vec u);

enum class QpStatus { Solved, MaxIter, InfeasibleSuspected };
const char* to_string(QpStatus s);

struct QpSolution {
  Vec x;
  Vec duals;  // signed: >= 0 pushes on the upper bound, <= 0 on the lower
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  QpStatus status = QpStatus::MaxIter;
  bool polished = false;
};

struct QpSettings {
  double tol = 1e-6;
  int max_iter = 20000;
  double rho0 = 0.1;
  double sigma = 1e-6;
  double relaxation = 1.6;
  int rho_update_every = 25;
  int check_every = 5;
  bool polish = true;
};

struct WarmStart {
  Vec x;
  Vec duals;
};

QpSolution solve_qp(const QpProblem& prob, const QpSettings& settings = {},
                    const std::optional<WarmStart>& warm = std::nullopt);
QpSolution solve_qp(const QpProblem& prob, double tol, int max_iter);

// (primal, dual) KKT residuals: primal is the largest constraint violation,
// dual is ||Qx + c + A'duals||_inf with the sign convention above.
std::pair<double, double> kkt_residual(const QpProblem& prob, const Vec& x,
                                       const Vec& duals);

}  // namespace lder::qp

#endif  // LDER_QP_HPP
