#ifndef LDER_LOSS_HPP
#define LDER_LOSS_HPP

/// Losses (MSE for training, MAPE for evaluation), exact subgradients of the
/// MSE with respect to the flat parameter vector, and the sparse indicator
/// vectors v^{i,s} that the DC trainers build their subproblems from.
///
/// v^{i,s} places (x_i, 1) in block s of the flat layout and zeros elsewhere,
/// so <v^{i,s}, alpha> evaluates the s-th affine piece at x_i. The active
/// difference v^i = v^{i,j1} - v^{i,r1+j2} satisfies <v^i, alpha> =
/// predict(x_i) when j1, j2 are the active rows.

#include <functional>
#include <vector>

#include "lder/common.hpp"
#include "lder/model.hpp"

namespace lder {

struct TrainingSet {
  Mat X;  // m x n
  Vec y;  // m

  Index size() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

// Throws DimensionError/DomainError unless X and y agree and m >= 1.
void check_training_set(const TrainingSet& t);

// Sparse vector over the flat parameter layout; indices strictly increasing.
struct SparseAlphaVec {
  std::vector<std::pair<Index, double>> entries;
  Index length = 0;

  double dot(const Vec& alpha) const;
  Vec dense() const;
  // this - other, merged by index; exact zeros are kept out of the result
  SparseAlphaVec minus(const SparseAlphaVec& other) const;
  void scatter_into(double* out, double scale = 1.0) const;
};

// Block s (0-based, s < r1+r2) holding (x_i, 1).
SparseAlphaVec indicator_vector(const Vec& xi, Index s, const ModelDims& dims);

// v^i = v^{i,j1} - v^{i,r1+j2} with (j1,j2) = active_indices(p, xi).
SparseAlphaVec active_difference_vector(const LDerParams& p, const Vec& xi);

double mse(const LDerParams& p, const TrainingSet& t);

// Evaluation-side helpers on prediction vectors.
double mse_of(const Vec& y, const Vec& yhat);

// (1/m) sum |y_i - yhat_i| / |y_i|; +inf when some y_i == 0 (the harness
// reports that as "undefined").
double mape(const Vec& y, const Vec& yhat);

// (2/m) sum (predict(x_i) - y_i) v^i, densely materialized. Exact gradient
// wherever both argmaxes are unique; ties resolve to the lowest index.
Vec grad_mse(const LDerParams& p, const TrainingSet& batch);

// Central-difference oracle, (f(a + h e_k) - f(a - h e_k)) / 2h per coordinate.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& alpha,
                     double h);

}  // namespace lder

#endif  // LDER_LOSS_HPP
