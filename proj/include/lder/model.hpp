#ifndef LDER_MODEL_HPP
#define LDER_MODEL_HPP

/// Linear dilation-erosion regressor: the difference of two max-affine
/// functions,
///
///   predict(x) = max_i (w_i'x + a_i)  -  max_j (m_j'x + b_j),
///
/// together with the elementary morphological operators and the flat
/// parameter encoding used by the trainers. The flat vector interleaves each
/// weight row with its bias:
///
///   alpha = (w_1', a_1, ..., w_r1', a_r1, m_1', b_1, ..., m_r2', b_r2).

#include <string>
#include <utility>

#include "lder/common.hpp"

namespace lder {

struct ModelDims {
  Index n = 0;   // input dimension
  Index r1 = 0;  // rows of the first (dilation) branch
  Index r2 = 0;  // rows of the second branch

  Index flat_size() const { return (r1 + r2) * (n + 1); }
  bool valid() const { return n >= 1 && r1 >= 1 && r2 >= 1; }
  bool operator==(const ModelDims&) const = default;
};

struct LDerParams {
  Mat W;  // r1 x n
  Vec a;  // r1
  Mat M;  // r2 x n
  Vec b;  // r2

  ModelDims dims() const { return {W.cols(), W.rows(), M.rows()}; }

  static LDerParams zeros(const ModelDims& d);
};

// Throws DimensionError unless W/a/M/b shapes are mutually consistent and
// nonempty.
void check_params(const LDerParams& p);

// max_j (offsets_j + x_j)
double dilation(const Vec& offsets, const Vec& x);

// min_j (offsets_j + x_j)
double erosion(const Vec& offsets, const Vec& x);

double predict(const LDerParams& p, const Vec& x);

// Elementwise predict over the rows of X; identical arithmetic to the scalar
// path, parallelized over rows.
Vec predict_batch(const LDerParams& p, const Mat& X);

// 0-based argmax row of each branch at x. Ties break to the lowest index.
std::pair<Index, Index> active_indices(const LDerParams& p, const Vec& x);

Vec flatten(const LDerParams& p);
LDerParams unflatten(const Vec& alpha, const ModelDims& dims);

// JSON model document {"n":..., "r1":..., "r2":..., "alpha":[...]}.
std::string model_to_json(const LDerParams& p);
LDerParams model_from_json(const std::string& text);
void save_model(const LDerParams& p, const std::string& path);
LDerParams load_model(const std::string& path);

}  // namespace lder

#endif  // LDER_MODEL_HPP
