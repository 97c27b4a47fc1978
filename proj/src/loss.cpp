#include "lder/loss.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lder/kernels.hpp"

namespace lder {

void check_training_set(const TrainingSet& t) {
  if (t.X.rows() < 1) throw DomainError("training set is empty");
  if (t.X.rows() != t.y.size())
    throw DimensionError("training set: X row count does not match y length");
  if (t.X.cols() < 1) throw DimensionError("training set: zero feature columns");
}

double SparseAlphaVec::dot(const Vec& alpha) const {
  if (alpha.size() != length)
    throw DimensionError("SparseAlphaVec::dot: flat vector length mismatch");
  double s = 0.0;
  for (const auto& [idx, v] : entries) s += v * alpha(idx);
  return s;
}

Vec SparseAlphaVec::dense() const {
  Vec out = Vec::Zero(length);
  for (const auto& [idx, v] : entries) out(idx) = v;
  return out;
}

SparseAlphaVec SparseAlphaVec::minus(const SparseAlphaVec& other) const {
  if (other.length != length)
    throw DimensionError("SparseAlphaVec::minus: length mismatch");
  SparseAlphaVec out;
  out.length = length;
  out.entries.reserve(entries.size() + other.entries.size());
  std::size_t i = 0, j = 0;
  while (i < entries.size() || j < other.entries.size()) {
    if (j == other.entries.size() ||
        (i < entries.size() && entries[i].first < other.entries[j].first)) {
      out.entries.push_back(entries[i++]);
    } else if (i == entries.size() || other.entries[j].first < entries[i].first) {
      out.entries.emplace_back(other.entries[j].first, -other.entries[j].second);
      ++j;
    } else {
      const double v = entries[i].second - other.entries[j].second;
      if (v != 0.0) out.entries.emplace_back(entries[i].first, v);
      ++i;
      ++j;
    }
  }
  return out;
}

void SparseAlphaVec::scatter_into(double* out, double scale) const {
  for (const auto& [idx, v] : entries) out[idx] += scale * v;
}

SparseAlphaVec indicator_vector(const Vec& xi, Index s, const ModelDims& dims) {
  if (xi.size() != dims.n)
    throw DimensionError("indicator_vector: input length does not match dims.n");
  if (s < 0 || s >= dims.r1 + dims.r2) {
    std::ostringstream os;
    os << "indicator_vector: block index " << s << " out of range [0, "
       << dims.r1 + dims.r2 << ")";
    throw IndexError(os.str());
  }
  SparseAlphaVec v;
  v.length = dims.flat_size();
  v.entries.reserve(dims.n + 1);
  const Index base = s * (dims.n + 1);
  for (Index j = 0; j < dims.n; ++j) v.entries.emplace_back(base + j, xi(j));
  v.entries.emplace_back(base + dims.n, 1.0);
  return v;
}

SparseAlphaVec active_difference_vector(const LDerParams& p, const Vec& xi) {
  const ModelDims d = p.dims();
  const auto [j1, j2] = active_indices(p, xi);
  return indicator_vector(xi, j1, d).minus(indicator_vector(xi, d.r1 + j2, d));
}

double mse(const LDerParams& p, const TrainingSet& t) {
  check_training_set(t);
  if (t.dim() != p.W.cols())
    throw DimensionError("mse: training set dimension does not match model");
  const Index m = t.size();
  const double sum = kernels::chunked_sum(m, [&](std::ptrdiff_t i) {
    const Vec xi = t.X.row(i);
    const double r = t.y(i) - predict(p, xi);
    return r * r;
  });
  return sum / static_cast<double>(m);
}

double mse_of(const Vec& y, const Vec& yhat) {
  if (y.size() != yhat.size()) throw DimensionError("mse_of: length mismatch");
  if (y.size() == 0) throw DomainError("mse_of: empty vectors");
  const double sum = kernels::chunked_sum(y.size(), [&](std::ptrdiff_t i) {
    const double r = y(i) - yhat(i);
    return r * r;
  });
  return sum / static_cast<double>(y.size());
}

double mape(const Vec& y, const Vec& yhat) {
  if (y.size() != yhat.size()) throw DimensionError("mape: length mismatch");
  if (y.size() == 0) throw DomainError("mape: empty vectors");
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) == 0.0) return std::numeric_limits<double>::infinity();
  const double sum = kernels::chunked_sum(
      y.size(), [&](std::ptrdiff_t i) { return std::abs(y(i) - yhat(i)) / std::abs(y(i)); });
  return sum / static_cast<double>(y.size());
}

Vec grad_mse(const LDerParams& p, const TrainingSet& batch) {
  check_training_set(batch);
  if (batch.dim() != p.W.cols())
    throw DimensionError("grad_mse: batch dimension does not match model");
  const ModelDims d = p.dims();
  const Index m = batch.size();
  const double scale = 2.0 / static_cast<double>(m);
  Vec g(d.flat_size());
  kernels::chunked_accumulate(m, d.flat_size(), g.data(), [&](std::ptrdiff_t i, double* acc) {
    const Vec xi = batch.X.row(i);
    const auto [j1, j2] = active_indices(p, xi);
    const double resid = predict(p, xi) - batch.y(i);
    const double coef = scale * resid;
    const Index base1 = j1 * (d.n + 1);
    const Index base2 = (d.r1 + j2) * (d.n + 1);
    for (Index j = 0; j < d.n; ++j) {
      acc[base1 + j] += coef * xi(j);
      acc[base2 + j] -= coef * xi(j);
    }
    acc[base1 + d.n] += coef;
    acc[base2 + d.n] -= coef;
  });
  return g;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& alpha,
                     double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: h must be positive");
  Vec g(alpha.size());
  Vec probe = alpha;
  for (Index k = 0; k < alpha.size(); ++k) {
    const double orig = probe(k);
    probe(k) = orig + h;
    const double fp = f(probe);
    probe(k) = orig - h;
    const double fm = f(probe);
    probe(k) = orig;
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace lder
