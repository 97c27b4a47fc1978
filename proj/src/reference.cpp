#include "lder/reference.hpp"

#include <limits>

namespace lder::reference {

double predict(const LDerParams& p, const Vec& x) {
  const Index n = p.W.cols();
  double first = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < p.W.rows(); ++i) {
    double dot = 0.0;
    for (Index j = 0; j < n; ++j) dot += p.W(i, j) * x(j);
    dot += p.a(i);
    if (dot > first) first = dot;
  }
  double second = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < p.M.rows(); ++i) {
    double dot = 0.0;
    for (Index j = 0; j < n; ++j) dot += p.M(i, j) * x(j);
    dot += p.b(i);
    if (dot > second) second = dot;
  }
  return first - second;
}

Vec predict_batch(const LDerParams& p, const Mat& X) {
  Vec out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const Vec xi = X.row(i);
    out(i) = reference::predict(p, xi);
  }
  return out;
}

double mse(const LDerParams& p, const Mat& X, const Vec& y) {
  double sum = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const Vec xi = X.row(i);
    const double r = y(i) - reference::predict(p, xi);
    sum += r * r;
  }
  return sum / static_cast<double>(X.rows());
}

Vec grad_mse(const LDerParams& p, const Mat& X, const Vec& y) {
  const ModelDims d = p.dims();
  const Index m = X.rows();
  Vec g = Vec::Zero(d.flat_size());
  for (Index i = 0; i < m; ++i) {
    const Vec xi = X.row(i);
    Index j1 = 0, j2 = 0;
    double first = -std::numeric_limits<double>::infinity();
    for (Index r = 0; r < d.r1; ++r) {
      double v = p.W.row(r).dot(xi) + p.a(r);
      if (v > first) {
        first = v;
        j1 = r;
      }
    }
    double second = -std::numeric_limits<double>::infinity();
    for (Index r = 0; r < d.r2; ++r) {
      double v = p.M.row(r).dot(xi) + p.b(r);
      if (v > second) {
        second = v;
        j2 = r;
      }
    }
    const double coef = 2.0 / static_cast<double>(m) * (first - second - y(i));
    const Index base1 = j1 * (d.n + 1);
    const Index base2 = (d.r1 + j2) * (d.n + 1);
    for (Index j = 0; j < d.n; ++j) {
      g(base1 + j) += coef * xi(j);
      g(base2 + j) -= coef * xi(j);
    }
    g(base1 + d.n) += coef;
    g(base2 + d.n) -= coef;
  }
  return g;
}

}  // namespace lder::reference
