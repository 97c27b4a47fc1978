#ifndef LDER_TESTS_QP_ORACLES_HPP
#define LDER_TESTS_QP_ORACLES_HPP

// Random strictly convex QPs with a known optimum, built by picking an active
// set and assembling the KKT conditions directly: choose x*, positive duals
// on the active rows, tight bounds there and slack elsewhere, then back out
// c = -(Q x* + A' y*). Independent of the solver's own path.

#include <random>
#include <vector>

#include "lder/qp.hpp"
#include "lder/rng.hpp"

namespace lder::testing {

struct KnownQp {
  qp::QpProblem prob;
  Vec x_star;
  Vec y_star;
};

inline KnownQp make_known_qp(std::mt19937_64& gen, Index d, Index k) {
  Mat B(d, d);
  for (Index i = 0; i < d * d; ++i) B(i / d, i % d) = rng::uniform(gen, -1, 1);
  Mat Q = B * B.transpose();
  Q.diagonal().array() += 0.2 + rng::uniform01(gen);

  Mat A(k, d);
  for (Index i = 0; i < k * d; ++i) A(i / d, i % d) = rng::uniform(gen, -1, 1);

  Vec x_star(d);
  for (Index i = 0; i < d; ++i) x_star(i) = rng::uniform(gen, -1, 1);

  const Index max_active = std::min(d, k);
  const Index na = static_cast<Index>(gen() % static_cast<std::uint64_t>(max_active + 1));
  std::vector<Index> rows(k);
  std::iota(rows.begin(), rows.end(), Index{0});
  for (Index i = k - 1; i > 0; --i) {
    const Index j = static_cast<Index>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(rows[i], rows[j]);
  }

  Vec y_star = Vec::Zero(k);
  Vec u(k);
  const Vec ax = A * x_star;
  for (Index i = 0; i < k; ++i) u(i) = ax(i) + rng::uniform(gen, 0.5, 2.0);
  for (Index i = 0; i < na; ++i) {
    const Index r = rows[i];
    u(r) = ax(r);
    y_star(r) = rng::uniform(gen, 0.1, 2.0);
  }
  const Vec c = -(Q * x_star + A.transpose() * y_star);

  KnownQp out;
  out.prob = qp::make_qp_upper(qp::QuadTerm::from_dense(std::move(Q)), c,
                               qp::SparseMatrix::from_dense(A), u);
  out.x_star = x_star;
  out.y_star = y_star;
  return out;
}

}  // namespace lder::testing

#endif
