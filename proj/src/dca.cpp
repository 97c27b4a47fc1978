#include "lder/dca.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "lder/kernels.hpp"
#include "lder/sgd.hpp"

namespace lder {

namespace {

// tau1 = first-branch max - y_i, tau2 = second-branch max, and the supporting
// lines of both at the given active rows.
struct SampleTerms {
  double tau1, tau2, line1, line2;
};

SampleTerms sample_terms(const LDerParams& p, const Vec& xi, double yi, Index j1,
                         Index j2) {
  double first = -std::numeric_limits<double>::infinity();
  for (Index r = 0; r < p.W.rows(); ++r)
    first = std::max(first, p.W.row(r).dot(xi) + p.a(r));
  double second = -std::numeric_limits<double>::infinity();
  for (Index r = 0; r < p.M.rows(); ++r)
    second = std::max(second, p.M.row(r).dot(xi) + p.b(r));
  SampleTerms s;
  s.tau1 = first - yi;
  s.tau2 = second;
  s.line1 = p.W.row(j1).dot(xi) + p.a(j1) - yi;
  s.line2 = p.M.row(j2).dot(xi) + p.b(j2);
  return s;
}

}  // namespace

double phi_from_active(const LDerParams& p, const Vec& xi, double yi, Index j1,
                       Index j2) {
  const double line1 = p.W.row(j1).dot(xi) + p.a(j1) - yi;
  const double line2 = p.M.row(j2).dot(xi) + p.b(j2);
  return -std::min(line1, line2);
}

double phi(Index i, const Vec& alpha, const Vec& anchor, const TrainingSet& t,
           const ModelDims& dims) {
  check_training_set(t);
  if (i < 0 || i >= t.size()) throw IndexError("phi: sample index out of range");
  const LDerParams at_anchor = unflatten(anchor, dims);
  const Vec xi = t.X.row(i);
  const auto [j1, j2] = active_indices(at_anchor, xi);
  const LDerParams p = unflatten(alpha, dims);
  return phi_from_active(p, xi, t.y(i), j1, j2);
}

DcDecomposition::DcDecomposition(TrainingSet t, const Vec& anchor,
                                 const ModelDims& dims)
    : t_(std::move(t)), dims_(dims) {
  check_training_set(t_);
  const LDerParams at_anchor = unflatten(anchor, dims);
  const Index m = t_.size();
  j1_.resize(m);
  j2_.resize(m);
  for (Index i = 0; i < m; ++i) {
    const Vec xi = t_.X.row(i);
    const auto [j1, j2] = active_indices(at_anchor, xi);
    j1_[i] = j1;
    j2_[i] = j2;
  }
}

double DcDecomposition::G(const Vec& alpha) const {
  const LDerParams p = unflatten(alpha, dims_);
  const Index m = t_.size();
  const double sum = kernels::chunked_sum(m, [&](std::ptrdiff_t i) {
    const Vec xi = t_.X.row(i);
    const SampleTerms s = sample_terms(p, xi, t_.y(i), j1_[i], j2_[i]);
    const double ph = -std::min(s.line1, s.line2);
    const double u = s.tau1 + ph;
    const double v = s.tau2 + ph;
    return u * u + v * v;
  });
  return 2.0 * sum / static_cast<double>(m);
}

double DcDecomposition::H(const Vec& alpha) const {
  const LDerParams p = unflatten(alpha, dims_);
  const Index m = t_.size();
  const double sum = kernels::chunked_sum(m, [&](std::ptrdiff_t i) {
    const Vec xi = t_.X.row(i);
    const SampleTerms s = sample_terms(p, xi, t_.y(i), j1_[i], j2_[i]);
    const double ph = -std::min(s.line1, s.line2);
    const double w = s.tau1 + s.tau2 + 2.0 * ph;
    return w * w;
  });
  return sum / static_cast<double>(m);
}

DcDecomposition dc_components(const TrainingSet& t, const Vec& anchor,
                              const ModelDims& dims) {
  return DcDecomposition(t, anchor, dims);
}

Vec dca_beta(const Vec& alpha, const TrainingSet& t, const ModelDims& dims) {
  return grad_mse(unflatten(alpha, dims), t);
}

qp::QpProblem assemble_dca_subproblem(const Vec& alpha_t, const Vec& beta,
                                      const TrainingSet& t, const ModelDims& dims) {
  check_training_set(t);
  const Index D = dims.flat_size();
  if (alpha_t.size() != D || beta.size() != D)
    throw DimensionError("assemble_dca_subproblem: flat vector length mismatch");
  const Index m = t.size();
  const Index r1 = dims.r1, r2 = dims.r2, n = dims.n;
  const Index nvar = D + 2 * m;
  const Index nrow = 2 * m * (r1 + r2);

  const LDerParams anchor = unflatten(alpha_t, dims);

  Vec qdiag = Vec::Zero(nvar);
  qdiag.segment(D, 2 * m).setConstant(4.0 / static_cast<double>(m));
  Vec c = Vec::Zero(nvar);
  c.head(D) = -beta;

  std::vector<qp::SparseMatrix::Triplet> trip;
  trip.reserve(static_cast<std::size_t>(nrow) * (2 * (n + 1) + 1));
  Vec upper(nrow);

  Index row = 0;
  auto add_block = [&](Index block, const Vec& xi, double sign) {
    const Index base = block * (n + 1);
    for (Index jj = 0; jj < n; ++jj)
      if (xi(jj) != 0.0) trip.push_back({row, base + jj, sign * xi(jj)});
    trip.push_back({row, base + n, sign});
  };

  for (Index i = 0; i < m; ++i) {
    const Vec xi = t.X.row(i);
    const auto [j1, j2] = active_indices(anchor, xi);
    const Index qi = D + i;
    const Index pi = D + m + i;
    for (Index l = 0; l < r1; ++l) {  // <v^{i,l} - v^{i,j1}, alpha> <= q_i
      if (l != j1) {
        add_block(l, xi, +1.0);
        add_block(j1, xi, -1.0);
      }
      trip.push_back({row, qi, -1.0});
      upper(row) = 0.0;
      ++row;
    }
    for (Index l = 0; l < r1; ++l) {  // <v^{i,l} - v^{i,r1+j2}, alpha> <= q_i + y_i
      add_block(l, xi, +1.0);
      add_block(r1 + j2, xi, -1.0);
      trip.push_back({row, qi, -1.0});
      upper(row) = t.y(i);
      ++row;
    }
    for (Index l = 0; l < r2; ++l) {  // <v^{i,r1+l} - v^{i,j1}, alpha> <= p_i - y_i
      add_block(r1 + l, xi, +1.0);
      add_block(j1, xi, -1.0);
      trip.push_back({row, pi, -1.0});
      upper(row) = -t.y(i);
      ++row;
    }
    for (Index l = 0; l < r2; ++l) {  // <v^{i,r1+l} - v^{i,r1+j2}, alpha> <= p_i
      if (l != j2) {
        add_block(r1 + l, xi, +1.0);
        add_block(r1 + j2, xi, -1.0);
      }
      trip.push_back({row, pi, -1.0});
      upper(row) = 0.0;
      ++row;
    }
  }

  auto a = qp::SparseMatrix::from_triplets(nrow, nvar, std::move(trip));
  return qp::make_qp_upper(qp::QuadTerm::diagonal(std::move(qdiag)), std::move(c),
                           std::move(a), std::move(upper));
}

std::pair<LDerParams, TrainReport> train_dca(const TrainingSet& t,
                                             const ModelDims& dims,
                                             const DcaConfig& cfg) {
  check_training_set(t);
  if (t.dim() != dims.n)
    throw DimensionError("train_dca: training set dimension does not match dims.n");
  if (!(cfg.epsilon > 0.0)) throw DomainError("train_dca: epsilon must be positive");
  if (cfg.max_outer < 1) throw DomainError("train_dca: max_outer must be positive");

  const auto start = std::chrono::steady_clock::now();
  const Index D = dims.flat_size();

  LDerParams params = init_params(dims, cfg.seed, cfg.init_scale);
  Vec alpha = flatten(params);
  double prev = mse(params, t);

  TrainReport report;
  report.loss_trace.push_back(prev);
  report.termination = Termination::MaxIter;

  Vec best_alpha = alpha;
  double best_mse = prev;
  std::optional<qp::WarmStart> warm;

  qp::QpSettings qs;
  qs.tol = cfg.qp_tol;
  qs.max_iter = cfg.qp_max_iter;

  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    const Vec beta = dca_beta(alpha, t, dims);
    const qp::QpProblem prob = assemble_dca_subproblem(alpha, beta, t, dims);
    const qp::QpSolution sol = qp::solve_qp(prob, qs, warm);
    report.iterations = outer;
    if (sol.status == qp::QpStatus::InfeasibleSuspected || !sol.x.allFinite()) {
      report.termination = Termination::SubproblemFailure;
      alpha = best_alpha;
      break;
    }
    warm = qp::WarmStart{sol.x, sol.duals};
    alpha = sol.x.head(D);
    params = unflatten(alpha, dims);
    const double cur = mse(params, t);
    report.loss_trace.push_back(cur);
    if (cur < best_mse) {
      best_mse = cur;
      best_alpha = alpha;
    }
    const bool stop = std::abs(cur - prev) <= cfg.epsilon * (1.0 + prev);
    prev = cur;
    if (stop) {
      report.termination = Termination::Converged;
      break;
    }
  }

  params = unflatten(alpha, dims);
  report.final_alpha = alpha;
  report.final_subgradient_norm =
      dca_beta(alpha, t, dims).lpNorm<Eigen::Infinity>();
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(params), std::move(report)};
}

}  // namespace lder
