#include "lder/dccp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "lder/sgd.hpp"

namespace lder {

AffineOnAlpha linearize_branch(Branch branch, const Vec& alpha_k, const Vec& xi,
                               const ModelDims& dims) {
  if (alpha_k.size() != dims.flat_size())
    throw DimensionError("linearize_branch: flat vector length mismatch");
  const LDerParams p = unflatten(alpha_k, dims);
  if (xi.size() != dims.n)
    throw DimensionError("linearize_branch: input length does not match dims.n");
  const auto [j1, j2] = active_indices(p, xi);
  AffineOnAlpha lin;
  if (branch == Branch::DilationA) {
    lin.gradient = indicator_vector(xi, j1, dims);
    lin.offset = dilation(p.a, p.W * xi) - lin.gradient.dot(alpha_k);
  } else {
    lin.gradient = indicator_vector(xi, dims.r1 + j2, dims);
    lin.offset = dilation(p.b, p.M * xi) - lin.gradient.dot(alpha_k);
  }
  return lin;
}

qp::QpProblem assemble_ccp_subproblem(const Vec& alpha_k, const TrainingSet& t,
                                      double t_k, const ModelDims& dims) {
  check_training_set(t);
  if (alpha_k.size() != dims.flat_size())
    throw DimensionError("assemble_ccp_subproblem: flat vector length mismatch");
  if (!(t_k > 0.0)) throw DomainError("assemble_ccp_subproblem: penalty must be positive");
  const Index D = dims.flat_size();
  const Index m = t.size();
  const Index r1 = dims.r1, r2 = dims.r2, n = dims.n;
  const Index nvar = D + 2 * m;          // (alpha, xi, s)
  const Index nrow = m * (r1 + r2) + m;  // relaxed rows plus s_i >= 0

  const LDerParams anchor = unflatten(alpha_k, dims);

  Vec qdiag = Vec::Zero(nvar);
  qdiag.segment(D, m).setConstant(2.0 / static_cast<double>(m));
  Vec c = Vec::Zero(nvar);
  c.segment(D + m, m).setConstant(t_k);

  std::vector<qp::SparseMatrix::Triplet> trip;
  trip.reserve(static_cast<std::size_t>(nrow) * (2 * (n + 1) + 2));
  Vec lower = Vec::Constant(nrow, -std::numeric_limits<double>::infinity());
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
    const Index xii = D + i;
    const Index si = D + m + i;
    // first branch's pieces against the tangent of the second branch
    for (Index l = 0; l < r1; ++l) {
      add_block(l, xi, +1.0);
      add_block(r1 + j2, xi, -1.0);
      trip.push_back({row, xii, +1.0});
      trip.push_back({row, si, -1.0});
      upper(row) = t.y(i);
      ++row;
    }
    // second branch's pieces against the tangent of the first branch
    for (Index l = 0; l < r2; ++l) {
      add_block(r1 + l, xi, +1.0);
      add_block(j1, xi, -1.0);
      trip.push_back({row, xii, -1.0});
      trip.push_back({row, si, -1.0});
      upper(row) = -t.y(i);
      ++row;
    }
  }
  for (Index i = 0; i < m; ++i) {  // 0 <= s_i
    trip.push_back({row, D + m + i, 1.0});
    lower(row) = 0.0;
    upper(row) = std::numeric_limits<double>::infinity();
    ++row;
  }

  auto a = qp::SparseMatrix::from_triplets(nrow, nvar, std::move(trip));
  return qp::make_qp(qp::QuadTerm::diagonal(std::move(qdiag)), std::move(c),
                     std::move(a), std::move(lower), std::move(upper));
}

std::pair<LDerParams, TrainReport> train_dccp(const TrainingSet& t,
                                              const ModelDims& dims,
                                              const CcpConfig& cfg) {
  check_training_set(t);
  if (t.dim() != dims.n)
    throw DimensionError("train_dccp: training set dimension does not match dims.n");
  if (!(cfg.mu > 1.0)) throw DomainError("train_dccp: mu must exceed 1");
  if (!(cfg.t0 > 0.0) || !(cfg.t_max > 0.0) || cfg.t0 > cfg.t_max)
    throw DomainError("train_dccp: penalty schedule requires 0 < t0 <= t_max");
  if (cfg.max_outer < 1) throw DomainError("train_dccp: max_outer must be positive");

  const auto start = std::chrono::steady_clock::now();
  const Index D = dims.flat_size();
  const Index m = t.size();

  LDerParams params = init_params(dims, cfg.seed, cfg.init_scale);
  Vec alpha = flatten(params);

  TrainReport report;
  report.loss_trace.push_back(mse(params, t));
  report.termination = Termination::MaxIter;

  Vec best_alpha = alpha;
  double best_mse = report.loss_trace.front();
  Vec final_xi = Vec::Zero(m);

  std::optional<qp::WarmStart> warm;
  qp::QpSettings qs;
  qs.tol = cfg.qp_tol;
  qs.max_iter = cfg.qp_max_iter;

  double penalty = cfg.t0;
  double prev_obj = std::numeric_limits<double>::infinity();

  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    const qp::QpProblem prob = assemble_ccp_subproblem(alpha, t, penalty, dims);
    const qp::QpSolution sol = qp::solve_qp(prob, qs, warm);
    report.iterations = outer;
    report.penalty_trace.push_back(penalty);
    if (sol.status == qp::QpStatus::InfeasibleSuspected || !sol.x.allFinite()) {
      report.termination = Termination::SubproblemFailure;
      break;
    }
    warm = qp::WarmStart{sol.x, sol.duals};
    alpha = sol.x.head(D);
    final_xi = sol.x.segment(D, m);
    const double slack_sum = sol.x.tail(m).cwiseMax(0.0).sum();
    report.slack_trace.push_back(slack_sum);

    params = unflatten(alpha, dims);
    const double cur = mse(params, t);
    report.loss_trace.push_back(cur);
    if (cur < best_mse) {
      best_mse = cur;
      best_alpha = alpha;
    }

    const double obj = prob.objective(sol.x);
    const bool settled =
        std::isfinite(prev_obj) &&
        std::abs(obj - prev_obj) <= cfg.converge_tol * (1.0 + std::abs(prev_obj));
    if (settled && slack_sum <= cfg.slack_tol) {
      report.termination = Termination::Converged;
      break;
    }
    prev_obj = obj;
    penalty = std::min(cfg.mu * penalty, cfg.t_max);
  }

  report.final_alpha = alpha;
  report.final_xi = final_xi;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {unflatten(best_alpha, dims), std::move(report)};
}

}  // namespace lder
