#include "lder/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "lder/kernels.hpp"
#include "lder/rng.hpp"

namespace lder::qp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw DimensionError("SparseMatrix::from_triplets: entry out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  m.col_idx.reserve(triplets.size());
  m.val.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    m.col_idx.push_back(triplets[i].col);
    m.val.push_back(sum);
    m.row_ptr[triplets[i].row + 1]++;
    i = j;
  }
  for (Index r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];

  // column-compressed copy
  m.col_ptr.assign(cols + 1, 0);
  for (Index c : m.col_idx) m.col_ptr[c + 1]++;
  for (Index c = 0; c < cols; ++c) m.col_ptr[c + 1] += m.col_ptr[c];
  m.row_idx.resize(m.val.size());
  m.val_csc.resize(m.val.size());
  std::vector<Index> next(m.col_ptr.begin(), m.col_ptr.end() - 1);
  for (Index r = 0; r < rows; ++r) {
    for (Index p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
      const Index c = m.col_idx[p];
      const Index q = next[c]++;
      m.row_idx[q] = r;
      m.val_csc[q] = m.val[p];
    }
  }
  return m;
}

SparseMatrix SparseMatrix::from_dense(const Mat& dense) {
  std::vector<Triplet> t;
  for (Index r = 0; r < dense.rows(); ++r)
    for (Index c = 0; c < dense.cols(); ++c)
      if (dense(r, c) != 0.0) t.push_back({r, c, dense(r, c)});
  return from_triplets(dense.rows(), dense.cols(), std::move(t));
}

Mat SparseMatrix::dense() const {
  Mat out = Mat::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index p = row_ptr[r]; p < row_ptr[r + 1]; ++p) out(r, col_idx[p]) = val[p];
  return out;
}

void SparseMatrix::multiply(const Vec& x, Vec& out) const {
  if (x.size() != cols) throw DimensionError("SparseMatrix::multiply: size mismatch");
  out.resize(rows);
  kernels::parallel_for(rows, [&](std::ptrdiff_t r) {
    double s = 0.0;
    for (Index p = row_ptr[r]; p < row_ptr[r + 1]; ++p) s += val[p] * x(col_idx[p]);
    out(r) = s;
  });
}

void SparseMatrix::multiply_transpose(const Vec& w, Vec& out) const {
  if (w.size() != rows)
    throw DimensionError("SparseMatrix::multiply_transpose: size mismatch");
  out.resize(cols);
  kernels::parallel_for(cols, [&](std::ptrdiff_t c) {
    double s = 0.0;
    for (Index p = col_ptr[c]; p < col_ptr[c + 1]; ++p) s += val_csc[p] * w(row_idx[p]);
    out(c) = s;
  });
}

// ---------------------------------------------------------------------------
// QuadTerm

QuadTerm QuadTerm::diagonal(Vec d) {
  QuadTerm q;
  q.is_diag = true;
  q.diag = std::move(d);
  return q;
}

QuadTerm QuadTerm::from_dense(Mat m) {
  if (m.rows() != m.cols()) throw DimensionError("QuadTerm: matrix must be square");
  QuadTerm q;
  q.is_diag = false;
  q.dense = std::move(m);
  return q;
}

void QuadTerm::multiply(const Vec& x, Vec& out) const {
  if (is_diag) {
    out = diag.cwiseProduct(x);
  } else {
    out.noalias() = dense * x;
  }
}

double QuadTerm::max_abs() const {
  if (is_diag) return diag.size() ? diag.cwiseAbs().maxCoeff() : 0.0;
  return dense.size() ? dense.cwiseAbs().maxCoeff() : 0.0;
}

// ---------------------------------------------------------------------------
// QpProblem

QpProblem make_qp(QuadTerm q, Vec c, SparseMatrix a, Vec l, Vec u) {
  QpProblem p;
  p.Q = std::move(q);
  p.c = std::move(c);
  p.A = std::move(a);
  p.l = std::move(l);
  p.u = std::move(u);
  p.validate();
  return p;
}

QpProblem make_qp_upper(QuadTerm q, Vec c, SparseMatrix a, Vec u) {
  Vec l = Vec::Constant(a.rows, -kInf);
  return make_qp(std::move(q), std::move(c), std::move(a), std::move(l), std::move(u));
}

void QpProblem::validate() const {
  const Index d = c.size();
  if (d < 1) throw DimensionError("QpProblem: empty decision vector");
  if (Q.size() != d) throw DimensionError("QpProblem: Q size does not match c");
  if (!Q.is_diag && Q.dense.rows() > 0) {
    if (!Q.dense.isApprox(Q.dense.transpose(), 1e-12))
      throw DomainError("QpProblem: Q must be symmetric");
  }
  if (A.rows > 0 && A.cols != d)
    throw DimensionError("QpProblem: A column count does not match c");
  if (l.size() != A.rows || u.size() != A.rows)
    throw DimensionError("QpProblem: bound lengths do not match constraint count");

  // probabilistic PSD check: random Rayleigh quotients must be >= -1e-10
  std::mt19937_64 gen(0x9f2cull);
  Vec v(d), qv(d);
  for (int probe = 0; probe < 16; ++probe) {
    for (Index i = 0; i < d; ++i) v(i) = rng::uniform(gen, -1.0, 1.0);
    const double nrm2 = v.squaredNorm();
    if (nrm2 == 0.0) continue;
    Q.multiply(v, qv);
    if (v.dot(qv) / nrm2 < -1e-10)
      throw DomainError("QpProblem: Q fails the probabilistic PSD check");
  }
}

double QpProblem::objective(const Vec& x) const {
  Vec qx;
  Q.multiply(x, qx);
  return 0.5 * x.dot(qx) + c.dot(x);
}

void QpProblem::dump_json(const std::string& path) const {
  using nlohmann::json;
  json doc;
  Mat qd = Q.is_diag ? Mat(Q.diag.asDiagonal()) : Q.dense;
  json qrows = json::array();
  for (Index r = 0; r < qd.rows(); ++r)
    qrows.push_back(std::vector<double>(qd.row(r).begin(), qd.row(r).end()));
  doc["Q"] = qrows;
  doc["c"] = std::vector<double>(c.data(), c.data() + c.size());
  Mat ad = A.dense();
  json arows = json::array();
  for (Index r = 0; r < ad.rows(); ++r)
    arows.push_back(std::vector<double>(ad.row(r).begin(), ad.row(r).end()));
  doc["A"] = arows;
  auto bounds = [](const Vec& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) {
      if (std::isfinite(v(i)))
        arr.push_back(v(i));
      else
        arr.push_back(nullptr);
    }
    return arr;
  };
  doc["l"] = bounds(l);
  doc["u"] = bounds(u);
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open QP dump file for writing: " + path);
  out << doc.dump(2) << '\n';
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Solved:
      return "solved";
    case QpStatus::MaxIter:
      return "max_iter";
    case QpStatus::InfeasibleSuspected:
      return "infeasible-suspected";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Dense unpivoted LDL' on quasi-definite matrices (QDLDL-style), with the
// trailing update parallelized over columns.

namespace {

struct LdltFactor {
  Mat L;  // unit lower triangle in the strict lower part
  Vec d;

  bool factor(Mat a, double tiny) {
    const Index n = a.rows();
    d.resize(n);
    bool clean = true;
    for (Index j = 0; j < n; ++j) {
      double dj = a(j, j);
      if (std::abs(dj) < tiny) {
        dj = dj >= 0.0 ? tiny : -tiny;
        clean = false;
      }
      d(j) = dj;
      const Index tail = n - j - 1;
      if (tail > 0) {
        a.col(j).segment(j + 1, tail) /= dj;
        kernels::parallel_for(
            tail,
            [&](std::ptrdiff_t off) {
              const Index k = j + 1 + off;
              const double f = a(k, j) * dj;
              const Index len = n - k;
              a.col(k).segment(k, len).noalias() -= a.col(j).segment(k, len) * f;
            },
            64);
      }
    }
    L = std::move(a);
    return clean;
  }

  Vec solve(const Vec& b) const {
    const Index n = d.size();
    Vec x = b;
    for (Index j = 0; j < n; ++j) {
      const double xj = x(j);
      if (xj != 0.0)
        for (Index i = j + 1; i < n; ++i) x(i) -= L(i, j) * xj;
    }
    x.array() /= d.array();
    for (Index j = n - 1; j >= 0; --j) {
      double s = x(j);
      for (Index i = j + 1; i < n; ++i) s -= L(i, j) * x(i);
      x(j) = s;
    }
    return x;
  }
};

// ---------------------------------------------------------------------------
// Internal solver workspace

struct Solver {
  const QpProblem& prob;
  const QpSettings& st;
  Index d, k;

  Vec e;        // row scales
  double sc;    // cost scale
  Vec lb, ub;   // scaled bounds
  double rho;
  LdltFactor fac;

  Vec x, zb, yb, t;  // iterates; t = A x unscaled

  explicit Solver(const QpProblem& p, const QpSettings& s)
      : prob(p), st(s), d(p.dim()), k(p.constraints()) {
    e.resize(k);
    for (Index i = 0; i < k; ++i) {
      double mx = 0.0;
      for (Index pos = p.A.row_ptr[i]; pos < p.A.row_ptr[i + 1]; ++pos)
        mx = std::max(mx, std::abs(p.A.val[pos]));
      e(i) = mx > 0.0 ? 1.0 / mx : 1.0;
    }
    // pure max normalization, so rescaled copies of a problem reduce to the
    // same internal iteration
    sc = 1.0 / std::max({prob.Q.max_abs(), prob.c.lpNorm<Eigen::Infinity>(), 1e-12});
    lb.resize(k);
    ub.resize(k);
    for (Index i = 0; i < k; ++i) {
      lb(i) = std::isfinite(prob.l(i)) ? e(i) * prob.l(i) : -kInf;
      ub(i) = std::isfinite(prob.u(i)) ? e(i) * prob.u(i) : kInf;
    }
    rho = st.rho0;
  }

  void build_and_factor() {
    Mat m;
    if (prob.Q.is_diag) {
      m = Mat::Zero(d, d);
      m.diagonal() = sc * prob.Q.diag;
    } else {
      m = sc * prob.Q.dense;
    }
    m.diagonal().array() += st.sigma;
    // + A' Diag(rho e^2) A, scattered row by row into the lower triangle
    const auto& A = prob.A;
    for (Index r = 0; r < k; ++r) {
      const double w = rho * e(r) * e(r);
      for (Index p1 = A.row_ptr[r]; p1 < A.row_ptr[r + 1]; ++p1) {
        const Index c1 = A.col_idx[p1];
        const double v1 = w * A.val[p1];
        for (Index p2 = A.row_ptr[r]; p2 < A.row_ptr[r + 1]; ++p2) {
          const Index c2 = A.col_idx[p2];
          if (c2 <= c1) m(c1, c2) += v1 * A.val[p2];
        }
      }
    }
    fac.factor(std::move(m), 1e-14);
  }

  // unscaled duals from the scaled ones
  Vec unscale_duals(const Vec& yb_scaled) const {
    Vec y(k);
    for (Index i = 0; i < k; ++i) y(i) = e(i) * yb_scaled(i) / sc;
    return y;
  }

  std::pair<double, double> residuals(const Vec& xx, const Vec& tt, const Vec& y) const {
    double prim = 0.0;
    for (Index i = 0; i < k; ++i) {
      if (std::isfinite(prob.u(i))) prim = std::max(prim, tt(i) - prob.u(i));
      if (std::isfinite(prob.l(i))) prim = std::max(prim, prob.l(i) - tt(i));
    }
    Vec qx, aty;
    prob.Q.multiply(xx, qx);
    if (k > 0) {
      prob.A.multiply_transpose(y, aty);
    } else {
      aty = Vec::Zero(d);
    }
    const double dual = (qx + prob.c + aty).lpNorm<Eigen::Infinity>();
    return {prim, dual};
  }
};

// One equality-constrained KKT solve on a fixed active set, with static
// regularization and iterative refinement against the exact system.
bool polish_solve(const QpProblem& prob, const std::vector<Index>& act,
                  const std::vector<int>& side, Vec& x_out, Vec& y_out,
                  std::pair<double, double>& res_out) {
  const Index d = prob.dim();
  const Index k = prob.constraints();
  const Index na = static_cast<Index>(act.size());
  const Index nk = d + na;
  Mat kkt = Mat::Zero(nk, nk);
  if (prob.Q.is_diag) {
    kkt.topLeftCorner(d, d).diagonal() = prob.Q.diag;
  } else {
    kkt.topLeftCorner(d, d) = prob.Q.dense;
  }
  const double delta = 1e-9 * (1.0 + prob.Q.max_abs());
  kkt.topLeftCorner(d, d).diagonal().array() += delta;
  for (Index r = 0; r < na; ++r) {
    const Index row = act[r];
    for (Index p = prob.A.row_ptr[row]; p < prob.A.row_ptr[row + 1]; ++p) {
      kkt(d + r, prob.A.col_idx[p]) = prob.A.val[p];
      kkt(prob.A.col_idx[p], d + r) = prob.A.val[p];
    }
    kkt(d + r, d + r) = -delta;
  }
  Vec rhs(nk);
  rhs.head(d) = -prob.c;
  for (Index r = 0; r < na; ++r)
    rhs(d + r) = side[r] > 0 ? prob.u(act[r]) : prob.l(act[r]);

  LdltFactor fac;
  fac.factor(kkt, 1e-13);

  // exact (unregularized) KKT residual drives the refinement
  auto true_mult = [&](const Vec& v) {
    Vec out(nk);
    Vec qx;
    prob.Q.multiply(v.head(d), qx);
    out.head(d) = qx;
    for (Index r = 0; r < na; ++r) {
      const Index row = act[r];
      double s = 0.0;
      for (Index p = prob.A.row_ptr[row]; p < prob.A.row_ptr[row + 1]; ++p)
        s += prob.A.val[p] * v(prob.A.col_idx[p]);
      out(d + r) = s;
      for (Index p = prob.A.row_ptr[row]; p < prob.A.row_ptr[row + 1]; ++p)
        out(prob.A.col_idx[p]) += prob.A.val[p] * v(d + r);
    }
    return out;
  };

  const double rhs_scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  auto refine = [&](auto&& solve_once, Vec sol0) {
    Vec best = sol0;
    double best_r = kInf;
    Vec sol = std::move(sol0);
    for (int step = 0; step < 10; ++step) {
      const Vec resid = rhs - true_mult(sol);
      const double r = resid.lpNorm<Eigen::Infinity>();
      if (r < best_r) {
        best_r = r;
        best = sol;
      }
      if (!(r > 1e-13 * rhs_scale) || !std::isfinite(r)) break;
      sol += solve_once(resid);
    }
    return std::make_pair(std::move(best), best_r);
  };

  auto [sol, lin_resid] =
      refine([&](const Vec& b) { return fac.solve(b); }, fac.solve(rhs));
  if (lin_resid > 1e-10 * rhs_scale) {
    // near-singular working set: fall back to a rank-revealing solve
    Eigen::FullPivLU<Mat> lu(kkt);
    auto [sol2, lin2] =
        refine([&](const Vec& b) { return Vec(lu.solve(b)); }, Vec(lu.solve(rhs)));
    if (lin2 < lin_resid) {
      sol = std::move(sol2);
      lin_resid = lin2;
    }
  }
  if (!sol.allFinite()) return false;

  Vec xp = sol.head(d);
  Vec yp = Vec::Zero(k);
  for (Index r = 0; r < na; ++r) yp(act[r]) = sol(d + r);
  res_out = kkt_residual(prob, xp, yp);
  if (!std::isfinite(res_out.first) || !std::isfinite(res_out.second)) return false;
  x_out = std::move(xp);
  y_out = std::move(yp);
  return true;
}

// Rows whose multiplier pushes the wrong way for their side.
std::vector<Index> sign_violations(const std::vector<Index>& act,
                                   const std::vector<int>& side, const Vec& y) {
  std::vector<Index> bad;
  for (std::size_t r = 0; r < act.size(); ++r) {
    const double nu = y(act[r]);
    if (side[r] > 0 && nu < -1e-7 * std::max(1.0, std::abs(nu))) bad.push_back(act[r]);
    if (side[r] < 0 && nu > 1e-7 * std::max(1.0, std::abs(nu))) bad.push_back(act[r]);
  }
  return bad;
}

void detect_active(const QpProblem& prob, const Vec& x, const Vec& y,
                   std::vector<Index>& act, std::vector<int>& side) {
  act.clear();
  side.clear();
  const Index k = prob.constraints();
  Vec t(k);
  if (k > 0) prob.A.multiply(x, t);
  // relative threshold keeps not-yet-decayed duals of inactive rows out
  const double ythr = 1e-6 * (k > 0 ? y.lpNorm<Eigen::Infinity>() : 0.0);
  for (Index i = 0; i < k; ++i) {
    const bool up_ok = std::isfinite(prob.u(i));
    const bool lo_ok = std::isfinite(prob.l(i));
    const double prox_u = up_ok ? t(i) - prob.u(i) : -kInf;  // > 0 means violated
    const double prox_l = lo_ok ? prob.l(i) - t(i) : -kInf;
    if (up_ok && (y(i) > ythr || prox_u >= -1e-7 * (1.0 + std::abs(prob.u(i))))) {
      act.push_back(i);
      side.push_back(+1);
    } else if (lo_ok &&
               (y(i) < -ythr || prox_l >= -1e-7 * (1.0 + std::abs(prob.l(i))))) {
      act.push_back(i);
      side.push_back(-1);
    }
  }
}

// Iterated active-set polish. Detect a working set from the incoming
// iterate, solve the equality KKT system, then repair the set: rows whose
// multiplier has the wrong sign are dropped, and re-detection from the
// polished point picks up rows that were missed (they show as tiny
// violations there). Keeps the best candidate seen.
bool polish(const QpProblem& prob, const Vec& x_in, const Vec& y_in, Vec& x_out,
            Vec& y_out, std::pair<double, double>& res_out) {
  const Index d = prob.dim();
  std::vector<Index> act, prev_act;
  std::vector<int> side, prev_side;
  detect_active(prob, x_in, y_in, act, side);

  bool have = false;
  Vec best_x, best_y;
  std::pair<double, double> best_res{kInf, kInf};

  for (int round = 0; round < 12; ++round) {
    if (static_cast<Index>(act.size()) > 4 * d + 50) break;  // degenerate guess
    if (round > 0 && act == prev_act && side == prev_side) break;
    prev_act = act;
    prev_side = side;

    Vec xp, yp;
    std::pair<double, double> rp;
    if (!polish_solve(prob, act, side, xp, yp, rp)) break;

    const auto bad = sign_violations(act, side, yp);
    if (!bad.empty()) {
      // drop the wrong-sign rows and try again on the reduced set
      std::vector<Index> next_act;
      std::vector<int> next_side;
      for (std::size_t r = 0; r < act.size(); ++r) {
        if (std::find(bad.begin(), bad.end(), act[r]) == bad.end()) {
          next_act.push_back(act[r]);
          next_side.push_back(side[r]);
        }
      }
      act = std::move(next_act);
      side = std::move(next_side);
      continue;
    }

    const double score = std::max(rp.first, rp.second);
    if (!have || score < std::max(best_res.first, best_res.second)) {
      best_x = xp;
      best_y = yp;
      best_res = rp;
      have = true;
      if (score <= 1e-14) break;
      detect_active(prob, xp, yp, act, side);  // pick up missed rows
    } else {
      break;
    }
  }
  if (!have) return false;
  x_out = std::move(best_x);
  y_out = std::move(best_y);
  res_out = best_res;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

std::pair<double, double> kkt_residual(const QpProblem& prob, const Vec& x,
                                       const Vec& duals) {
  if (x.size() != prob.dim())
    throw DimensionError("kkt_residual: x length does not match problem");
  if (duals.size() != prob.constraints())
    throw DimensionError("kkt_residual: dual length does not match constraints");
  const Index k = prob.constraints();
  double prim = 0.0;
  Vec aty = Vec::Zero(prob.dim());
  if (k > 0) {
    Vec t;
    prob.A.multiply(x, t);
    for (Index i = 0; i < k; ++i) {
      if (std::isfinite(prob.u(i))) prim = std::max(prim, t(i) - prob.u(i));
      if (std::isfinite(prob.l(i))) prim = std::max(prim, prob.l(i) - t(i));
    }
    prob.A.multiply_transpose(duals, aty);
  }
  Vec qx;
  prob.Q.multiply(x, qx);
  const double dual = (qx + prob.c + aty).lpNorm<Eigen::Infinity>();
  return {prim, dual};
}

QpSolution solve_qp(const QpProblem& prob, const QpSettings& st,
                    const std::optional<WarmStart>& warm) {
  prob.validate();
  if (!(st.tol > 0.0)) throw DomainError("solve_qp: tol must be positive");
  const Index d = prob.dim();
  const Index k = prob.constraints();

  QpSolution sol;

  // Unconstrained case: one regularized solve plus refinement.
  if (k == 0) {
    Solver ws(prob, st);
    ws.build_and_factor();
    Vec x = ws.fac.solve(-ws.sc * prob.c);
    for (int step = 0; step < 4; ++step) {
      Vec qx;
      prob.Q.multiply(x, qx);
      Vec resid = -(qx + prob.c);
      x += ws.fac.solve(ws.sc * resid);
    }
    sol.x = std::move(x);
    sol.duals = Vec(0);
    Vec qx;
    prob.Q.multiply(sol.x, qx);
    sol.primal_residual = 0.0;
    sol.dual_residual = (qx + prob.c).lpNorm<Eigen::Infinity>();
    sol.iterations = 1;
    sol.status = sol.dual_residual <= st.tol ? QpStatus::Solved : QpStatus::MaxIter;
    return sol;
  }

  Solver ws(prob, st);
  ws.build_and_factor();

  ws.x = (warm && warm->x.size() == d) ? warm->x : Vec::Zero(d);
  ws.t.resize(k);
  prob.A.multiply(ws.x, ws.t);
  if (warm && warm->duals.size() == k) {
    ws.yb.resize(k);
    for (Index i = 0; i < k; ++i) ws.yb(i) = ws.sc * warm->duals(i) / ws.e(i);
  } else {
    ws.yb = Vec::Zero(k);
  }
  ws.zb.resize(k);
  for (Index i = 0; i < k; ++i)
    ws.zb(i) = std::clamp(ws.e(i) * ws.t(i), ws.lb(i), ws.ub(i));

  const double ar = st.relaxation;
  Vec rhs(d), xt(d), tt(k), zt(k), zhat(k), scratch(k), tx(k);
  Vec best_x = ws.x, best_y = ws.unscale_duals(ws.yb);
  double best_score = kInf;
  std::pair<double, double> best_res{kInf, kInf};
  int it = 0;
  bool diverged = false;

  for (it = 1; it <= st.max_iter; ++it) {
    // x-step through the cached factorization
    for (Index i = 0; i < k; ++i) scratch(i) = ws.e(i) * (ws.rho * ws.zb(i) - ws.yb(i));
    prob.A.multiply_transpose(scratch, rhs);
    rhs.noalias() += st.sigma * ws.x - ws.sc * prob.c;
    xt = ws.fac.solve(rhs);
    prob.A.multiply(xt, tt);
    for (Index i = 0; i < k; ++i) zt(i) = ws.e(i) * tt(i);

    // over-relaxed updates
    ws.x = ar * xt + (1.0 - ar) * ws.x;
    zhat = ar * zt + (1.0 - ar) * ws.zb;
    for (Index i = 0; i < k; ++i) {
      const double v = zhat(i) + ws.yb(i) / ws.rho;
      ws.zb(i) = std::clamp(v, ws.lb(i), ws.ub(i));
      ws.yb(i) += ws.rho * (zhat(i) - ws.zb(i));
    }

    if (it % st.check_every == 0 || it == st.max_iter) {
      prob.A.multiply(ws.x, tx);
      const Vec y = ws.unscale_duals(ws.yb);
      const auto [prim, dual] = ws.residuals(ws.x, tx, y);
      const double score = std::max(prim, dual);
      if (score < best_score) {
        best_score = score;
        best_x = ws.x;
        best_y = y;
        best_res = {prim, dual};
      }
      if (prim <= st.tol && dual <= st.tol) break;
      if (!std::isfinite(score) || prim > 1e10) {
        diverged = true;
        break;
      }

      // periodic polish attempt cuts the long tails: from a decent iterate
      // the active set is usually already correct
      if (st.polish && it % 1000 == 0 && score <= 1e-3) {
        Vec xp, yp;
        std::pair<double, double> rp;
        if (polish(prob, ws.x, y, xp, yp, rp) &&
            std::max(rp.first, rp.second) <= st.tol) {
          sol.x = std::move(xp);
          sol.duals = std::move(yp);
          sol.primal_residual = rp.first;
          sol.dual_residual = rp.second;
          sol.iterations = it;
          sol.polished = true;
          sol.status = QpStatus::Solved;
          return sol;
        }
      }

      if (it % st.rho_update_every == 0) {
        // primal/dual residual ratio in the scaled geometry
        double rp = 0.0, ax_n = 0.0, z_n = 0.0;
        for (Index i = 0; i < k; ++i) {
          const double ezi = ws.e(i) * tx(i);
          rp = std::max(rp, std::abs(ezi - ws.zb(i)));
          ax_n = std::max(ax_n, std::abs(ezi));
          z_n = std::max(z_n, std::abs(ws.zb(i)));
        }
        Vec qx, aty;
        prob.Q.multiply(ws.x, qx);
        for (Index i = 0; i < k; ++i) scratch(i) = ws.e(i) * ws.yb(i);
        prob.A.multiply_transpose(scratch, aty);
        const double rd =
            (ws.sc * qx + ws.sc * prob.c + aty).lpNorm<Eigen::Infinity>();
        const double rd_n = std::max({(ws.sc * qx).lpNorm<Eigen::Infinity>(),
                                      aty.lpNorm<Eigen::Infinity>(),
                                      (ws.sc * prob.c).lpNorm<Eigen::Infinity>(), 1e-10});
        const double rp_rel = rp / std::max({ax_n, z_n, 1e-10});
        const double rd_rel = rd / rd_n;
        const double new_rho =
            std::clamp(ws.rho * std::sqrt(rp_rel / std::max(rd_rel, 1e-16)), 1e-6, 1e6);
        if (new_rho > 5.0 * ws.rho || new_rho < ws.rho / 5.0) {
          ws.rho = new_rho;
          ws.build_and_factor();
        }
      }
    }
  }

  sol.x = best_x;
  sol.duals = best_y;
  sol.primal_residual = best_res.first;
  sol.dual_residual = best_res.second;
  sol.iterations = std::min(it, st.max_iter);

  if (st.polish && !diverged) {
    Vec xp, yp;
    std::pair<double, double> rp;
    if (polish(prob, sol.x, sol.duals, xp, yp, rp)) {
      if (std::max(rp.first, rp.second) <=
          std::max(sol.primal_residual, sol.dual_residual)) {
        sol.x = std::move(xp);
        sol.duals = std::move(yp);
        sol.primal_residual = rp.first;
        sol.dual_residual = rp.second;
        sol.polished = true;
      }
    }
  }

  if (diverged) {
    sol.status = QpStatus::InfeasibleSuspected;
  } else if (std::max(sol.primal_residual, sol.dual_residual) <= st.tol) {
    sol.status = QpStatus::Solved;
  } else {
    sol.status = QpStatus::MaxIter;
  }
  return sol;
}

QpSolution solve_qp(const QpProblem& prob, double tol, int max_iter) {
  QpSettings st;
  st.tol = tol;
  st.max_iter = max_iter;
  return solve_qp(prob, st);
}

}  // namespace lder::qp
