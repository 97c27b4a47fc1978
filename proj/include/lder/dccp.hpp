#ifndef LDER_DCCP_HPP
#define LDER_DCCP_HPP

/// Penalty convex-concave trainer. The MSE minimization is recast as
///
///   minimize (1/m)||xi||^2
///   s.t.     max_l(w_l'x_i + a_l) + xi_i = max_l(m_l'x_i + b_l) + y_i
///
/// and each equality is relaxed into two inequalities sharing one slack s_i.
/// The convex side stays as an epigraph; the concave side (the negated
/// opposite branch) is replaced by its tangent at the current iterate. The
/// slack sum is penalized with a coefficient t_k that grows geometrically up
/// to a cap.

#include <cstdint>
#include <utility>

#include "lder/loss.hpp"
#include "lder/model.hpp"
#include "lder/qp.hpp"
#include "lder/report.hpp"

namespace lder {

struct CcpConfig {
  double t0 = 1.0;      // initial penalty
  double mu = 2.0;      // penalty growth factor, > 1
  double t_max = 1e4;   // penalty cap
  int max_outer = 100;
  double slack_tol = 1e-6;
  double converge_tol = 1e-5;
  double qp_tol = 1e-8;
  int qp_max_iter = 20000;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
};

enum class Branch { DilationA, DilationB };

// Affine functional of the flat parameter vector.
struct AffineOnAlpha {
  SparseAlphaVec gradient;
  double offset = 0.0;

  double value(const Vec& alpha) const { return gradient.dot(alpha) + offset; }
};

// Tangent of the chosen max-affine branch at alpha_k: exact at alpha_k and a
// global minorant of the branch.
AffineOnAlpha linearize_branch(Branch branch, const Vec& alpha_k, const Vec& xi,
                               const ModelDims& dims);

// One penalized subproblem at iterate alpha_k with penalty t_k. Decision
// vector (alpha, xi, s); objective (1/m)||xi||^2 + t_k sum_i s_i; per sample:
//   <v^{i,l},    alpha> + xi_i - [tangent of branch B](alpha) - y_i <= s_i   l = 1..r1
//   <v^{i,r1+l}, alpha> + y_i  - [tangent of branch A](alpha) - xi_i <= s_i  l = 1..r2
//   s_i >= 0
qp::QpProblem assemble_ccp_subproblem(const Vec& alpha_k, const TrainingSet& t,
                                      double t_k, const ModelDims& dims);

// Returns the parameters of the best-MSE iterate; the report carries the
// penalty schedule, the per-iteration slack sums, and the final (alpha, xi).
std::pair<LDerParams, TrainReport> train_dccp(const TrainingSet& t,
                                              const ModelDims& dims,
                                              const CcpConfig& cfg);

}  // namespace lder

#endif  // LDER_DCCP_HPP
