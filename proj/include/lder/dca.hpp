#ifndef LDER_DCA_HPP
#define LDER_DCA_HPP

/// Difference-of-convex trainer. The squared residual of the model splits as
/// MSE = G - H with
///
///   G(alpha) = (2/m) sum_i [ (tau1_i + phi_i)^2 + (tau2_i + phi_i)^2 ]
///   H(alpha) = (1/m) sum_i [ tau1_i + tau2_i + 2 phi_i ]^2
///
/// where tau1_i = max_l(w_l'x_i + a_l) - y_i and tau2_i = max_l(m_l'x_i + b_l)
/// are the two max-affine terms and phi_i is the negated minimum of their
/// supporting lines at an anchor point. phi_i keeps tau1_i + phi_i and
/// tau2_i + phi_i nonnegative everywhere, so both squared components are
/// convex; the difference telescopes to the squared residual for any phi_i.
///
/// One outer iteration takes a subgradient beta of H at the current iterate
/// and minimizes G(alpha) - <beta, alpha> through an epigraph QP in
/// (alpha, q, p) with 2m(r1+r2) linear rows.

#include <cstdint>
#include <utility>

#include "lder/loss.hpp"
#include "lder/model.hpp"
#include "lder/qp.hpp"
#include "lder/report.hpp"

namespace lder {

struct DcaConfig {
  double epsilon = 1e-6;  // stop when |MSE_t - MSE_{t-1}| <= eps (1 + MSE_{t-1})
  int max_outer = 200;
  double qp_tol = 1e-8;
  int qp_max_iter = 20000;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
};

// G and H bound to a training set and an anchor; the anchor fixes the active
// rows whose affine pieces act as the supporting lines inside phi.
class DcDecomposition {
 public:
  DcDecomposition(TrainingSet t, const Vec& anchor, const ModelDims& dims);

  double G(const Vec& alpha) const;
  double H(const Vec& alpha) const;

 private:
  TrainingSet t_;
  ModelDims dims_;
  std::vector<Index> j1_, j2_;  // active rows of each branch at the anchor
};

// phi_i(alpha) = -min{ <v^{i,j1}, alpha> - y_i, <v^{i,r1+j2}, alpha> } with
// (j1, j2) the active rows at the anchor.
double phi(Index i, const Vec& alpha, const Vec& anchor, const TrainingSet& t,
           const ModelDims& dims);

DcDecomposition dc_components(const TrainingSet& t, const Vec& anchor,
                              const ModelDims& dims);

// Subgradient of H at alpha: (2/m) sum_i (predict(x_i) - y_i) v^i. Identical
// to grad_mse by construction.
Vec dca_beta(const Vec& alpha, const TrainingSet& t, const ModelDims& dims);

// Epigraph QP for one outer iteration. Decision vector (alpha, q, p);
// objective (2/m)(||q||^2 + ||p||^2) - <beta, alpha>; per sample i the four
// row families (anchored at alpha_t with active rows j1, j2):
//   <v^{i,l} - v^{i,j1},    alpha> <= q_i          l = 1..r1
//   <v^{i,l} - v^{i,r1+j2}, alpha> <= q_i + y_i    l = 1..r1
//   <v^{i,r1+l} - v^{i,j1},    alpha> <= p_i - y_i l = 1..r2
//   <v^{i,r1+l} - v^{i,r1+j2}, alpha> <= p_i       l = 1..r2
// Rows are ordered sample-major, family-major, l-minor, so warm starts carry
// over between outer iterations.
qp::QpProblem assemble_dca_subproblem(const Vec& alpha_t, const Vec& beta,
                                      const TrainingSet& t, const ModelDims& dims);

std::pair<LDerParams, TrainReport> train_dca(const TrainingSet& t,
                                             const ModelDims& dims,
                                             const DcaConfig& cfg);

}  // namespace lder

#endif  // LDER_DCA_HPP
