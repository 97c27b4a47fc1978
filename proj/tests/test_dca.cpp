#include <doctest.h>

#include <Eigen/Cholesky>

#include <random>

#include "lder/data.hpp"
#include "lder/dca.hpp"
#include "lder/rng.hpp"
#include "lder/sgd.hpp"

using namespace lder;

namespace {

double least_squares_mse(const Mat& X, const Vec& y) {
  Mat design(X.rows(), X.cols() + 1);
  design.leftCols(X.cols()) = X;
  design.col(X.cols()).setOnes();
  const Vec coef = (design.transpose() * design).ldlt().solve(design.transpose() * y);
  return (y - design * coef).squaredNorm() / static_cast<double>(X.rows());
}

double tau1_at(const LDerParams& p, const Vec& xi, double yi) {
  return dilation(p.a, p.W * xi) - yi;
}
double tau2_at(const LDerParams& p, const Vec& xi) { return dilation(p.b, p.M * xi); }

}  // namespace

TEST_CASE("phi at the anchor is the negated smaller branch term") {
  const auto inst = synth_pwl({2, 3, 2}, 10, 0.1, 8);
  const ModelDims dims{2, 3, 2};
  const Vec anchor = flatten(init_params(dims, 5, 1.0));
  const LDerParams pa = unflatten(anchor, dims);
  for (Index i = 0; i < inst.data.size(); ++i) {
    const Vec xi = inst.data.X.row(i);
    const double expect =
        -std::min(tau1_at(pa, xi, inst.data.y(i)), tau2_at(pa, xi));
    CHECK(phi(i, anchor, anchor, inst.data, dims) ==
          doctest::Approx(expect).epsilon(1e-13));
  }
  CHECK_THROWS_AS(phi(99, anchor, anchor, inst.data, dims), IndexError);
}

TEST_CASE("phi is convex along sampled chords") {
  const auto inst = synth_pwl({2, 2, 2}, 6, 0.1, 9);
  const ModelDims dims{2, 2, 2};
  const Vec anchor = flatten(init_params(dims, 31, 1.0));
  std::mt19937_64 gen(10);
  for (int rep = 0; rep < 1000; ++rep) {
    const Index i = static_cast<Index>(gen() % 6);
    Vec a(dims.flat_size()), b(dims.flat_size());
    for (Index j = 0; j < a.size(); ++j) {
      a(j) = rng::uniform(gen, -2, 2);
      b(j) = rng::uniform(gen, -2, 2);
    }
    const double lam = rng::uniform01(gen);
    const Vec mid = lam * a + (1 - lam) * b;
    const double lhs = phi(i, mid, anchor, inst.data, dims);
    const double rhs = lam * phi(i, a, anchor, inst.data, dims) +
                       (1 - lam) * phi(i, b, anchor, inst.data, dims);
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("single-rank phi pieces expand by hand") {
  // r1 = r2 = 1: tangents equal the branches, so phi = -min(tau1, tau2)
  const ModelDims dims{1, 1, 1};
  LDerParams p = LDerParams::zeros(dims);
  p.W << 1.5;
  p.a << -0.25;
  p.M << -0.5;
  p.b << 2.0;
  const Vec anchor = flatten(p);
  Mat X(1, 1);
  X << 0.75;
  Vec y(1);
  y << 0.5;
  const TrainingSet t{X, y};
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    Vec alpha(4);
    for (Index j = 0; j < 4; ++j) alpha(j) = rng::uniform(gen, -2, 2);
    const double t1 = alpha(0) * 0.75 + alpha(1) - 0.5;
    const double t2 = alpha(2) * 0.75 + alpha(3);
    CHECK(phi(0, alpha, anchor, t, dims) ==
          doctest::Approx(-std::min(t1, t2)).epsilon(1e-13));
  }
}

TEST_CASE("DC components cancel to the MSE and stay nonnegative") {
  const auto inst = synth_pwl({3, 3, 2}, 25, 0.2, 11);
  const ModelDims dims{3, 3, 2};
  const Vec anchor = flatten(init_params(dims, 4, 1.0));
  const auto dc = dc_components(inst.data, anchor, dims);
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 200; ++rep) {
    Vec alpha(dims.flat_size());
    for (Index j = 0; j < alpha.size(); ++j) alpha(j) = rng::uniform(gen, -2, 2);
    const double g = dc.G(alpha);
    const double h = dc.H(alpha);
    const double m = mse(unflatten(alpha, dims), inst.data);
    CHECK(g >= 0.0);
    CHECK(h >= 0.0);
    CHECK(std::abs(g - h - m) <= 1e-9 * (1.0 + m));
  }
  // at the anchor itself: q_i = max(0, residual), p_i = max(0, -residual),
  // so G collapses to twice the MSE and H to the MSE
  const double m0 = mse(unflatten(anchor, dims), inst.data);
  CHECK(dc.G(anchor) == doctest::Approx(2.0 * m0).epsilon(1e-12));
  CHECK(dc.H(anchor) == doctest::Approx(m0).epsilon(1e-12));
}

TEST_CASE("single-sample single-rank decomposition expands by hand") {
  const ModelDims dims{1, 1, 1};
  LDerParams p0 = LDerParams::zeros(dims);
  p0.W << 0.8;
  p0.a << 0.1;
  p0.M << -0.3;
  p0.b << 0.6;
  const Vec anchor = flatten(p0);
  Mat X(1, 1);
  X << -0.4;
  Vec y(1);
  y << 1.2;
  const TrainingSet t{X, y};
  const auto dc = dc_components(t, anchor, dims);
  std::mt19937_64 gen(14);
  for (int rep = 0; rep < 20; ++rep) {
    Vec alpha(4);
    for (Index j = 0; j < 4; ++j) alpha(j) = rng::uniform(gen, -2, 2);
    const double t1 = alpha(0) * X(0, 0) + alpha(1) - y(0);
    const double t2 = alpha(2) * X(0, 0) + alpha(3);
    const double ph = -std::min(t1, t2);
    const double g = 2.0 * ((t1 + ph) * (t1 + ph) + (t2 + ph) * (t2 + ph));
    const double h = (t1 + t2 + 2 * ph) * (t1 + t2 + 2 * ph);
    CHECK(dc.G(alpha) == doctest::Approx(g).epsilon(1e-12));
    CHECK(dc.H(alpha) == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("dca_beta matches grad_mse and subgradient-bounds H") {
  const auto inst = synth_pwl({2, 3, 3}, 15, 0.1, 21);
  const ModelDims dims{2, 3, 3};

  // zero residuals give a zero subgradient
  const Vec truth = flatten(inst.truth);
  const auto noiseless = synth_pwl({2, 3, 3}, 15, 0.0, 21);
  CHECK(dca_beta(flatten(noiseless.truth), noiseless.data, dims)
            .lpNorm<Eigen::Infinity>() == 0.0);

  const Vec at = flatten(init_params(dims, 2, 1.0));
  const Vec beta = dca_beta(at, inst.data, dims);
  const Vec g = grad_mse(unflatten(at, dims), inst.data);
  CHECK((beta - g).lpNorm<Eigen::Infinity>() <= 1e-12);

  // H(alpha) >= H(at) + <beta, alpha - at> with the anchor placed at `at`
  const auto dc = dc_components(inst.data, at, dims);
  const double h0 = dc.H(at);
  std::mt19937_64 gen(22);
  for (int rep = 0; rep < 500; ++rep) {
    Vec alpha(dims.flat_size());
    for (Index j = 0; j < alpha.size(); ++j) alpha(j) = rng::uniform(gen, -3, 3);
    const double lower = h0 + beta.dot(alpha - at);
    CHECK(dc.H(alpha) >= lower - 1e-9 * (1.0 + std::abs(lower)));
  }
}

TEST_CASE("subproblem shape and anchored feasibility") {
  const auto inst = synth_pwl({2, 3, 2}, 9, 0.1, 33);
  const ModelDims dims{2, 3, 2};
  const Index m = 9, D = dims.flat_size();
  const Vec at = flatten(init_params(dims, 6, 1.0));
  const Vec beta = dca_beta(at, inst.data, dims);
  const auto prob = assemble_dca_subproblem(at, beta, inst.data, dims);

  CHECK(prob.constraints() == 2 * m * (dims.r1 + dims.r2));
  CHECK(prob.dim() == D + 2 * m);

  // the point (alpha_t, q_i = tau1+phi, p_i = tau2+phi at alpha_t) is feasible
  Vec z(prob.dim());
  z.head(D) = at;
  const LDerParams pa = unflatten(at, dims);
  for (Index i = 0; i < m; ++i) {
    const Vec xi = inst.data.X.row(i);
    const double t1 = tau1_at(pa, xi, inst.data.y(i));
    const double t2 = tau2_at(pa, xi);
    const double ph = -std::min(t1, t2);
    z(D + i) = t1 + ph;
    z(D + m + i) = t2 + ph;
  }
  Vec ax;
  prob.A.multiply(z, ax);
  for (Index r = 0; r < prob.constraints(); ++r) CHECK(ax(r) <= prob.u(r) + 1e-12);
}

TEST_CASE("tiny subproblem agrees with a dense grid search") {
  const ModelDims dims{1, 1, 1};
  Mat X(1, 1);
  X << 0.5;
  Vec y(1);
  y << 0.3;
  const TrainingSet t{X, y};
  const Vec at = flatten(init_params(dims, 3, 0.5));
  const Vec beta = dca_beta(at, t, dims);
  const auto prob = assemble_dca_subproblem(at, beta, t, dims);
  const auto sol = qp::solve_qp(prob, 1e-9, 20000);
  REQUIRE(sol.status == qp::QpStatus::Solved);

  const auto dc = dc_components(t, at, dims);
  const Vec alpha_opt = sol.x.head(4);
  const double qp_value = dc.G(alpha_opt) - beta.dot(alpha_opt);

  double grid_best = std::numeric_limits<double>::infinity();
  const double step = 0.1;
  Vec a(4);
  for (a(0) = -1.5; a(0) <= 1.5; a(0) += step)
    for (a(1) = -1.5; a(1) <= 1.5; a(1) += step)
      for (a(2) = -1.5; a(2) <= 1.5; a(2) += step)
        for (a(3) = -1.5; a(3) <= 1.5; a(3) += step)
          grid_best = std::min(grid_best, dc.G(a) - beta.dot(a));
  CHECK(qp_value <= grid_best + 1e-3);
}

TEST_CASE("training stops immediately on data the initialization explains") {
  const ModelDims dims{2, 2, 2};
  const LDerParams init = init_params(dims, 19, 1.0);
  std::mt19937_64 gen(4);
  Mat X(20, 2);
  for (Index i = 0; i < 20; ++i)
    for (Index c = 0; c < 2; ++c) X(i, c) = rng::uniform(gen, -1, 1);
  const TrainingSet t{X, predict_batch(init, X)};
  DcaConfig cfg;
  cfg.seed = 19;
  const auto [params, report] = train_dca(t, dims, cfg);
  CHECK(report.termination == Termination::Converged);
  CHECK(report.iterations == 1);
  CHECK(mse(params, t) <= 1e-10);
}

TEST_CASE("outer iterations never increase the loss") {
  const auto inst = synth_pwl({2, 2, 2}, 100, 0.05, 55);
  DcaConfig cfg;
  cfg.seed = 3;
  cfg.max_outer = 60;
  const auto [params, report] = train_dca(inst.data, {2, 2, 2}, cfg);
  REQUIRE(report.loss_trace.size() >= 2);
  for (std::size_t i = 1; i < report.loss_trace.size(); ++i)
    CHECK(report.loss_trace[i] <= report.loss_trace[i - 1] + 1e-7);
}

TEST_CASE("affine data reaches the least-squares optimum") {
  std::mt19937_64 gen(8);
  const Index m = 24;
  Mat X(m, 2);
  Vec y(m);
  for (Index i = 0; i < m; ++i) {
    X(i, 0) = rng::uniform(gen, -1, 1);
    X(i, 1) = rng::uniform(gen, -1, 1);
    y(i) = 1.3 * X(i, 0) - 0.7 * X(i, 1) + 0.2 + 0.05 * rng::normal(gen);
  }
  const double target = least_squares_mse(X, y);
  DcaConfig cfg;
  cfg.seed = 5;
  const auto [params, report] = train_dca({X, y}, {2, 1, 1}, cfg);
  CHECK(mse(params, {X, y}) <= target + 1e-5);
}
