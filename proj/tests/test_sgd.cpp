#include <doctest.h>

#include <Eigen/Cholesky>

#include <random>
#include <set>

#include "lder/data.hpp"
#include "lder/rng.hpp"
#include "lder/sgd.hpp"

using namespace lder;

namespace {

// normal-equations least squares on [X 1] — the global optimum any r1=r2=1
// model can at best match
double least_squares_mse(const Mat& X, const Vec& y) {
  Mat design(X.rows(), X.cols() + 1);
  design.leftCols(X.cols()) = X;
  design.col(X.cols()).setOnes();
  const Vec coef = (design.transpose() * design)
                       .ldlt()
                       .solve(design.transpose() * y);
  const Vec resid = y - design * coef;
  return resid.squaredNorm() / static_cast<double>(X.rows());
}

}  // namespace

TEST_CASE("init_params is seed-deterministic with the advertised scale") {
  const ModelDims dims{3, 4, 2};
  const LDerParams a = init_params(dims, 42, 1.0);
  const LDerParams b = init_params(dims, 42, 1.0);
  CHECK((flatten(a).array() == flatten(b).array()).all());
  CHECK_FALSE((flatten(init_params(dims, 43, 1.0)).array() == flatten(a).array()).all());

  const LDerParams z = init_params(dims, 7, 0.0);
  CHECK(flatten(z).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(predict(z, Vec::Ones(3)) == 0.0);

  // sample mean of 10^4 draws stays within 3 sigma of zero
  const ModelDims big{9, 50, 50};  // (50+50)*(9+1) = 1000 entries
  Vec pool(10000);
  Index at = 0;
  for (int s = 0; s < 10; ++s) {
    pool.segment(at, 1000) = flatten(init_params(big, 1000 + s, 1.0));
    at += 1000;
  }
  const double sd = 1.0 / std::sqrt(10.0);  // per-entry sd for n = 9
  CHECK(std::abs(pool.mean()) <= 3.0 * sd / 100.0);
}

TEST_CASE("epoch_shuffle emits a permutation") {
  std::mt19937_64 gen(5);
  for (Index m : {1, 2, 7, 64, 311}) {
    const auto order = epoch_shuffle(gen, m);
    std::set<Index> seen(order.begin(), order.end());
    CHECK(static_cast<Index>(order.size()) == m);
    CHECK(static_cast<Index>(seen.size()) == m);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == m - 1);
  }
}

TEST_CASE("zero learning rate leaves the initialization untouched") {
  const auto inst = synth_pwl({2, 2, 2}, 30, 0.1, 3);
  SgdConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.seed = 12;
  const auto [params, report] = train_sgd(inst.data, {2, 2, 2}, cfg);
  const LDerParams init = init_params({2, 2, 2}, 12, cfg.init_scale);
  CHECK((flatten(params).array() == flatten(init).array()).all());
  CHECK(report.termination == Termination::EpochsExhausted);
  CHECK(report.iterations == 5);
  CHECK(report.loss_trace.size() == 6);  // initial loss plus one entry per epoch
}

TEST_CASE("affine data trains to near the least-squares optimum") {
  std::mt19937_64 gen(9);
  const Index m = 50;
  Mat X(m, 1);
  Vec y(m);
  for (Index i = 0; i < m; ++i) {
    X(i, 0) = rng::uniform(gen, -1, 1);
    y(i) = 2.0 * X(i, 0) + 1.0;
  }
  SgdConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 500;
  cfg.seed = 4;
  const auto [params, report] = train_sgd({X, y}, {1, 1, 1}, cfg);
  CHECK(report.loss_trace.back() <= 1e-4);
}

TEST_CASE("noiseless piecewise-linear data trains most of the way down") {
  const auto inst = synth_pwl({2, 2, 2}, 200, 0.0, 17);
  SgdConfig cfg;
  cfg.seed = 6;
  const auto [params, report] = train_sgd(inst.data, {2, 2, 2}, cfg);
  REQUIRE(report.loss_trace.size() >= 2);
  const double first = report.loss_trace.front();
  const double last = report.loss_trace.back();
  CHECK(last <= 0.05 * first);  // at least a 95% drop
}

TEST_CASE("training is bit-reproducible") {
  const auto inst = synth_pwl({3, 2, 2}, 40, 0.05, 23);
  SgdConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 77;
  const auto [p1, r1] = train_sgd(inst.data, {3, 2, 2}, cfg);
  const auto [p2, r2] = train_sgd(inst.data, {3, 2, 2}, cfg);
  CHECK((flatten(p1).array() == flatten(p2).array()).all());
  CHECK(r1.loss_trace == r2.loss_trace);
}

TEST_CASE("full-batch descent with a small step never climbs early on") {
  const auto inst = synth_pwl({2, 2, 2}, 60, 0.1, 31);
  SgdConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.momentum = 0.0;
  cfg.batch_size = 60;
  cfg.epochs = 50;
  cfg.seed = 2;
  const auto [params, report] = train_sgd(inst.data, {2, 2, 2}, cfg);
  for (std::size_t e = 1; e < report.loss_trace.size(); ++e)
    CHECK(report.loss_trace[e] <= report.loss_trace[e - 1] + 1e-12);
}

TEST_CASE("config validation") {
  const auto inst = synth_pwl({2, 1, 1}, 10, 0.0, 1);
  SgdConfig cfg;
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(train_sgd(inst.data, {2, 1, 1}, cfg), DomainError);
  cfg = SgdConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_sgd(inst.data, {2, 1, 1}, cfg), DomainError);
  CHECK_THROWS_AS(train_sgd(TrainingSet{Mat(0, 2), Vec(0)}, {2, 1, 1}, SgdConfig{}),
                  DomainError);
}
