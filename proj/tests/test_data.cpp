#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "lder/data.hpp"
#include "lder/rng.hpp"
#include "lder/sgd.hpp"

using namespace lder;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_csv parses features, target and missing cells") {
  TempFile f("data_test_basic.csv");
  {
    std::ofstream out(f.path);
    out << "a,b,y\n1,2,3\n4,,6\n7,8,9\n";
  }
  const Dataset d = load_csv(f.path, "y");
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.y(0) == 3.0);
  CHECK(d.y(1) == 6.0);
  CHECK(d.y(2) == 9.0);
  CHECK(d.X(0, 0) == 1.0);
  CHECK(std::isnan(d.X(1, 1)));
  CHECK(d.has_missing());
  CHECK(d.feature_names == std::vector<std::string>({"a", "b"}));

  // last column is the default target
  const Dataset d2 = load_csv(f.path);
  CHECK(d2.y(2) == 9.0);

  CHECK_THROWS_AS(load_csv(f.path, "nope"), LoadError);
  CHECK_THROWS_AS(load_csv("does_not_exist.csv"), LoadError);
}

TEST_CASE("load_csv rejects header-only and malformed files") {
  TempFile f("data_test_headeronly.csv");
  {
    std::ofstream out(f.path);
    out << "a,b,y\n";
  }
  CHECK_THROWS_AS(load_csv(f.path), LoadError);

  TempFile g("data_test_nonnumeric.csv");
  {
    std::ofstream out(g.path);
    out << "a,y\n1,2\nfoo,3\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(g.path), doctest::Contains("line 3"), LoadError);
}

TEST_CASE("csv write/load round trip is bit exact") {
  std::mt19937_64 gen(7);
  Dataset d;
  d.name = "roundtrip";
  d.X.resize(12, 3);
  d.y.resize(12);
  for (Index i = 0; i < 12; ++i) {
    for (Index c = 0; c < 3; ++c) d.X(i, c) = rng::normal(gen) * 1e3;
    d.y(i) = rng::normal(gen);
  }
  d.X(4, 1) = std::numeric_limits<double>::quiet_NaN();  // a missing cell
  d.feature_names = {"f1", "f2", "f3"};

  TempFile f("data_test_roundtrip.csv");
  write_csv(d, f.path);
  const Dataset back = load_csv(f.path, "y");
  for (Index i = 0; i < 12; ++i) {
    CHECK(back.y(i) == d.y(i));
    for (Index c = 0; c < 3; ++c) {
      if (std::isnan(d.X(i, c)))
        CHECK(std::isnan(back.X(i, c)));
      else
        CHECK(back.X(i, c) == d.X(i, c));
    }
  }
}

TEST_CASE("mean imputation fills gaps with column means") {
  Dataset d;
  d.X.resize(3, 1);
  d.X << 1, std::numeric_limits<double>::quiet_NaN(), 3;
  d.y = Vec::Zero(3);
  const Dataset filled = impute_mean(d);
  CHECK(filled.X(1, 0) == 2.0);
  CHECK(filled.X(0, 0) == 1.0);  // observed entries untouched
  CHECK_FALSE(filled.has_missing());

  // no missing values: identity
  const Dataset same = impute_mean(filled);
  CHECK((same.X.array() == filled.X.array()).all());

  // random mask: imputed value equals the observed mean
  std::mt19937_64 gen(9);
  Dataset r;
  r.X.resize(30, 2);
  r.y = Vec::Zero(30);
  for (Index i = 0; i < 30; ++i)
    for (Index c = 0; c < 2; ++c) r.X(i, c) = rng::uniform(gen, -5, 5);
  double sum = 0.0;
  int kept = 0;
  for (Index i = 0; i < 30; ++i) {
    if (i % 3 == 0) {
      r.X(i, 0) = std::numeric_limits<double>::quiet_NaN();
    } else {
      sum += r.X(i, 0);
      ++kept;
    }
  }
  const Dataset rf = impute_mean(r);
  CHECK(rf.X(0, 0) == doctest::Approx(sum / kept).epsilon(1e-12));

  Dataset bad;
  bad.X.resize(2, 1);
  bad.X << std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN();
  bad.y = Vec::Zero(2);
  bad.feature_names = {"lonely"};
  CHECK_THROWS_WITH_AS(impute_mean(bad), doctest::Contains("lonely"), LoadError);
}

TEST_CASE("standardization normalizes training columns and inverts") {
  std::mt19937_64 gen(11);
  Mat X(40, 3);
  for (Index i = 0; i < 40; ++i) {
    X(i, 0) = rng::uniform(gen, -3, 7);
    X(i, 1) = 5.0;  // constant column hits the std floor
    X(i, 2) = rng::normal(gen) * 0.01;
  }
  const auto [Xs, stats] = standardize(X);
  for (Index c = 0; c < 3; ++c)
    CHECK(std::abs(Xs.col(c).mean()) <= 1e-12);
  CHECK((Xs.col(1).array() == 0.0).all());

  const Mat back = invert_standardize(stats, Xs);
  CHECK((back - X).lpNorm<Eigen::Infinity>() <= 1e-10);

  const Mat applied = apply_standardize(stats, X);
  CHECK((applied - Xs).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("absorbing standardization gives a raw-space model") {
  std::mt19937_64 gen(13);
  Mat X(25, 2);
  for (Index i = 0; i < 25; ++i) {
    X(i, 0) = rng::uniform(gen, 10, 20);
    X(i, 1) = rng::uniform(gen, -100, 100);
  }
  const auto [Xs, stats] = standardize(X);
  const LDerParams p = init_params({2, 3, 2}, 21, 1.0);
  const LDerParams raw = absorb_standardization(p, stats);
  for (Index i = 0; i < 25; ++i) {
    const Vec xs = Xs.row(i);
    const Vec xr = X.row(i);
    CHECK(predict(raw, xr) == doctest::Approx(predict(p, xs)).epsilon(1e-10));
  }
}

TEST_CASE("k-fold plans partition the samples") {
  const FoldPlan even = kfold_split(10, 5, 1);
  std::vector<int> sizes(5, 0);
  for (int f : even.assignments) sizes[f]++;
  for (int s : sizes) CHECK(s == 2);

  const FoldPlan odd = kfold_split(11, 5, 1);
  sizes.assign(5, 0);
  for (int f : odd.assignments) sizes[f]++;
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<int>({2, 2, 2, 2, 3}));

  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Index m = 6 + static_cast<Index>(gen() % 60);
    const int k = 2 + static_cast<int>(gen() % 5);
    if (static_cast<Index>(k) > m) continue;
    const FoldPlan plan = kfold_split(m, k, gen());
    std::set<Index> seen;
    for (int f = 0; f < k; ++f)
      for (Index idx : plan.test_indices(f)) {
        CHECK(seen.insert(idx).second);  // pairwise disjoint
      }
    CHECK(static_cast<Index>(seen.size()) == m);  // exhaustive
    // deterministic per seed
    const FoldPlan again = kfold_split(m, k, plan.seed);
    CHECK(again.assignments == plan.assignments);
  }

  CHECK_THROWS_AS(kfold_split(5, 1, 0), DomainError);
  CHECK_THROWS_AS(kfold_split(5, 6, 0), DomainError);
}

TEST_CASE("synthetic instances are representable and seeded") {
  const auto a = synth_pwl({2, 2, 2}, 50, 0.0, 5);
  CHECK(mse(a.truth, a.data) == 0.0);

  const auto b = synth_pwl({2, 2, 2}, 50, 0.0, 5);
  CHECK((a.data.X.array() == b.data.X.array()).all());
  CHECK((a.data.y.array() == b.data.y.array()).all());

  const auto c = synth_pwl({2, 2, 2}, 10000, 0.1, 6);
  const double noise_mse = mse(c.truth, c.data);
  CHECK(noise_mse >= 0.008);
  CHECK(noise_mse <= 0.012);
}

TEST_CASE("dataset and fold plan serialize for provenance") {
  Dataset d;
  d.name = "tiny";
  d.X.resize(2, 1);
  d.X << 1, std::numeric_limits<double>::quiet_NaN();
  d.y.resize(2);
  d.y << 3, 4;
  d.feature_names = {"a"};
  const std::string dj = dataset_to_json(d);
  CHECK(dj.find("\"tiny\"") != std::string::npos);
  CHECK(dj.find("null") != std::string::npos);  // missing marker never leaks as NaN

  const FoldPlan plan = kfold_split(6, 3, 9);
  const std::string fj = foldplan_to_json(plan);
  CHECK(fj.find("\"k\":3") != std::string::npos);
}
