#include "lder/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "lder/kernels.hpp"
#include "lder/reference.hpp"
#include "lder/rng.hpp"

namespace lder {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// sample standard deviation, (n-1) denominator
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::uint64_t fold_seed(std::uint64_t base, int fold) {
  return rng::splitmix64(base ^ (0xF01D0000ULL + static_cast<std::uint64_t>(fold)));
}

std::pair<LDerParams, TrainReport> dispatch_train(const TrainingSet& t,
                                                  const ModelDims& dims,
                                                  const TrainerSpec& spec,
                                                  std::uint64_t seed) {
  switch (spec.kind) {
    case TrainerKind::Sgd: {
      SgdConfig cfg = spec.sgd;
      cfg.seed = seed;
      return train_sgd(t, dims, cfg);
    }
    case TrainerKind::Dca: {
      DcaConfig cfg = spec.dca;
      cfg.seed = seed;
      return train_dca(t, dims, cfg);
    }
    case TrainerKind::Dccp: {
      CcpConfig cfg = spec.dccp;
      cfg.seed = seed;
      return train_dccp(t, dims, cfg);
    }
  }
  throw DomainError("dispatch_train: unknown trainer kind");
}

std::uint64_t spec_seed(const TrainerSpec& spec) {
  switch (spec.kind) {
    case TrainerKind::Sgd:
      return spec.sgd.seed;
    case TrainerKind::Dca:
      return spec.dca.seed;
    case TrainerKind::Dccp:
      return spec.dccp.seed;
  }
  return 0;
}

json spec_config_json(const TrainerSpec& spec) {
  json j;
  j["trainer"] = to_string(spec.kind);
  switch (spec.kind) {
    case TrainerKind::Sgd:
      j["learning_rate"] = spec.sgd.learning_rate;
      j["epochs"] = spec.sgd.epochs;
      j["batch_size"] = spec.sgd.batch_size;
      j["momentum"] = spec.sgd.momentum;
      j["seed"] = spec.sgd.seed;
      j["init_scale"] = spec.sgd.init_scale;
      j["sqrt_decay"] = spec.sgd.sqrt_decay;
      break;
    case TrainerKind::Dca:
      j["epsilon"] = spec.dca.epsilon;
      j["max_outer"] = spec.dca.max_outer;
      j["qp_tol"] = spec.dca.qp_tol;
      j["qp_max_iter"] = spec.dca.qp_max_iter;
      j["seed"] = spec.dca.seed;
      j["init_scale"] = spec.dca.init_scale;
      break;
    case TrainerKind::Dccp:
      j["t0"] = spec.dccp.t0;
      j["mu"] = spec.dccp.mu;
      j["t_max"] = spec.dccp.t_max;
      j["max_outer"] = spec.dccp.max_outer;
      j["slack_tol"] = spec.dccp.slack_tol;
      j["converge_tol"] = spec.dccp.converge_tol;
      j["qp_tol"] = spec.dccp.qp_tol;
      j["qp_max_iter"] = spec.dccp.qp_max_iter;
      j["seed"] = spec.dccp.seed;
      j["init_scale"] = spec.dccp.init_scale;
      break;
  }
  return j;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

const char* to_string(TrainerKind k) {
  switch (k) {
    case TrainerKind::Sgd:
      return "sgd";
    case TrainerKind::Dca:
      return "dca";
    case TrainerKind::Dccp:
      return "dccp";
  }
  return "unknown";
}

TrainerKind trainer_kind_from_string(const std::string& name) {
  if (name == "sgd") return TrainerKind::Sgd;
  if (name == "dca") return TrainerKind::Dca;
  if (name == "dccp") return TrainerKind::Dccp;
  throw DomainError("unknown trainer '" + name + "' (expected sgd, dca or dccp)");
}

TrainerSpec TrainerSpec::make(TrainerKind kind, const std::string& label) {
  TrainerSpec s;
  s.kind = kind;
  s.label = label.empty() ? to_string(kind) : label;
  return s;
}

CvResult run_cv(const Dataset& dataset, const TrainerSpec& spec, const CvOptions& opt) {
  const Dataset d = dataset.has_missing() ? impute_mean(dataset) : dataset;
  const FoldPlan plan = kfold_split(d.rows(), opt.k, opt.seed);
  const ModelDims dims{d.cols(), opt.r1, opt.r2};

  CvResult res;
  res.dataset = d.name;
  res.trainer = spec.label;
  res.config = spec_config_json(spec);
  res.k = opt.k;
  res.seed = opt.seed;

  std::vector<double> mses, mapes, times;
  for (int f = 0; f < opt.k; ++f) {
    FoldScore score;
    score.fold = f;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto train_idx = plan.train_indices(f);
      const auto test_idx = plan.test_indices(f);
      Mat Xtr(static_cast<Index>(train_idx.size()), d.cols());
      Vec ytr(static_cast<Index>(train_idx.size()));
      for (std::size_t i = 0; i < train_idx.size(); ++i) {
        Xtr.row(static_cast<Index>(i)) = d.X.row(train_idx[i]);
        ytr(static_cast<Index>(i)) = d.y(train_idx[i]);
      }
      Mat Xte(static_cast<Index>(test_idx.size()), d.cols());
      Vec yte(static_cast<Index>(test_idx.size()));
      for (std::size_t i = 0; i < test_idx.size(); ++i) {
        Xte.row(static_cast<Index>(i)) = d.X.row(test_idx[i]);
        yte(static_cast<Index>(i)) = d.y(test_idx[i]);
      }

      LDerParams model;
      TrainReport report;
      if (opt.standardize) {
        auto [Xs, stats] = standardize(Xtr);
        auto [params, rep] =
            dispatch_train({std::move(Xs), ytr}, dims, spec, fold_seed(spec_seed(spec), f));
        model = absorb_standardization(params, stats);
        report = std::move(rep);
      } else {
        auto [params, rep] =
            dispatch_train({Xtr, ytr}, dims, spec, fold_seed(spec_seed(spec), f));
        model = std::move(params);
        report = std::move(rep);
      }
      const Vec yhat = predict_batch(model, Xte);
      score.test_mse = mse_of(yte, yhat);
      score.test_mape = mape(yte, yhat);
      score.report = std::move(report);
      score.ok = true;
    } catch (const std::exception& e) {
      score.ok = false;
      score.error = e.what();
      res.partial = true;
    }
    score.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    times.push_back(score.wall_time_seconds);
    if (score.ok) {
      mses.push_back(score.test_mse);
      mapes.push_back(score.test_mape);
      if (!std::isfinite(score.test_mape)) res.mape_defined = false;
    }
    res.folds.push_back(std::move(score));
  }

  if (!mses.empty()) {
    res.mse_mean = mean_of(mses);
    res.mse_std = std_of(mses);
    if (res.mape_defined) {
      res.mape_mean = mean_of(mapes);
      res.mape_std = std_of(mapes);
    } else {
      res.mape_mean = kInf;
      res.mape_std = kInf;
    }
  } else {
    res.mse_mean = res.mse_std = kInf;
    res.mape_mean = res.mape_std = kInf;
    res.mape_defined = false;
  }
  res.time_mean_seconds = mean_of(times);
  return res;
}

std::pair<LDerParams, TrainReport> train_full(const Dataset& dataset,
                                              const TrainerSpec& spec,
                                              const CvOptions& opt) {
  const Dataset d = dataset.has_missing() ? impute_mean(dataset) : dataset;
  const ModelDims dims{d.cols(), opt.r1, opt.r2};
  if (opt.standardize) {
    auto [Xs, stats] = standardize(d.X);
    auto [params, report] =
        dispatch_train({std::move(Xs), d.y}, dims, spec, spec_seed(spec));
    return {absorb_standardization(params, stats), std::move(report)};
  }
  auto [params, report] = dispatch_train({d.X, d.y}, dims, spec, spec_seed(spec));
  return {std::move(params), std::move(report)};
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.size() != b.size())
    throw DimensionError("wilcoxon_signed_rank: length mismatch");
  if (a.size() < 5) throw DomainError("wilcoxon_signed_rank: need at least 5 pairs");

  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double di = a[i] - b[i];
    if (di != 0.0) diff.push_back(di);  // zero-discard convention
  }
  WilcoxonResult res;
  res.n_used = static_cast<int>(diff.size());
  if (diff.empty()) {
    res.degenerate = true;
    res.W = 0.0;
    res.p = 1.0;
    return res;
  }

  // average ranks of |diff|
  const int n = res.n_used;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return std::abs(diff[i]) < std::abs(diff[j]);
  });
  std::vector<double> rank(n, 0.0);
  std::vector<int> tie_sizes;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && std::abs(diff[order[j]]) == std::abs(diff[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (int t = i; t < j; ++t) rank[order[t]] = avg;
    tie_sizes.push_back(j - i);
    i = j;
  }

  double w_plus = 0.0, w_minus = 0.0;
  for (int i = 0; i < n; ++i) {
    if (diff[i] > 0.0)
      w_plus += rank[i];
    else
      w_minus += rank[i];
  }
  res.W = std::min(w_plus, w_minus);

  if (n <= 25) {
    // exact null distribution via subset-sum counting over doubled ranks
    std::vector<long long> dranks(n);
    long long total = 0;
    for (int i = 0; i < n; ++i) {
      dranks[i] = std::llround(2.0 * rank[i]);
      total += dranks[i];
    }
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (int i = 0; i < n; ++i)
      for (long long s = total; s >= dranks[i]; --s)
        ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - dranks[i])];
    const long long cut = std::llround(2.0 * res.W);
    double cdf = 0.0;
    for (long long s = 0; s <= std::min(cut, total); ++s)
      cdf += ways[static_cast<std::size_t>(s)];
    res.p = std::min(1.0, 2.0 * cdf / std::pow(2.0, n));
  } else {
    // normal approximation with continuity and tie corrections
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_corr = 0.0;
    for (int t : tie_sizes)
      tie_corr += (static_cast<double>(t) * t * t - t) / 48.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_corr;
    const double z = (res.W - mean + 0.5) / std::sqrt(std::max(var, 1e-300));
    const double phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    res.p = std::min(1.0, 2.0 * phi);
  }
  return res;
}

ComparisonTable compare_trainers(const std::vector<Dataset>& datasets,
                                 const std::vector<TrainerSpec>& specs,
                                 const CvOptions& opt) {
  if (datasets.empty()) throw DomainError("compare_trainers: no datasets");
  if (specs.size() < 2) throw DomainError("compare_trainers: need at least 2 trainers");

  ComparisonTable table;
  for (const auto& d : datasets) table.datasets.push_back(d.name);
  for (const auto& s : specs) table.trainers.push_back(s.label);

  const Index nd = static_cast<Index>(datasets.size());
  const Index nt = static_cast<Index>(specs.size());
  table.mape_mean.resize(nd, nt);
  table.cells.resize(datasets.size());
  for (Index di = 0; di < nd; ++di) {
    for (Index ti = 0; ti < nt; ++ti) {
      CvResult r = run_cv(datasets[di], specs[ti], opt);
      table.mape_mean(di, ti) = r.mape_defined ? r.mape_mean : kInf;
      table.cells[di].push_back(std::move(r));
    }
  }

  // per-dataset min-max normalization; the best trainer maps to 0
  table.normalized.resize(nd, nt);
  for (Index di = 0; di < nd; ++di) {
    bool defined = true;
    for (Index ti = 0; ti < nt; ++ti)
      if (!std::isfinite(table.mape_mean(di, ti))) defined = false;
    if (!defined) {
      table.normalized.row(di).setConstant(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double lo = table.mape_mean.row(di).minCoeff();
    const double hi = table.mape_mean.row(di).maxCoeff();
    if (hi > lo) {
      table.normalized.row(di) = (table.mape_mean.row(di).array() - lo) / (hi - lo);
    } else {
      table.normalized.row(di).setZero();
    }
  }
  for (Index ti = 0; ti < nt; ++ti) {
    std::vector<double> col;
    for (Index di = 0; di < nd; ++di)
      if (!std::isnan(table.normalized(di, ti))) col.push_back(table.normalized(di, ti));
    table.median_normalized.push_back(median_of(std::move(col)));
  }

  for (Index i = 0; i < nt; ++i) {
    for (Index j = i + 1; j < nt; ++j) {
      std::vector<double> a, b;
      for (Index di = 0; di < nd; ++di) {
        if (std::isfinite(table.mape_mean(di, i)) &&
            std::isfinite(table.mape_mean(di, j))) {
          a.push_back(table.mape_mean(di, i));
          b.push_back(table.mape_mean(di, j));
        }
      }
      ComparisonTable::PairTest pt;
      pt.a = table.trainers[i];
      pt.b = table.trainers[j];
      if (a.size() >= 5) {
        pt.result = wilcoxon_signed_rank(a, b);
      } else {
        pt.result.degenerate = true;
        pt.result.n_used = static_cast<int>(a.size());
        pt.result.p = std::numeric_limits<double>::quiet_NaN();
      }
      table.wilcoxon.push_back(std::move(pt));
    }
  }
  return table;
}

// --- report emission --------------------------------------------------------

json cv_result_to_json(const CvResult& r) {
  json j;
  j["dataset"] = r.dataset;
  j["trainer"] = r.trainer;
  j["config"] = r.config;
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["partial"] = r.partial;
  j["mape_defined"] = r.mape_defined;
  j["mse_mean"] = finite_or_null(r.mse_mean);
  j["mse_std"] = finite_or_null(r.mse_std);
  j["mape_mean"] = r.mape_defined ? json(r.mape_mean) : json(nullptr);
  j["mape_std"] = r.mape_defined ? json(r.mape_std) : json(nullptr);
  j["time_mean_seconds"] = r.time_mean_seconds;
  json folds = json::array();
  for (const auto& f : r.folds) {
    json fj;
    fj["fold"] = f.fold;
    fj["ok"] = f.ok;
    if (!f.ok) fj["error"] = f.error;
    if (f.ok) {
      fj["test_mse"] = finite_or_null(f.test_mse);
      fj["test_mape"] = finite_or_null(f.test_mape);
      fj["iterations"] = f.report.iterations;
      fj["termination"] = to_string(f.report.termination);
      fj["loss_trace"] = f.report.loss_trace;
      if (!f.report.penalty_trace.empty()) fj["penalty_trace"] = f.report.penalty_trace;
      if (!f.report.slack_trace.empty()) fj["slack_trace"] = f.report.slack_trace;
    }
    fj["wall_time_seconds"] = f.wall_time_seconds;
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  return j;
}

json table_to_json(const ComparisonTable& t, const CvOptions& opt) {
  json j;
  j["version"] = kVersion;
  j["k"] = opt.k;
  j["seed"] = opt.seed;
  j["standardize"] = opt.standardize;
  j["r1"] = opt.r1;
  j["r2"] = opt.r2;
  j["datasets"] = t.datasets;
  j["trainers"] = t.trainers;
  json cells = json::object();
  for (std::size_t di = 0; di < t.datasets.size(); ++di) {
    json row = json::object();
    for (std::size_t ti = 0; ti < t.trainers.size(); ++ti)
      row[t.trainers[ti]] = cv_result_to_json(t.cells[di][ti]);
    cells[t.datasets[di]] = std::move(row);
  }
  j["cells"] = std::move(cells);
  json norm = json::object();
  for (std::size_t di = 0; di < t.datasets.size(); ++di) {
    json row = json::object();
    for (std::size_t ti = 0; ti < t.trainers.size(); ++ti) {
      const double v = t.normalized(static_cast<Index>(di), static_cast<Index>(ti));
      row[t.trainers[ti]] = std::isnan(v) ? json(nullptr) : json(v);
    }
    norm[t.datasets[di]] = std::move(row);
  }
  j["normalized_mape"] = std::move(norm);
  json med = json::object();
  for (std::size_t ti = 0; ti < t.trainers.size(); ++ti) {
    const double v = t.median_normalized[ti];
    med[t.trainers[ti]] = std::isnan(v) ? json(nullptr) : json(v);
  }
  j["median_normalized_mape"] = std::move(med);
  json wil = json::object();
  for (const auto& pt : t.wilcoxon) {
    json wj;
    wj["W"] = pt.result.W;
    wj["p"] = std::isnan(pt.result.p) ? json(nullptr) : json(pt.result.p);
    wj["n"] = pt.result.n_used;
    wj["degenerate"] = pt.result.degenerate;
    wil[pt.a + "_vs_" + pt.b] = std::move(wj);
  }
  j["wilcoxon"] = std::move(wil);
  return j;
}

void strip_timing_fields(json& doc) {
  if (doc.is_object()) {
    std::vector<std::string> drop;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.key().find("time") != std::string::npos)
        drop.push_back(it.key());
      else
        strip_timing_fields(it.value());
    }
    for (const auto& k : drop) doc.erase(k);
  } else if (doc.is_array()) {
    for (auto& el : doc) strip_timing_fields(el);
  }
}

namespace {

std::string csv_num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_table_csv(const ComparisonTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open table file for writing: " + path);
  out << "dataset,trainer,mape_mean,mape_std,mse_mean,mse_std,time_mean_seconds\n";
  for (std::size_t di = 0; di < t.datasets.size(); ++di) {
    for (std::size_t ti = 0; ti < t.trainers.size(); ++ti) {
      const CvResult& r = t.cells[di][ti];
      out << t.datasets[di] << ',' << t.trainers[ti] << ','
          << csv_num(r.mape_defined ? r.mape_mean : kInf) << ','
          << csv_num(r.mape_defined ? r.mape_std : kInf) << ',' << csv_num(r.mse_mean)
          << ',' << csv_num(r.mse_std) << ',' << csv_num(r.time_mean_seconds) << '\n';
    }
  }
}

void write_normalized_csv(const ComparisonTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open normalized-score file for writing: " + path);
  out << "dataset";
  for (const auto& tr : t.trainers) out << ',' << tr;
  out << '\n';
  for (std::size_t di = 0; di < t.datasets.size(); ++di) {
    out << t.datasets[di];
    for (std::size_t ti = 0; ti < t.trainers.size(); ++ti) {
      const double v = t.normalized(static_cast<Index>(di), static_cast<Index>(ti));
      out << ',' << (std::isnan(v) ? "" : csv_num(v));
    }
    out << '\n';
  }
}

std::vector<Dataset> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open manifest: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest parse error: ") + e.what());
  }
  if (!doc.is_array()) throw LoadError("manifest must be a JSON array");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<Dataset> out;
  for (const auto& entry : doc) {
    if (!entry.contains("path")) throw LoadError("manifest entry missing 'path'");
    std::filesystem::path p = entry["path"].get<std::string>();
    if (p.is_relative()) p = base / p;
    const std::string target =
        entry.contains("target_column") ? entry["target_column"].get<std::string>() : "";
    Dataset d = impute_mean(load_csv(p.string(), target));
    d.name = entry.contains("name") ? entry["name"].get<std::string>()
                                    : p.stem().string();
    out.push_back(std::move(d));
  }
  if (out.empty()) throw LoadError("manifest lists no datasets");
  return out;
}

// --- selftest ----------------------------------------------------------------

int selftest(std::ostream& out) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    out << (ok ? "ok   " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };

  std::mt19937_64 gen(20240811ULL);
  {
    const ModelDims dims{3, 4, 2};
    const LDerParams p = init_params(dims, 11, 1.0);
    const LDerParams q = unflatten(flatten(p), dims);
    check((flatten(p).array() == flatten(q).array()).all() &&
              (p.W.array() == q.W.array()).all() && (p.b.array() == q.b.array()).all(),
          "flatten/unflatten roundtrip is exact");
  }
  {
    bool ok = true;
    for (int rep = 0; rep < 50 && ok; ++rep) {
      Vec b(4), x(4);
      for (Index i = 0; i < 4; ++i) {
        b(i) = rng::uniform(gen, -2, 2);
        x(i) = rng::uniform(gen, -2, 2);
      }
      ok = erosion(b, x) == -dilation(-b, -x);
    }
    check(ok, "erosion(b,x) == -dilation(-b,-x) exactly");
  }
  {
    bool ok = true;
    const ModelDims dims{4, 3, 3};
    for (int rep = 0; rep < 100 && ok; ++rep) {
      const LDerParams p = init_params(dims, 100 + rep, 1.0);
      Vec x(4);
      for (Index i = 0; i < 4; ++i) x(i) = rng::uniform(gen, -2, 2);
      ok = std::abs(predict(p, x) - reference::predict(p, x)) <= 1e-12;
    }
    check(ok, "predict matches the brute-force reference");
  }
  {
    const auto inst = synth_pwl({2, 2, 2}, 12, 0.1, 5);
    const LDerParams p = init_params({2, 2, 2}, 17, 1.0);
    const Vec g = grad_mse(p, inst.data);
    const ModelDims dims{2, 2, 2};
    const auto f = [&](const Vec& a) { return mse(unflatten(a, dims), inst.data); };
    const Vec fd = finite_diff_grad(f, flatten(p), 1e-6);
    check((g - fd).lpNorm<Eigen::Infinity>() <=
              1e-5 * std::max(1.0, g.lpNorm<Eigen::Infinity>()),
          "grad_mse matches central finite differences");
  }
  {
    const auto inst = synth_pwl({2, 2, 2}, 20, 0.1, 7);
    const ModelDims dims{2, 2, 2};
    const Vec anchor = flatten(init_params(dims, 3, 1.0));
    const auto dc = dc_components(inst.data, anchor, dims);
    bool ok = true;
    for (int rep = 0; rep < 50 && ok; ++rep) {
      const Vec a = flatten(init_params(dims, 1000 + rep, 1.5));
      const double mse_v = mse(unflatten(a, dims), inst.data);
      ok = std::abs(dc.G(a) - dc.H(a) - mse_v) <= 1e-9 * (1.0 + mse_v);
    }
    check(ok, "DC decomposition identity G - H = MSE");
  }
  {
    // minimize x^2 subject to x >= 1
    auto a = qp::SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}});
    Vec l(1), u(1), c(1);
    l << 1.0;
    u << kInf;
    c << 0.0;
    auto prob = qp::make_qp(qp::QuadTerm::diagonal(Vec::Constant(1, 2.0)), c,
                            std::move(a), l, u);
    const auto sol = qp::solve_qp(prob, 1e-8, 5000);
    check(sol.status == qp::QpStatus::Solved && std::abs(sol.x(0) - 1.0) <= 1e-6,
          "QP active-bound example solves to x = 1");
  }
  {
    const FoldPlan plan = kfold_split(11, 5, 3);
    std::vector<int> counts(5, 0);
    for (int f : plan.assignments) counts[f]++;
    std::sort(counts.begin(), counts.end());
    check(counts == std::vector<int>({2, 2, 2, 2, 3}),
          "k-fold split spreads the remainder");
  }
  {
    const WilcoxonResult w =
        wilcoxon_signed_rank({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    check(std::abs(w.p - 0.0625) <= 1e-12 && w.W == 0.0,
          "Wilcoxon exact two-sided p on the all-positive case");
  }
  {
    Vec y(2), yhat(2);
    y << 0.0, 1.0;
    yhat << 1.0, 1.0;
    check(std::isinf(mape(y, yhat)), "MAPE reports the undefined sentinel at zero targets");
  }
  return failures;
}

}  // namespace lder
