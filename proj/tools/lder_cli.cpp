// Command-line front end: train/eval/cross-validate a linear dilation-erosion
// regressor, benchmark the three trainers over a dataset manifest, run the
// built-in invariant suite, or generate synthetic instances.
//
// On failure a machine-readable {"error": ...} object is printed to stdout
// and the exit code is nonzero.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lder/harness.hpp"
#include "lder/kernels.hpp"
#include "lder/reference.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lder;

namespace {

struct CommonOpts {
  Index r1 = 10, r2 = 10;
  std::uint64_t seed = 0;
  bool standardize = true;
  double init_scale = 1.0;
  int threads = 0;
};

struct TrainerOpts {
  std::string trainer = "dccp";
  SgdConfig sgd;
  DcaConfig dca;
  CcpConfig dccp;
};

void add_common_flags(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--r1", c.r1, "rows of the first max-affine branch");
  cmd->add_option("--r2", c.r2, "rows of the second max-affine branch");
  cmd->add_option("--seed", c.seed, "seed for folds and initialization");
  cmd->add_flag("--standardize,!--no-standardize", c.standardize,
                "standardize features on the training folds (default on)");
  cmd->add_option("--init-scale", c.init_scale, "parameter initialization scale");
  cmd->add_option("--threads", c.threads, "OpenMP thread count (0 = library default)");
}

void add_trainer_flags(CLI::App* cmd, TrainerOpts& t) {
  cmd->add_option("--trainer", t.trainer, "sgd, dca or dccp")
      ->check(CLI::IsMember({"sgd", "dca", "dccp"}));
  cmd->add_option("--sgd.lr", t.sgd.learning_rate, "SGD learning rate");
  cmd->add_option("--sgd.epochs", t.sgd.epochs, "SGD epochs");
  cmd->add_option("--sgd.batch", t.sgd.batch_size, "SGD minibatch size");
  cmd->add_option("--sgd.momentum", t.sgd.momentum, "SGD momentum in [0,1)");
  cmd->add_flag("--sgd.decay", t.sgd.sqrt_decay, "1/sqrt(epoch) learning-rate decay");
  cmd->add_option("--dca.epsilon", t.dca.epsilon, "DCA relative stopping tolerance");
  cmd->add_option("--dca.max-outer", t.dca.max_outer, "DCA outer iteration cap");
  cmd->add_option("--dca.qp-tol", t.dca.qp_tol, "DCA subproblem KKT tolerance");
  cmd->add_option("--dccp.t0", t.dccp.t0, "initial slack penalty");
  cmd->add_option("--dccp.mu", t.dccp.mu, "penalty growth factor");
  cmd->add_option("--dccp.tmax", t.dccp.t_max, "penalty cap");
  cmd->add_option("--dccp.max-outer", t.dccp.max_outer, "CCP outer iteration cap");
  cmd->add_option("--dccp.slack-tol", t.dccp.slack_tol, "slack sum tolerance");
  cmd->add_option("--dccp.converge-tol", t.dccp.converge_tol,
                  "objective change tolerance");
  cmd->add_option("--dccp.qp-tol", t.dccp.qp_tol, "CCP subproblem KKT tolerance");
}

TrainerSpec build_spec(const TrainerOpts& t, const CommonOpts& c) {
  TrainerSpec spec = TrainerSpec::make(trainer_kind_from_string(t.trainer));
  spec.sgd = t.sgd;
  spec.dca = t.dca;
  spec.dccp = t.dccp;
  spec.sgd.seed = c.seed;
  spec.dca.seed = c.seed;
  spec.dccp.seed = c.seed;
  spec.sgd.init_scale = c.init_scale;
  spec.dca.init_scale = c.init_scale;
  spec.dccp.init_scale = c.init_scale;
  return spec;
}

CvOptions build_cv_options(const CommonOpts& c, int folds) {
  CvOptions opt;
  opt.k = folds;
  opt.seed = c.seed;
  opt.standardize = c.standardize;
  opt.r1 = c.r1;
  opt.r2 = c.r2;
  return opt;
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
}

void print_table(const ComparisonTable& table, std::ostream& os) {
  os << std::left << std::setw(18) << "dataset";
  for (const auto& tr : table.trainers) os << std::setw(26) << tr;
  os << "\n";
  for (std::size_t di = 0; di < table.datasets.size(); ++di) {
    os << std::setw(18) << table.datasets[di];
    for (std::size_t ti = 0; ti < table.trainers.size(); ++ti) {
      const CvResult& r = table.cells[di][ti];
      std::ostringstream cell;
      if (r.mape_defined) {
        cell << std::setprecision(4) << r.mape_mean << " +/- " << std::setprecision(3)
             << r.mape_std;
      } else {
        cell << "undefined";
      }
      os << std::setw(26) << cell.str();
    }
    os << "\n";
  }
  os << "\nmedian normalized MAPE:";
  for (std::size_t ti = 0; ti < table.trainers.size(); ++ti) {
    os << "  " << table.trainers[ti] << "=";
    if (std::isnan(table.median_normalized[ti]))
      os << "n/a";
    else
      os << std::setprecision(4) << table.median_normalized[ti];
  }
  os << "\n";
  for (const auto& pt : table.wilcoxon) {
    os << "wilcoxon " << pt.a << " vs " << pt.b << ": W=" << pt.result.W
       << " p=" << pt.result.p << (pt.result.degenerate ? " (degenerate)" : "") << "\n";
  }
}

int run_train(const std::string& data_path, const std::string& target,
              const TrainerOpts& topts, const CommonOpts& copts,
              const std::string& out_dir) {
  const Dataset d = impute_mean(load_csv(data_path, target));
  const TrainerSpec spec = build_spec(topts, copts);
  const CvOptions opt = build_cv_options(copts, 5);
  const auto [model, report] = train_full(d, spec, opt);

  fs::create_directories(out_dir);
  save_model(model, (fs::path(out_dir) / "model.json").string());

  json rep;
  rep["version"] = kVersion;
  rep["dataset"] = data_path;
  rep["trainer"] = spec.label;
  rep["standardize"] = opt.standardize;
  rep["train_mse"] = mse(model, d.training_set());
  rep["iterations"] = report.iterations;
  rep["termination"] = to_string(report.termination);
  rep["loss_trace"] = report.loss_trace;
  if (!report.penalty_trace.empty()) rep["penalty_trace"] = report.penalty_trace;
  if (!report.slack_trace.empty()) rep["slack_trace"] = report.slack_trace;
  rep["wall_time_seconds"] = report.wall_time_seconds;
  write_text(fs::path(out_dir) / "train_report.json", rep.dump(2) + "\n");

  std::cout << "trained " << spec.label << " on " << d.rows() << " samples: mse="
            << rep["train_mse"].get<double>() << ", " << rep["termination"].get<std::string>()
            << " after " << report.iterations << " iterations\n"
            << "model written to " << (fs::path(out_dir) / "model.json").string() << "\n";
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& target) {
  const LDerParams model = load_model(model_path);
  const Dataset d = impute_mean(load_csv(data_path, target));
  const Vec yhat = predict_batch(model, d.X);
  json out;
  out["model"] = model_path;
  out["dataset"] = data_path;
  out["samples"] = d.rows();
  out["mse"] = mse_of(d.y, yhat);
  const double mp = mape(d.y, yhat);
  out["mape"] = std::isfinite(mp) ? json(mp) : json(nullptr);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_cv_cmd(const std::string& data_path, const std::string& target,
               const TrainerOpts& topts, const CommonOpts& copts, int folds,
               const std::string& out_dir) {
  const Dataset d = impute_mean(load_csv(data_path, target));
  const TrainerSpec spec = build_spec(topts, copts);
  const CvOptions opt = build_cv_options(copts, folds);
  const CvResult res = run_cv(d, spec, opt);

  json rep = cv_result_to_json(res);
  rep["version"] = kVersion;
  if (!out_dir.empty()) write_text(fs::path(out_dir) / "cv_report.json", rep.dump(2) + "\n");

  std::cout << "cv " << spec.label << " on " << d.name << " (k=" << folds << "): mse "
            << res.mse_mean << " +/- " << res.mse_std << ", mape ";
  if (res.mape_defined)
    std::cout << res.mape_mean << " +/- " << res.mape_std;
  else
    std::cout << "undefined";
  std::cout << (res.partial ? " [partial]" : "") << "\n";
  if (!out_dir.empty())
    std::cout << "report written to " << (fs::path(out_dir) / "cv_report.json").string()
              << "\n";
  return 0;
}

int run_bench(const std::string& manifest_path, const CommonOpts& copts, int folds,
              const std::string& out_dir, const TrainerOpts& topts) {
  const auto datasets = load_manifest(manifest_path);
  std::vector<TrainerSpec> specs;
  for (const char* name : {"sgd", "dca", "dccp"}) {
    TrainerOpts one = topts;
    one.trainer = name;
    specs.push_back(build_spec(one, copts));
  }
  const CvOptions opt = build_cv_options(copts, folds);
  const ComparisonTable table = compare_trainers(datasets, specs, opt);

  fs::create_directories(out_dir);
  const json rep = table_to_json(table, opt);
  write_text(fs::path(out_dir) / "report.json", rep.dump(2) + "\n");
  write_table_csv(table, (fs::path(out_dir) / "table.csv").string());
  write_normalized_csv(table, (fs::path(out_dir) / "normalized.csv").string());

  print_table(table, std::cout);
  std::cout << "\nreports written to " << out_dir << "\n";
  return 0;
}

int run_synth(const ModelDims& dims, Index m, double noise, std::uint64_t seed,
              const std::string& out_path) {
  const auto inst = synth_pwl(dims, m, noise, seed);
  Dataset d;
  d.name = out_path;
  d.X = inst.data.X;
  d.y = inst.data.y;
  for (Index c = 0; c < dims.n; ++c) d.feature_names.push_back("x" + std::to_string(c + 1));
  write_csv(d, out_path);
  std::cout << "wrote " << m << "x" << dims.n << " synthetic dataset to " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear dilation-erosion regression toolkit"};
  app.require_subcommand(1);

  CommonOpts copts;
  TrainerOpts topts;
  std::string data_path, target, out_dir = "lder_out", model_path, manifest_path;
  int folds = 5;

  auto* train = app.add_subcommand("train", "train one model on a CSV dataset");
  train->add_option("--data", data_path, "CSV file")->required();
  train->add_option("--target", target, "target column (default: last)");
  train->add_option("--out", out_dir, "output directory");
  add_trainer_flags(train, topts);
  add_common_flags(train, copts);

  auto* eval = app.add_subcommand("eval", "score a saved model on a CSV dataset");
  eval->add_option("--model", model_path, "model JSON")->required();
  eval->add_option("--data", data_path, "CSV file")->required();
  eval->add_option("--target", target, "target column (default: last)");

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation of one trainer");
  cv->add_option("--data", data_path, "CSV file")->required();
  cv->add_option("--target", target, "target column (default: last)");
  cv->add_option("--folds", folds, "fold count");
  cv->add_option("--out", out_dir, "output directory");
  add_trainer_flags(cv, topts);
  add_common_flags(cv, copts);

  auto* bench = app.add_subcommand("bench", "compare all trainers over a manifest");
  bench->add_option("--manifest", manifest_path, "manifest JSON")->required();
  bench->add_option("--folds", folds, "fold count");
  bench->add_option("--out", out_dir, "output directory");
  add_trainer_flags(bench, topts);
  add_common_flags(bench, copts);

  auto* self = app.add_subcommand("selftest", "run the built-in invariant suite");
  add_common_flags(self, copts);

  Index synth_m = 200;
  double synth_noise = 0.0;
  ModelDims synth_dims{2, 2, 2};
  std::string synth_out = "synth.csv";
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--n", synth_dims.n, "input dimension");
  synth->add_option("--r1", synth_dims.r1, "ground-truth first-branch rows");
  synth->add_option("--r2", synth_dims.r2, "ground-truth second-branch rows");
  synth->add_option("--m", synth_m, "sample count");
  synth->add_option("--noise", synth_noise, "noise standard deviation");
  synth->add_option("--seed", copts.seed, "generator seed");
  synth->add_option("--out", synth_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_threads(copts.threads);
    if (train->parsed()) return run_train(data_path, target, topts, copts, out_dir);
    if (eval->parsed()) return run_eval(model_path, data_path, target);
    if (cv->parsed()) return run_cv_cmd(data_path, target, topts, copts, folds, out_dir);
    if (bench->parsed()) return run_bench(manifest_path, copts, folds, out_dir, topts);
    if (self->parsed()) {
      const int failures = selftest(std::cout);
      std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
      return failures == 0 ? 0 : 1;
    }
    if (synth->parsed())
      return run_synth(synth_dims, synth_m, synth_noise, copts.seed, synth_out);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cout << err.dump() << "\n";
    return 1;
  }
  return 0;
}
