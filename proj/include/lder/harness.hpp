#ifndef LDER_HARNESS_HPP
#define LDER_HARNESS_HPP

/// Cross-validation benchmark harness: trains any of the three trainers over
/// shuffled k-fold plans, scores MSE/MAPE on held-out folds in original
/// target units, aggregates mean/std, builds the trainer-comparison table
/// with per-dataset min-max normalized scores, and runs Wilcoxon signed-rank
/// tests between trainer columns.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lder/data.hpp"
#include "lder/dca.hpp"
#include "lder/dccp.hpp"
#include "lder/sgd.hpp"

namespace lder {

inline constexpr const char* kVersion = "0.1.0";

enum class TrainerKind { Sgd, Dca, Dccp };
const char* to_string(TrainerKind k);
TrainerKind trainer_kind_from_string(const std::string& name);

// One column of the comparison: a trainer plus its configuration. Only the
// config matching `kind` is used.
struct TrainerSpec {
  std::string label;
  TrainerKind kind = TrainerKind::Sgd;
  SgdConfig sgd;
  DcaConfig dca;
  CcpConfig dccp;

  static TrainerSpec make(TrainerKind kind, const std::string& label = "");
};

struct CvOptions {
  int k = 5;
  std::uint64_t seed = 0;
  bool standardize = true;
  Index r1 = 10;
  Index r2 = 10;
};

struct FoldScore {
  int fold = 0;
  bool ok = false;
  std::string error;
  double test_mse = 0.0;
  double test_mape = 0.0;  // +inf when undefined (zero target in the fold)
  double wall_time_seconds = 0.0;
  TrainReport report;
};

struct CvResult {
  std::string dataset;
  std::string trainer;
  nlohmann::json config;  // the trainer configuration that produced the scores
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<FoldScore> folds;
  bool partial = false;       // some fold failed
  bool mape_defined = true;   // false when any fold MAPE is undefined
  double mse_mean = 0.0, mse_std = 0.0;
  double mape_mean = 0.0, mape_std = 0.0;  // meaningless when !mape_defined
  double time_mean_seconds = 0.0;
};

// Trains on k-1 folds (features standardized on the training folds when
// opt.standardize), evaluates the held-out fold on raw targets.
CvResult run_cv(const Dataset& dataset, const TrainerSpec& spec, const CvOptions& opt);

// Trains one model on the full dataset; the returned model acts on raw
// feature space even when standardization is on.
std::pair<LDerParams, TrainReport> train_full(const Dataset& dataset,
                                              const TrainerSpec& spec,
                                              const CvOptions& opt);

struct WilcoxonResult {
  double W = 0.0;
  double p = 1.0;
  int n_used = 0;        // pairs left after zero-difference discard
  bool degenerate = false;
};

// Paired two-sided test; zero differences discarded, tied |differences| get
// average ranks. Exact null distribution for n <= 25, normal approximation
// with continuity and tie corrections beyond.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b);

struct ComparisonTable {
  std::vector<std::string> datasets;
  std::vector<std::string> trainers;
  std::vector<std::vector<CvResult>> cells;  // [dataset][trainer]
  Mat mape_mean;        // +inf marks undefined cells
  Mat normalized;       // per-dataset min-max of mape_mean; NaN when undefined
  std::vector<double> median_normalized;  // per trainer, over defined rows

  struct PairTest {
    std::string a, b;
    WilcoxonResult result;
  };
  std::vector<PairTest> wilcoxon;  // every trainer pair, on per-dataset mean MAPE
};

ComparisonTable compare_trainers(const std::vector<Dataset>& datasets,
                                 const std::vector<TrainerSpec>& specs,
                                 const CvOptions& opt);

// --- report emission -------------------------------------------------------

nlohmann::json cv_result_to_json(const CvResult& r);
nlohmann::json table_to_json(const ComparisonTable& t, const CvOptions& opt);

// Removes every object key containing "time" (recursively); used to compare
// reports across runs without the wall-clock fields.
void strip_timing_fields(nlohmann::json& doc);

void write_table_csv(const ComparisonTable& t, const std::string& path);
void write_normalized_csv(const ComparisonTable& t, const std::string& path);

// Manifest: a JSON array of {"path":..., "target_column":..., "name":...};
// paths resolve relative to the manifest's directory. Datasets are imputed
// on load.
std::vector<Dataset> load_manifest(const std::string& path);

// Quick invariant suite; prints one line per check, returns failure count.
int selftest(std::ostream& out);

}  // namespace lder

#endif  // LDER_HARNESS_HPP
