#ifndef LDER_DATA_HPP
#define LDER_DATA_HPP

/// Dataset ingestion and preparation: CSV loading with missing-cell markers,
/// column-mean imputation, feature standardization, shuffled k-fold plans,
/// and synthetic piecewise-linear instances with known ground truth.
///
/// CSV convention: header row, UTF-8, '.' decimal point, empty cell = missing.
/// Missing values are NaN in memory and are never written back as NaN; the
/// writer emits an empty cell.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lder/common.hpp"
#include "lder/loss.hpp"
#include "lder/model.hpp"

namespace lder {

struct Dataset {
  std::string name;
  Mat X;  // m x n, may contain NaN before imputation
  Vec y;  // m
  std::vector<std::string> feature_names;

  Index rows() const { return X.rows(); }
  Index cols() const { return X.cols(); }
  bool has_missing() const;
  TrainingSet training_set() const { return {X, y}; }
};

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per sample, 0..k-1
  std::uint64_t seed = 0;

  std::vector<Index> test_indices(int fold) const;
  std::vector<Index> train_indices(int fold) const;
};

struct StandardizeStats {
  Vec mean;
  Vec std;  // floored at 1e-12
};

// target_column: header name, or empty for the last column.
Dataset load_csv(const std::string& path, const std::string& target_column = "");
void write_csv(const Dataset& d, const std::string& path);

// Missing entries replaced by the column mean over observed entries; a fully
// missing column raises LoadError naming the column.
Dataset impute_mean(const Dataset& d);

std::pair<Mat, StandardizeStats> standardize(const Mat& X);
Mat apply_standardize(const StandardizeStats& stats, const Mat& X);
Mat invert_standardize(const StandardizeStats& stats, const Mat& X);

// Folds a standardization of the inputs into the model weights, so the
// returned model acts on raw feature space.
LDerParams absorb_standardization(const LDerParams& p, const StandardizeStats& stats);

FoldPlan kfold_split(Index m, int k, std::uint64_t seed);

struct SynthInstance {
  TrainingSet data;
  LDerParams truth;
};

// Ground-truth parameters drawn like init_params, X uniform on [-1,1]^n,
// y = predict + noise_std * N(0,1).
SynthInstance synth_pwl(const ModelDims& dims, Index m, double noise_std,
                        std::uint64_t seed);

// Provenance serialization.
std::string dataset_to_json(const Dataset& d);
std::string foldplan_to_json(const FoldPlan& f);

}  // namespace lder

#endif  // LDER_DATA_HPP
