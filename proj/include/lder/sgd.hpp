#ifndef LDER_SGD_HPP
#define LDER_SGD_HPP

/// Minibatch stochastic subgradient descent on the MSE. Plain SGD with
/// classical momentum; the loss trace records the full-dataset MSE after
/// every epoch so traces are comparable with the DC trainers.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "lder/loss.hpp"
#include "lder/model.hpp"
#include "lder/report.hpp"

namespace lder {

struct SgdConfig {
  double learning_rate = 0.01;
  int epochs = 2000;
  int batch_size = 32;  // clamped to m at run time
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  bool sqrt_decay = false;  // optional 1/sqrt(epoch) learning-rate decay
};

// Entries i.i.d. normal with standard deviation init_scale/sqrt(n+1),
// deterministic per seed.
LDerParams init_params(const ModelDims& dims, std::uint64_t seed, double init_scale);

// Fisher-Yates permutation of 0..m-1 drawn from the engine; one per epoch.
std::vector<Index> epoch_shuffle(std::mt19937_64& gen, Index m);

std::pair<LDerParams, TrainReport> train_sgd(const TrainingSet& t,
                                             const ModelDims& dims,
                                             const SgdConfig& cfg);

}  // namespace lder

#endif  // LDER_SGD_HPP
