#include "lder/sgd.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "lder/rng.hpp"

namespace lder {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::EpochsExhausted:
      return "epochs-exhausted";
    case Termination::MaxIter:
      return "max_iter";
    case Termination::SubproblemFailure:
      return "subproblem-failure";
    case Termination::Diverged:
      return "diverged";
  }
  return "unknown";
}

std::vector<Index> epoch_shuffle(std::mt19937_64& gen, Index m) {
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = m - 1; i > 0; --i) {
    const Index j = static_cast<Index>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

LDerParams init_params(const ModelDims& dims, std::uint64_t seed, double init_scale) {
  if (!dims.valid()) throw DimensionError("init_params: invalid model dimensions");
  if (init_scale < 0.0) throw DomainError("init_params: init_scale must be >= 0");
  const double sd = init_scale / std::sqrt(static_cast<double>(dims.n + 1));
  std::mt19937_64 gen(rng::splitmix64(seed));
  Vec alpha(dims.flat_size());
  for (Index i = 0; i < alpha.size(); ++i) alpha(i) = sd * rng::normal(gen);
  return unflatten(alpha, dims);
}

std::pair<LDerParams, TrainReport> train_sgd(const TrainingSet& t,
                                             const ModelDims& dims,
                                             const SgdConfig& cfg) {
  check_training_set(t);
  if (t.dim() != dims.n)
    throw DimensionError("train_sgd: training set dimension does not match dims.n");
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw DomainError("train_sgd: epochs and batch_size must be positive");
  if (cfg.learning_rate < 0.0) throw DomainError("train_sgd: negative learning rate");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw DomainError("train_sgd: momentum must lie in [0,1)");

  const auto start = std::chrono::steady_clock::now();
  const Index m = t.size();
  const int batch = static_cast<int>(std::min<Index>(cfg.batch_size, m));

  LDerParams params = init_params(dims, cfg.seed, cfg.init_scale);
  Vec alpha = flatten(params);
  Vec velocity = Vec::Zero(alpha.size());

  std::mt19937_64 shuffle_gen(rng::splitmix64(cfg.seed ^ 0x5ba7011e5ULL));

  TrainReport report;
  report.loss_trace.reserve(cfg.epochs + 1);
  report.loss_trace.push_back(mse(params, t));
  report.termination = Termination::EpochsExhausted;

  TrainingSet minibatch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.sqrt_decay
                          ? cfg.learning_rate / std::sqrt(static_cast<double>(epoch + 1))
                          : cfg.learning_rate;
    const std::vector<Index> order = epoch_shuffle(shuffle_gen, m);
    for (Index at = 0; at < m; at += batch) {
      const Index bsz = std::min<Index>(batch, m - at);
      minibatch.X.resize(bsz, t.dim());
      minibatch.y.resize(bsz);
      for (Index i = 0; i < bsz; ++i) {
        minibatch.X.row(i) = t.X.row(order[at + i]);
        minibatch.y(i) = t.y(order[at + i]);
      }
      const Vec g = grad_mse(params, minibatch);
      velocity = cfg.momentum * velocity - lr * g;
      alpha += velocity;
      params = unflatten(alpha, dims);
    }
    const double loss = mse(params, t);
    report.loss_trace.push_back(loss);
    report.iterations = epoch + 1;
    if (!std::isfinite(loss)) {
      report.termination = Termination::Diverged;
      break;
    }
  }

  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(params), std::move(report)};
}

}  // namespace lder
