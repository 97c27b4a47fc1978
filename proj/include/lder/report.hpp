#ifndef LDER_REPORT_HPP
#define LDER_REPORT_HPP

#include <vector>

#include "lder/common.hpp"

namespace lder {

enum class Termination {
  Converged,
  EpochsExhausted,
  MaxIter,
  SubproblemFailure,
  Diverged,
};

const char* to_string(Termination t);

// Outcome of a training run, common to all three trainers.
struct TrainReport {
  std::vector<double> loss_trace;  // full-dataset MSE per epoch / outer iteration
  int iterations = 0;
  double wall_time_seconds = 0.0;
  Termination termination = Termination::EpochsExhausted;

  // DC-trainer diagnostics; empty when not applicable.
  std::vector<double> penalty_trace;    // dccp: t_k used by each subproblem
  std::vector<double> slack_trace;      // dccp: sum of slacks per subproblem
  Vec final_alpha;                      // dca/dccp: last iterate (returned params
                                        //           may be an earlier, better one)
  Vec final_xi;                         // dccp: residual variables at the last iterate
  double final_subgradient_norm = 0.0;  // dca: ||beta*||_inf at termination
};

}  // namespace lder

#endif  // LDER_REPORT_HPP
