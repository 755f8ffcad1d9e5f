#ifndef LMR_MCEM_HPP
#define LMR_MCEM_HPP

#include <optional>
#include <vector>

#include "lmr/rng.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace mcem {

struct InitialParams {
  std::vector<ExpertParams> experts;
  VectorXd alpha;  // K, static mixing start
  MatrixXd gamma;  // K x q, covariate-dependent start
};

// Batch-mean stopping rule: compares the mean of the last H parameter
// iterates with the mean lagged by d; fires when the relative difference
// drops below epsilon. The earliest well-defined check is at iterate H + d.
class BatchMeanMonitor {
 public:
  BatchMeanMonitor(int batch_size, int lag, double epsilon, double delta)
      : H_(batch_size), d_(lag), epsilon_(epsilon), delta_(delta) {}

  // Returns true when the rule fires at this iterate.
  bool push(const VectorXd& theta);

 private:
  int H_, d_;
  double epsilon_, delta_;
  std::vector<VectorXd> history_;
};

// Parameters flattened in fixed order: (beta_1 [, sigma2_1], ..., beta_K
// [, sigma2_K], alpha or vec(gamma)); the vector the stopping rule monitors.
VectorXd flatten_params(const std::vector<ExpertParams>& experts, const MixingModel& mixing);

// Residual-sliced start: pooled single-expert fit, observations grouped by
// residual quantile, one weighted MLE per group. alpha starts at all ones,
// gamma at zero.
InitialParams initialize(const ClusteredDataset& dataset, int K, ExpertFamily family, Rng& rng,
                         Eigen::Index q = 0);

// Random-assignment start used for the extra multi-start runs.
InitialParams random_init(const ClusteredDataset& dataset, int K, ExpertFamily family, Rng& rng,
                          Eigen::Index q = 0);

// The MCEM driver: alternates the Gibbs E-step with the two M-step
// maximizations until the batch-mean rule fires or max_iter is hit. When no
// initial parameters are given, runs config.starts starts (one residual-sliced,
// the rest random) and keeps the run with the highest Monte Carlo log marginal
// likelihood. ml_draws is the Monte Carlo budget for that likelihood.
FitResult fit(const ClusteredDataset& dataset, int K, ExpertFamily family, MixingModel::Kind kind,
              const McemConfig& config, std::optional<InitialParams> init = std::nullopt,
              int ml_draws = 10000);

}  // namespace mcem
}  // namespace lmr

#endif
