#ifndef LMR_SELECT_HPP
#define LMR_SELECT_HPP

#include <utility>
#include <vector>

#include "lmr/types.hpp"

namespace lmr {
namespace select {

enum class Criterion { AIC, BIC };

struct SelectConfig {
  int ml_draws = 10000;                            // Monte Carlo draws (B)
  std::vector<int> k_range = {1, 2, 3, 4, 5, 6, 7, 8};
  Criterion criterion = Criterion::BIC;
};

// AIC/BIC from the per-cluster log marginal likelihoods. Parameter count:
// K * dim(phi) + K Dirichlet parameters (static) or K * q (covariate-
// dependent); K = 1 is a plain non-mixture fit counting dim(phi) only.
// dim(phi) includes sigma2 for the Gaussian family (p + 1).
std::pair<double, double> information_criteria(const ClusteredDataset& dataset,
                                               const FitResult& fit);

// Number of free parameters used in the penalty, as reported by the CLI.
int parameter_count(const FitResult& fit);

// Degenerate K = 1 fit: one expert by direct maximum likelihood, no Dirichlet
// layer; the marginal likelihood is exact.
FitResult fit_single_expert(const ClusteredDataset& dataset, ExpertFamily family);

struct KFitRow {
  int K = 0;
  double aic = 0.0;
  double bic = 0.0;
  bool ok = false;
  std::string error;
};

struct SelectionResult {
  FitResult best;
  int selected_K = 0;
  std::vector<KFitRow> table;

  // argmin of the given criterion over the successful rows (ties to smaller K)
  int argmin_k(Criterion c) const;
};

// Fits every K in config.k_range and returns the fit minimizing the chosen
// criterion; per-K failures are recorded in the table, ties go to smaller K.
SelectionResult select_k(const ClusteredDataset& dataset, const SelectConfig& config,
                         ExpertFamily family, MixingModel::Kind kind, const McemConfig& mcem);

}  // namespace select
}  // namespace lmr

#endif
