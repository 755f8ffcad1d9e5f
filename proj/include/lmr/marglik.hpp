#ifndef LMR_MARGLIK_HPP
#define LMR_MARGLIK_HPP

#include "lmr/rng.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace marglik {

struct McEstimate {
  double log_ml = 0.0;
  double std_error = 0.0;  // Monte Carlo standard error of log_ml (delta method)
};

// Monte Carlo marginal likelihood of one cluster: B Dirichlet draws of pi_i,
// inner products over observations accumulated in log space.
McEstimate log_ml_mc(const Cluster& cluster, const std::vector<ExpertParams>& experts,
                     const Eigen::Ref<const VectorXd>& alpha_i, int draws, Rng& rng);

// Exact log marginal likelihood by enumerating all K^{n_i} label assignments
// with Dirichlet-multinomial weights. Guarded at K^{n_i} <= 1e6; the test
// oracle for log_ml_mc and the Gibbs E-step.
double log_ml_exact(const Cluster& cluster, const std::vector<ExpertParams>& experts,
                    const Eigen::Ref<const VectorXd>& alpha_i);

// Same enumeration on a precomputed n x K matrix of log component densities.
double log_ml_exact_from_logh(const MatrixXd& logh, const Eigen::Ref<const VectorXd>& alpha_i);

// Per-cluster log marginal likelihoods for a whole dataset, with per-cluster
// RNG streams keyed on (seed, cluster id).
VectorXd log_ml_dataset(const ClusteredDataset& dataset, const std::vector<ExpertParams>& experts,
                        const MixingModel& mixing, int draws, std::uint64_t seed, int threads = 1);

}  // namespace marglik
}  // namespace lmr

#endif
