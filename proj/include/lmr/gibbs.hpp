#ifndef LMR_GIBBS_HPP
#define LMR_GIBBS_HPP

#include "lmr/rng.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace gibbs {

struct ClusterPosterior {
  MatrixXd z_star;      // n_i x K, Rao-Blackwellized membership probabilities
  VectorXd logpi_star;  // K, E[log pi_ik | Y_i]
  VectorXd pi_hat;      // K, E[pi_ik | Y_i]
};

// Monte Carlo E-step for one cluster: alternating draws of z | pi and pi | z
// from the full conditionals, started at the prior mean. z_star averages the
// conditional membership probabilities rather than raw indicators. Clusters
// with no observations are handled analytically (posterior = prior).
ClusterPosterior gibbs_estep(const Cluster& cluster, const std::vector<ExpertParams>& experts,
                             const Eigen::Ref<const VectorXd>& alpha_i, int num_samples,
                             int burn_in, Rng& rng);

// Runs gibbs_estep independently per cluster with a per-cluster RNG stream
// keyed on (seed, cluster id); deterministic for any thread count.
PosteriorSummaries posterior_summaries(const ClusteredDataset& dataset,
                                       const std::vector<ExpertParams>& experts,
                                       const MixingModel& mixing, int num_samples, int burn_in,
                                       std::uint64_t seed, int threads = 1);

}  // namespace gibbs
}  // namespace lmr

#endif
