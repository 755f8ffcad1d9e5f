#ifndef LMR_BASELINES_HPP
#define LMR_BASELINES_HPP

#include <vector>

#include "lmr/select.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace baselines {

// Plain mixture of Gaussian-linear regressions fitted by EM; the building
// block for the global (GM) and local (LM) comparison models.
struct MixRegFit {
  int K = 0;
  std::vector<ExpertParams> experts;
  VectorXd weights;  // mixing proportions p_k
  double loglik = 0.0;
  std::vector<double> loglik_trace;  // per accepted EM iteration
  bool forced_single = false;        // too few observations for any mixture
  bool converged = false;

  double density(const Eigen::Ref<const VectorXd>& x, double t) const;
};

// EM for a K-component mixture of regressions on (X, y); residual-sliced
// start, monotone in the observed log-likelihood.
MixRegFit em_mixreg(const MatrixXd& X, const VectorXd& y, int K, int max_iter = 1000);

// Global mixture: one fit to the pooled data, K selected by the criterion.
MixRegFit fit_gm(const ClusteredDataset& dataset, const std::vector<int>& k_range,
                 select::Criterion criterion);

// Local mixture: an independent fit per cluster with per-cluster selection
// (N in BIC is n_i). Clusters too small for a mixture fall back to the
// largest feasible K and are flagged.
std::vector<MixRegFit> fit_lm(const ClusteredDataset& dataset, const std::vector<int>& k_range,
                              select::Criterion criterion);

// Gaussian random-intercept model y_ij = x_ij.beta + v_i + eps_ij fitted by
// EM over v_i; the predictive cluster density is the empirical-Bayes normal
// plug-in N(x.beta + v_mean_i, sigma2 + v_var_i).
struct RiFit {
  VectorXd beta;
  double sigma2 = 1.0;
  double tau2 = 0.0;
  VectorXd v_mean;  // per-cluster E[v_i | Y_i]
  VectorXd v_var;   // per-cluster Var[v_i | Y_i]
  bool tau_floored = false;
  std::vector<double> loglik_trace;

  double density(Eigen::Index cluster, const Eigen::Ref<const VectorXd>& x, double t) const;
};

RiFit fit_ri(const ClusteredDataset& dataset);

}  // namespace baselines
}  // namespace lmr

#endif
