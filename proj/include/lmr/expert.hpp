#ifndef LMR_EXPERT_HPP
#define LMR_EXPERT_HPP

#include "lmr/types.hpp"

namespace lmr {

// log h_k(y | x, phi_k) for one observation.
double log_density(const ExpertParams& params, double y, const Eigen::Ref<const VectorXd>& x);

// n x K matrix of log h_k(y_j | x_j) for a whole cluster.
MatrixXd log_density_matrix(const std::vector<ExpertParams>& experts, const Cluster& cluster);

struct WeightedMleResult {
  ExpertParams params;
  bool ridged = false;  // normal equations were rank-deficient and ridged
};

// Weighted maximum likelihood for one component. Gaussian-linear solves the
// weighted normal equations in closed form; Poisson runs Newton-Raphson to
// gradient norm < 1e-8.
//
// If the weighted normal equations are singular, throws NumericalError unless
// ridge_if_singular is set, in which case a ridge term of 1e-8 is added and
// the result is flagged.
WeightedMleResult weighted_mle(ExpertFamily family, const MatrixXd& X, const VectorXd& y,
                               const VectorXd& weights, bool ridge_if_singular = false);

}  // namespace lmr

#endif
