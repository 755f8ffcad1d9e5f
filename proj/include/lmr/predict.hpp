#ifndef LMR_PREDICT_HPP
#define LMR_PREDICT_HPP

#include <string>

#include "lmr/types.hpp"

namespace lmr {
namespace predict {

// Fitted cluster-wise conditional density sum_k pihat_ik h_k(t | x) on a grid.
VectorXd cluster_density(const FitResult& fit, const std::string& cluster_id,
                         const Eigen::Ref<const VectorXd>& x,
                         const Eigen::Ref<const VectorXd>& grid);

// Marginal (cluster-invariant) density with prior-mean weights; covariate-
// dependent mixing needs the cluster covariates w.
VectorXd marginal_density(const FitResult& fit, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& grid, const VectorXd* w = nullptr);

// 512 equally spaced points spanning [min fitted mean - 6*sigma_max,
// max fitted mean + 6*sigma_max] at covariates x.
VectorXd default_grid(const FitResult& fit, const Eigen::Ref<const VectorXd>& x, int points = 512);

}  // namespace predict
}  // namespace lmr

#endif
