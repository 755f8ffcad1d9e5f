#ifndef LMR_DIRICHLET_HPP
#define LMR_DIRICHLET_HPP

#include <vector>

#include "lmr/rng.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace dirichlet {

// Dirichlet log-density at an interior simplex point.
double log_pdf(const Eigen::Ref<const VectorXd>& pi, const Eigen::Ref<const VectorXd>& alpha);

// One draw via normalized gamma variates; coordinates are clamped away from
// the boundary at 1e-12 and renormalized so downstream logs stay finite.
VectorXd sample(const Eigen::Ref<const VectorXd>& alpha, Rng& rng);

// Prior mean p_k = alpha_k / sum(alpha).
VectorXd mean(const Eigen::Ref<const VectorXd>& alpha);

// Maximizer of m*lgamma(sum a) - m*sum lgamma(a_k) + sum_k a_k * m*logpi_bar_k,
// the Dirichlet M-step objective. Newton in log-alpha coordinates with a
// backtracking gradient-ascent fallback; converges to gradient norm < 1e-8.
// objective_trace, when given, records the objective at every accepted step.
VectorXd mle_static(const Eigen::Ref<const VectorXd>& logpi_bar, int m,
                    const Eigen::Ref<const VectorXd>& alpha_init,
                    std::vector<double>* objective_trace = nullptr);

// The covariate-dependent M-step objective Q(gamma) and its maximizer.
// W is m x q (rows w_i), logpi_star is m x K, gamma is K x q.
double cd_objective(const MatrixXd& gamma, const MatrixXd& W, const MatrixXd& logpi_star);
MatrixXd mle_covariate(const MatrixXd& gamma_init, const MatrixXd& W, const MatrixXd& logpi_star);

// E[pi_ik] under alpha_ik = exp(w . gamma_k): the softmax of w . gamma_k.
VectorXd cd_mean(const MatrixXd& gamma, const Eigen::Ref<const VectorXd>& w);

}  // namespace dirichlet
}  // namespace lmr

#endif
