#include "lmr/predict.hpp"

#include <cmath>
#include <limits>

#include "lmr/dirichlet.hpp"
#include "lmr/errors.hpp"
#include "lmr/expert.hpp"

namespace lmr {
namespace predict {

namespace {

VectorXd mixture_on_grid(const std::vector<ExpertParams>& experts,
                         const Eigen::Ref<const VectorXd>& weights,
                         const Eigen::Ref<const VectorXd>& x,
                         const Eigen::Ref<const VectorXd>& grid) {
  VectorXd out = VectorXd::Zero(grid.size());
  for (std::size_t k = 0; k < experts.size(); ++k) {
    const double wk = weights[static_cast<Eigen::Index>(k)];
    if (wk == 0.0) continue;
    for (Eigen::Index g = 0; g < grid.size(); ++g)
      out[g] += wk * std::exp(log_density(experts[k], grid[g], x));
  }
  return out;
}

}  // namespace

VectorXd cluster_density(const FitResult& fit, const std::string& cluster_id,
                         const Eigen::Ref<const VectorXd>& x,
                         const Eigen::Ref<const VectorXd>& grid) {
  const Eigen::Index i = fit.cluster_index(cluster_id);
  VectorXd weights = fit.summaries.pi_hat.row(i).transpose();
  return mixture_on_grid(fit.experts, weights, x, grid);
}

VectorXd marginal_density(const FitResult& fit, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& grid, const VectorXd* w) {
  VectorXd weights;
  if (fit.mixing.kind == MixingModel::Kind::Static) {
    weights = fit.K == 1 ? VectorXd::Ones(1) : dirichlet::mean(fit.mixing.alpha);
  } else {
    if (w == nullptr)
      throw ValidationError("marginal_density: covariate-dependent mixing needs cluster covariates");
    weights = dirichlet::cd_mean(fit.mixing.gamma, *w);
  }
  return mixture_on_grid(fit.experts, weights, x, grid);
}

VectorXd default_grid(const FitResult& fit, const Eigen::Ref<const VectorXd>& x, int points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sigma_max = 0.0;
  for (const auto& e : fit.experts) {
    const double mean = e.family == ExpertFamily::GaussianLinear ? e.beta.dot(x)
                                                                 : std::exp(e.beta.dot(x));
    const double sd = e.family == ExpertFamily::GaussianLinear ? std::sqrt(e.sigma2)
                                                               : std::sqrt(mean);
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
    sigma_max = std::max(sigma_max, sd);
  }
  return VectorXd::LinSpaced(points, lo - 6.0 * sigma_max, hi + 6.0 * sigma_max);
}

}  // namespace predict
}  // namespace lmr
