#include "lmr/expert.hpp"

#include <cmath>

#include "lmr/errors.hpp"

namespace lmr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kSigma2Floor = 1e-8;
constexpr double kRidge = 1e-8;

double poisson_log_pmf(double y, double log_mu) {
  if (y < 0.0 || std::abs(y - std::round(y)) > 1e-9)
    throw NumericalError("Poisson response must be a nonnegative integer, got " + std::to_string(y));
  return y * log_mu - std::exp(log_mu) - std::lgamma(y + 1.0);
}

}  // namespace

double log_density(const ExpertParams& params, double y, const Eigen::Ref<const VectorXd>& x) {
  const double eta = params.beta.dot(x);
  if (params.family == ExpertFamily::GaussianLinear) {
    const double r = y - eta;
    return -0.5 * (kLog2Pi + std::log(params.sigma2) + r * r / params.sigma2);
  }
  return poisson_log_pmf(y, eta);
}

MatrixXd log_density_matrix(const std::vector<ExpertParams>& experts, const Cluster& cluster) {
  const Eigen::Index n = cluster.size();
  const Eigen::Index K = static_cast<Eigen::Index>(experts.size());
  MatrixXd logh(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& e = experts[k];
    VectorXd eta = cluster.X * e.beta;
    if (e.family == ExpertFamily::GaussianLinear) {
      const double c = -0.5 * (kLog2Pi + std::log(e.sigma2));
      logh.col(k) = ((cluster.y - eta).array().square() * (-0.5 / e.sigma2) + c).matrix();
    } else {
      for (Eigen::Index j = 0; j < n; ++j) logh(j, k) = poisson_log_pmf(cluster.y[j], eta[j]);
    }
  }
  return logh;
}

namespace {

WeightedMleResult gaussian_weighted_mle(const MatrixXd& X, const VectorXd& y,
                                        const VectorXd& w, bool ridge_if_singular) {
  const Eigen::Index p = X.cols();
  MatrixXd A = X.transpose() * w.asDiagonal() * X;
  VectorXd b = X.transpose() * (w.cwiseProduct(y));

  Eigen::FullPivLU<MatrixXd> lu(A);
  WeightedMleResult out;
  if (lu.rank() < p) {
    if (!ridge_if_singular)
      throw NumericalError("weighted normal equations are rank-deficient (rank " +
                           std::to_string(lu.rank()) + " < " + std::to_string(p) + ")");
    A.diagonal().array() += kRidge;
    out.ridged = true;
  }
  VectorXd beta = A.ldlt().solve(b);

  const double wsum = w.sum();
  const double rss = (w.array() * (y - X * beta).array().square()).sum();
  out.params.family = ExpertFamily::GaussianLinear;
  out.params.beta = std::move(beta);
  out.params.sigma2 = std::max(rss / wsum, kSigma2Floor);
  return out;
}

WeightedMleResult poisson_weighted_mle(const MatrixXd& X, const VectorXd& y,
                                       const VectorXd& w, bool ridge_if_singular) {
  const Eigen::Index p = X.cols();
  for (Eigen::Index j = 0; j < y.size(); ++j)
    if (y[j] < 0.0 || std::abs(y[j] - std::round(y[j])) > 1e-9)
      throw NumericalError("Poisson response must be a nonnegative integer, got " +
                           std::to_string(y[j]));

  VectorXd beta = VectorXd::Zero(p);
  // Weighted log-likelihood up to the lgamma(y+1) constant.
  auto loglik = [&](const VectorXd& b) {
    VectorXd eta = X * b;
    return (w.array() * (y.array() * eta.array() - eta.array().exp())).sum();
  };

  double ll = loglik(beta);
  bool ridged = false;
  for (int iter = 0; iter < 100; ++iter) {
    VectorXd mu = (X * beta).array().exp();
    VectorXd grad = X.transpose() * (w.cwiseProduct(y - mu));
    if (grad.norm() < 1e-8)
      return {{ExpertFamily::PoissonLog, beta, 1.0}, ridged};
    MatrixXd H = X.transpose() * (w.cwiseProduct(mu)).asDiagonal() * X;
    Eigen::FullPivLU<MatrixXd> lu(H);
    if (lu.rank() < p) {
      if (!ridge_if_singular) throw NumericalError("Poisson weighted Hessian is rank-deficient");
      H.diagonal().array() += kRidge;
      ridged = true;
    }
    VectorXd step = H.ldlt().solve(grad);
    // A numerically null step means the gradient is pure roundoff.
    if (step.norm() <= 1e-10 * (1.0 + beta.norm()))
      return {{ExpertFamily::PoissonLog, beta, 1.0}, ridged};
    // Halve until the log-likelihood does not decrease.
    double scale = 1.0;
    VectorXd cand = beta + step;
    double ll_cand = loglik(cand);
    int halvings = 0;
    while (!(ll_cand >= ll - 1e-14) && halvings < 60) {
      scale *= 0.5;
      cand = beta + scale * step;
      ll_cand = loglik(cand);
      ++halvings;
    }
    beta = cand;
    ll = ll_cand;
  }
  throw NonConvergenceError("Poisson weighted MLE did not converge within 100 Newton iterations");
}

}  // namespace

WeightedMleResult weighted_mle(ExpertFamily family, const MatrixXd& X, const VectorXd& y,
                               const VectorXd& weights, bool ridge_if_singular) {
  if (X.rows() != y.size() || weights.size() != y.size())
    throw ValidationError("weighted_mle: inconsistent dimensions");
  if ((weights.array() < 0.0).any()) throw ValidationError("weighted_mle: negative weight");
  if (!(weights.sum() > 0.0)) throw ValidationError("weighted_mle: weights sum to zero");

  if (family == ExpertFamily::GaussianLinear)
    return gaussian_weighted_mle(X, y, weights, ridge_if_singular);
  return poisson_weighted_mle(X, y, weights, ridge_if_singular);
}

}  // namespace lmr
