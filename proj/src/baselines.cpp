#include "lmr/baselines.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "lmr/errors.hpp"
#include "lmr/expert.hpp"
#include "lmr/special.hpp"

namespace lmr {
namespace baselines {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double gaussian_log_pdf(double t, double mean, double var) {
  const double r = t - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

// Observed log-likelihood of a mixture of regressions.
double mixreg_loglik(const MatrixXd& X, const VectorXd& y,
                     const std::vector<ExpertParams>& experts, const VectorXd& weights) {
  const Eigen::Index n = y.size();
  const Eigen::Index K = weights.size();
  double ll = 0.0;
  VectorXd terms(K);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < K; ++k)
      terms[k] = std::log(weights[k]) + log_density(experts[k], y[j], X.row(j).transpose());
    ll += log_sum_exp(terms);
  }
  return ll;
}

std::vector<int> residual_slices(const MatrixXd& X, const VectorXd& y, int K) {
  const Eigen::Index n = y.size();
  ExpertParams pooled = weighted_mle(ExpertFamily::GaussianLinear, X, y, VectorXd::Ones(n),
                                     /*ridge_if_singular=*/true)
                            .params;
  VectorXd resid = y - X * pooled.beta;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return resid[a] < resid[b]; });
  std::vector<int> group(n);
  for (Eigen::Index r = 0; r < n; ++r) group[order[r]] = static_cast<int>((r * K) / n);
  return group;
}

int mixreg_parameter_count(int K, Eigen::Index p) {
  return K * (static_cast<int>(p) + 1) + (K - 1);
}

}  // namespace

double MixRegFit::density(const Eigen::Ref<const VectorXd>& x, double t) const {
  double v = 0.0;
  for (int k = 0; k < K; ++k)
    v += weights[k] * std::exp(log_density(experts[k], t, x));
  return v;
}

MixRegFit em_mixreg(const MatrixXd& X, const VectorXd& y, int K, int max_iter) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols();
  if (n < 1) throw ValidationError("em_mixreg: no observations");

  MixRegFit fit;
  fit.K = K;
  if (K == 1) {
    fit.experts.push_back(
        weighted_mle(ExpertFamily::GaussianLinear, X, y, VectorXd::Ones(n), true).params);
    fit.weights = VectorXd::Ones(1);
    fit.loglik = mixreg_loglik(X, y, fit.experts, fit.weights);
    fit.loglik_trace.push_back(fit.loglik);
    fit.converged = true;
    return fit;
  }

  std::vector<int> group = residual_slices(X, y, K);
  for (int k = 0; k < K; ++k) {
    VectorXd w = VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j)
      if (group[j] == k) w[j] = 1.0;
    fit.experts.push_back(weighted_mle(ExpertFamily::GaussianLinear, X, y, w, true).params);
  }
  fit.weights = VectorXd::Constant(K, 1.0 / K);

  double ll = mixreg_loglik(X, y, fit.experts, fit.weights);
  fit.loglik_trace.push_back(ll);
  MatrixXd resp(n, K);
  VectorXd terms(K);
  for (int iter = 0; iter < max_iter; ++iter) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < K; ++k)
        terms[k] = std::log(fit.weights[k]) + log_density(fit.experts[k], y[j], X.row(j).transpose());
      const double lse = log_sum_exp(terms);
      for (Eigen::Index k = 0; k < K; ++k) resp(j, k) = std::exp(terms[k] - lse);
    }
    for (int k = 0; k < K; ++k)
      fit.experts[k] =
          weighted_mle(ExpertFamily::GaussianLinear, X, y, resp.col(k), true).params;
    fit.weights = resp.colwise().mean();

    const double ll_new = mixreg_loglik(X, y, fit.experts, fit.weights);
    fit.loglik_trace.push_back(ll_new);
    if (ll_new - ll < 1e-10 * (std::abs(ll) + 1.0)) {
      fit.loglik = ll_new;
      fit.converged = true;
      return fit;
    }
    ll = ll_new;
  }
  throw NonConvergenceError("em_mixreg: no convergence after " + std::to_string(max_iter) +
                            " iterations");
}

namespace {

MixRegFit select_mixreg(const MatrixXd& X, const VectorXd& y, const std::vector<int>& k_range,
                        select::Criterion criterion, bool forced_single) {
  const double N = static_cast<double>(y.size());
  MixRegFit best;
  double best_value = std::numeric_limits<double>::infinity();
  std::string last_error;
  for (int K : k_range) {
    try {
      MixRegFit fit = em_mixreg(X, y, K);
      const double count = mixreg_parameter_count(K, X.cols());
      const double v = -2.0 * fit.loglik +
                       (criterion == select::Criterion::AIC ? 2.0 * count : count * std::log(N));
      if (v < best_value) {
        best_value = v;
        best = std::move(fit);
      }
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (best.K == 0)
    throw NonConvergenceError("mixture selection failed for every K; last error: " + last_error);
  best.forced_single = forced_single;
  return best;
}

}  // namespace

MixRegFit fit_gm(const ClusteredDataset& dataset, const std::vector<int>& k_range,
                 select::Criterion criterion) {
  const Eigen::Index N = dataset.num_obs();
  MatrixXd X(N, dataset.p);
  VectorXd y(N);
  Eigen::Index at = 0;
  for (const auto& c : dataset.clusters) {
    if (c.size() == 0) continue;
    X.middleRows(at, c.size()) = c.X;
    y.segment(at, c.size()) = c.y;
    at += c.size();
  }
  return select_mixreg(X, y, k_range, criterion, false);
}

std::vector<MixRegFit> fit_lm(const ClusteredDataset& dataset, const std::vector<int>& k_range,
                              select::Criterion criterion) {
  std::vector<MixRegFit> fits;
  const int dim_phi = static_cast<int>(dataset.p) + 1;
  for (const auto& c : dataset.clusters) {
    // Feasibility: a K-component mixture needs enough observations to give
    // every component at least dim(phi)+1 of them on average.
    const int max_feasible = std::max<int>(1, static_cast<int>(c.size()) / (dim_phi + 1));
    std::vector<int> feasible;
    for (int K : k_range)
      if (K <= max_feasible) feasible.push_back(K);
    bool forced = feasible.size() != k_range.size();
    if (feasible.empty()) feasible.push_back(1);
    fits.push_back(select_mixreg(c.X, c.y, feasible, criterion, forced));
  }
  return fits;
}

double RiFit::density(Eigen::Index cluster, const Eigen::Ref<const VectorXd>& x, double t) const {
  return std::exp(gaussian_log_pdf(t, beta.dot(x) + v_mean[cluster], sigma2 + v_var[cluster]));
}

RiFit fit_ri(const ClusteredDataset& dataset) {
  const Eigen::Index m = dataset.num_clusters();
  const Eigen::Index N = dataset.num_obs();
  MatrixXd X(N, dataset.p);
  VectorXd y(N);
  std::vector<Eigen::Index> offsets(m);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = dataset.clusters[i];
    offsets[i] = at;
    if (c.size() > 0) {
      X.middleRows(at, c.size()) = c.X;
      y.segment(at, c.size()) = c.y;
      at += c.size();
    }
  }

  RiFit fit;
  fit.v_mean = VectorXd::Zero(m);
  fit.v_var = VectorXd::Zero(m);

  // Start from pooled OLS with a modest cluster effect.
  Eigen::LDLT<MatrixXd> xtx((X.transpose() * X).eval());
  fit.beta = xtx.solve(X.transpose() * y);
  VectorXd resid = y - X * fit.beta;
  fit.sigma2 = std::max(resid.squaredNorm() / N, 1e-10);
  fit.tau2 = 0.1 * fit.sigma2;

  // Marginal log-likelihood of y_i ~ N(X_i beta, sigma2 I + tau2 11').
  auto loglik = [&] {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index n_i = dataset.clusters[i].size();
      if (n_i == 0) continue;
      VectorXd r = y.segment(offsets[i], n_i) - X.middleRows(offsets[i], n_i) * fit.beta;
      const double s = r.sum();
      const double denom = fit.sigma2 + n_i * fit.tau2;
      const double quad = (r.squaredNorm() - fit.tau2 * s * s / denom) / fit.sigma2;
      const double logdet = (n_i - 1) * std::log(fit.sigma2) + std::log(denom);
      ll += -0.5 * (n_i * kLog2Pi + logdet + quad);
    }
    return ll;
  };

  // Posterior of each v_i at the current parameters.
  auto estep = [&] {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index n_i = dataset.clusters[i].size();
      if (n_i == 0) {
        fit.v_mean[i] = 0.0;
        fit.v_var[i] = fit.tau2;
        continue;
      }
      VectorXd r = y.segment(offsets[i], n_i) - X.middleRows(offsets[i], n_i) * fit.beta;
      const double denom = fit.sigma2 + n_i * fit.tau2;
      fit.v_mean[i] = fit.tau2 * r.sum() / denom;
      fit.v_var[i] = fit.tau2 * fit.sigma2 / denom;
    }
  };

  double ll = loglik();
  fit.loglik_trace.push_back(ll);
  for (int iter = 0; iter < 1000; ++iter) {
    estep();

    // M-step.
    VectorXd y_adj = y;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index n_i = dataset.clusters[i].size();
      if (n_i > 0) y_adj.segment(offsets[i], n_i).array() -= fit.v_mean[i];
    }
    fit.beta = xtx.solve(X.transpose() * y_adj);
    double rss = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index n_i = dataset.clusters[i].size();
      if (n_i == 0) continue;
      VectorXd r = y.segment(offsets[i], n_i) - X.middleRows(offsets[i], n_i) * fit.beta;
      rss += (r.array() - fit.v_mean[i]).square().sum() + n_i * fit.v_var[i];
    }
    fit.sigma2 = std::max(rss / N, 1e-10);
    double tau2 = (fit.v_mean.array().square() + fit.v_var.array()).sum() / m;
    if (tau2 < 1e-12) {
      tau2 = 0.0;
      fit.tau_floored = true;
    }
    fit.tau2 = tau2;

    const double ll_new = loglik();
    fit.loglik_trace.push_back(ll_new);
    if (std::abs(ll_new - ll) < 1e-10 * (std::abs(ll) + 1.0)) break;
    ll = ll_new;
  }

  estep();
  return fit;
}

}  // namespace baselines
}  // namespace lmr
