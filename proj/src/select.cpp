#include "lmr/select.hpp"

#include <cmath>
#include <limits>

#include "lmr/errors.hpp"
#include "lmr/expert.hpp"
#include "lmr/mcem.hpp"

namespace lmr {
namespace select {

int parameter_count(const FitResult& fit) {
  const int dim_phi = static_cast<int>(fit.p) +
                      (fit.family == ExpertFamily::GaussianLinear ? 1 : 0);
  if (fit.K == 1) return dim_phi;
  const int mixing = fit.mixing.kind == MixingModel::Kind::Static
                         ? fit.K
                         : fit.K * static_cast<int>(fit.mixing.gamma.cols());
  return fit.K * dim_phi + mixing;
}

std::pair<double, double> information_criteria(const ClusteredDataset& dataset,
                                               const FitResult& fit) {
  const double deviance = -2.0 * fit.log_ml.sum();
  const double count = parameter_count(fit);
  const double N = static_cast<double>(dataset.num_obs());
  return {deviance + 2.0 * count, deviance + count * std::log(N)};
}

FitResult fit_single_expert(const ClusteredDataset& dataset, ExpertFamily family) {
  const Eigen::Index m = dataset.num_clusters();
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

  FitResult fit;
  fit.K = 1;
  fit.family = family;
  fit.p = dataset.p;
  fit.q = dataset.q;
  fit.experts.push_back(weighted_mle(family, X, y, VectorXd::Ones(N)).params);
  fit.mixing.kind = MixingModel::Kind::Static;
  fit.mixing.alpha = VectorXd::Ones(1);
  fit.converged = true;
  fit.iterations = 1;

  fit.log_ml.resize(m);
  fit.summaries.logpi_star = MatrixXd::Zero(m, 1);
  fit.summaries.pi_hat = MatrixXd::Ones(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Cluster& c = dataset.clusters[i];
    fit.cluster_ids.push_back(c.id);
    fit.log_ml[i] = c.size() > 0 ? log_density_matrix(fit.experts, c).sum() : 0.0;
    fit.summaries.z_star.push_back(MatrixXd::Ones(c.size(), 1));
  }
  auto [aic, bic] = information_criteria(dataset, fit);
  fit.aic = aic;
  fit.bic = bic;
  return fit;
}

int SelectionResult::argmin_k(Criterion c) const {
  int best_k = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& row : table) {
    if (!row.ok) continue;
    const double v = c == Criterion::AIC ? row.aic : row.bic;
    if (v < best_value) {  // strict: ties keep the smaller K seen first
      best_value = v;
      best_k = row.K;
    }
  }
  return best_k;
}

SelectionResult select_k(const ClusteredDataset& dataset, const SelectConfig& config,
                         ExpertFamily family, MixingModel::Kind kind, const McemConfig& mcem_cfg) {
  if (config.k_range.empty()) throw ValidationError("select_k: empty K range");

  SelectionResult out;
  double best_value = std::numeric_limits<double>::infinity();
  std::string last_error;
  for (int K : config.k_range) {
    KFitRow row;
    row.K = K;
    try {
      FitResult fit = K == 1 ? fit_single_expert(dataset, family)
                             : mcem::fit(dataset, K, family, kind, mcem_cfg, std::nullopt,
                                         config.ml_draws);
      row.aic = fit.aic;
      row.bic = fit.bic;
      row.ok = true;
      const double v = config.criterion == Criterion::AIC ? fit.aic : fit.bic;
      if (v < best_value) {
        best_value = v;
        out.best = std::move(fit);
        out.selected_K = K;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      last_error = e.what();
    }
    out.table.push_back(std::move(row));
  }
  if (out.selected_K == 0)
    throw NonConvergenceError("select_k: every candidate K failed; last error: " + last_error);
  return out;
}

}  // namespace select
}  // namespace lmr
