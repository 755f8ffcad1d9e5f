#include "lmr/mcem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lmr/dirichlet.hpp"
#include "lmr/errors.hpp"
#include "lmr/expert.hpp"
#include "lmr/gibbs.hpp"
#include "lmr/marglik.hpp"
#include "lmr/select.hpp"

namespace lmr {
namespace mcem {

bool BatchMeanMonitor::push(const VectorXd& theta) {
  history_.push_back(theta);
  const int t = static_cast<int>(history_.size());
  if (t < H_ + d_) return false;

  auto batch_mean = [&](int end) {  // mean of iterates (end-H, end]
    VectorXd acc = VectorXd::Zero(theta.size());
    for (int i = end - H_; i < end; ++i) acc += history_[i];
    return VectorXd(acc / H_);
  };
  VectorXd cur = batch_mean(t);
  VectorXd lagged = batch_mean(t - d_);
  const double rel = (cur - lagged).norm() / (lagged.norm() + delta_);
  return rel < epsilon_;
}

VectorXd flatten_params(const std::vector<ExpertParams>& experts, const MixingModel& mixing) {
  Eigen::Index dim = 0;
  for (const auto& e : experts)
    dim += e.beta.size() + (e.family == ExpertFamily::GaussianLinear ? 1 : 0);
  dim += mixing.kind == MixingModel::Kind::Static ? mixing.alpha.size() : mixing.gamma.size();

  VectorXd v(dim);
  Eigen::Index at = 0;
  for (const auto& e : experts) {
    v.segment(at, e.beta.size()) = e.beta;
    at += e.beta.size();
    if (e.family == ExpertFamily::GaussianLinear) v[at++] = e.sigma2;
  }
  if (mixing.kind == MixingModel::Kind::Static) {
    v.segment(at, mixing.alpha.size()) = mixing.alpha;
  } else {
    for (Eigen::Index k = 0; k < mixing.gamma.rows(); ++k) {
      v.segment(at, mixing.gamma.cols()) = mixing.gamma.row(k).transpose();
      at += mixing.gamma.cols();
    }
  }
  return v;
}

namespace {

struct StackedData {
  MatrixXd X;
  VectorXd y;
  std::vector<Eigen::Index> offsets;  // start row of each cluster
};

StackedData stack(const ClusteredDataset& dataset) {
  const Eigen::Index N = dataset.num_obs();
  StackedData s;
  s.X.resize(N, dataset.p);
  s.y.resize(N);
  s.offsets.reserve(dataset.clusters.size());
  Eigen::Index at = 0;
  for (const auto& c : dataset.clusters) {
    s.offsets.push_back(at);
    if (c.size() > 0) {
      s.X.middleRows(at, c.size()) = c.X;
      s.y.segment(at, c.size()) = c.y;
      at += c.size();
    }
  }
  return s;
}

bool beta_less(const ExpertParams& a, const ExpertParams& b) {
  for (Eigen::Index i = 0; i < a.beta.size(); ++i) {
    if (a.beta[i] != b.beta[i]) return a.beta[i] < b.beta[i];
  }
  return a.sigma2 < b.sigma2;
}

// Label order is an artifact; pin it so permuted starts produce identical runs.
void sort_init(InitialParams& init) {
  std::vector<int> order(init.experts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return beta_less(init.experts[a], init.experts[b]); });
  std::vector<ExpertParams> experts;
  VectorXd alpha(init.alpha.size());
  MatrixXd gamma = init.gamma;
  for (std::size_t r = 0; r < order.size(); ++r) {
    experts.push_back(init.experts[order[r]]);
    if (init.alpha.size() > 0) alpha[static_cast<Eigen::Index>(r)] = init.alpha[order[r]];
    if (init.gamma.size() > 0) gamma.row(static_cast<Eigen::Index>(r)) = init.gamma.row(order[r]);
  }
  init.experts = std::move(experts);
  init.alpha = std::move(alpha);
  init.gamma = std::move(gamma);
}

InitialParams from_assignment(const StackedData& s, const std::vector<int>& group, int K,
                              ExpertFamily family, Eigen::Index q) {
  InitialParams init;
  const Eigen::Index N = s.y.size();
  for (int k = 0; k < K; ++k) {
    VectorXd w = VectorXd::Zero(N);
    for (Eigen::Index i = 0; i < N; ++i)
      if (group[i] == k) w[i] = 1.0;
    init.experts.push_back(weighted_mle(family, s.X, s.y, w, /*ridge_if_singular=*/true).params);
  }
  init.alpha = VectorXd::Ones(K);
  init.gamma = MatrixXd::Zero(K, q);
  sort_init(init);
  return init;
}

std::vector<int> residual_slices(const StackedData& s, int K, ExpertFamily family) {
  const Eigen::Index N = s.y.size();
  ExpertParams pooled =
      weighted_mle(family, s.X, s.y, VectorXd::Ones(N), /*ridge_if_singular=*/true).params;
  VectorXd eta = s.X * pooled.beta;
  VectorXd resid = family == ExpertFamily::GaussianLinear
                       ? VectorXd(s.y - eta)
                       : VectorXd(s.y - eta.array().exp().matrix());
  std::vector<Eigen::Index> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return resid[a] < resid[b]; });
  std::vector<int> group(N);
  for (Eigen::Index r = 0; r < N; ++r)
    group[order[r]] = static_cast<int>((r * K) / N);
  return group;
}

}  // namespace

InitialParams initialize(const ClusteredDataset& dataset, int K, ExpertFamily family, Rng& rng,
                         Eigen::Index q) {
  (void)rng;  // residual slicing is deterministic
  StackedData s = stack(dataset);
  return from_assignment(s, residual_slices(s, K, family), K, family, q);
}

InitialParams random_init(const ClusteredDataset& dataset, int K, ExpertFamily family, Rng& rng,
                          Eigen::Index q) {
  StackedData s = stack(dataset);
  const Eigen::Index N = s.y.size();
  std::uniform_int_distribution<int> pick(0, K - 1);
  std::vector<int> group(N);
  for (int tries = 0; tries < 100; ++tries) {
    std::vector<int> used(K, 0);
    for (Eigen::Index i = 0; i < N; ++i) {
      group[i] = pick(rng);
      used[group[i]] = 1;
    }
    if (std::accumulate(used.begin(), used.end(), 0) == K)
      return from_assignment(s, group, K, family, q);
  }
  throw NumericalError("random_init: failed to draw an assignment covering all components");
}

namespace {

struct RunningFit {
  std::vector<ExpertParams> experts;
  MixingModel mixing;
};

FitResult fit_single(const ClusteredDataset& dataset, int K, ExpertFamily family,
                     MixingModel::Kind kind, const McemConfig& config, InitialParams init,
                     std::uint64_t base_seed, int ml_draws) {
  const Eigen::Index m = dataset.num_clusters();
  StackedData stacked = stack(dataset);

  sort_init(init);
  RunningFit cur;
  cur.experts = init.experts;
  cur.mixing.kind = kind;
  if (kind == MixingModel::Kind::Static) {
    cur.mixing.alpha = init.alpha;
  } else {
    cur.mixing.gamma = init.gamma;
  }

  MatrixXd W;  // m x q cluster covariates, covariate-dependent mixing only
  if (kind == MixingModel::Kind::CovariateDependent) {
    if (dataset.q < 1)
      throw ValidationError("covariate-dependent mixing requires cluster covariates (q >= 1)");
    W.resize(m, dataset.q);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dataset.clusters[i].w.size() != dataset.q)
        throw ValidationError("cluster '" + dataset.clusters[i].id +
                              "' lacks cluster covariates required by covariate-dependent mixing");
      W.row(i) = dataset.clusters[i].w.transpose();
    }
  }

  FitResult result;
  result.K = K;
  result.family = family;
  result.p = dataset.p;
  result.q = dataset.q;
  for (const auto& c : dataset.clusters) result.cluster_ids.push_back(c.id);
  result.log_ml_init_total =
      marglik::log_ml_dataset(dataset, cur.experts, cur.mixing, ml_draws,
                              derive_seed(base_seed, seed_tag::kMarglik, 1), config.threads)
          .sum();

  BatchMeanMonitor monitor(config.batch_size, config.lag, config.epsilon, config.delta);
  result.converged = false;

  int t = 1;
  for (; t <= config.max_iter; ++t) {
    bool stepped = false;
    std::string last_error;
    for (int attempt = 0; attempt < 4 && !stepped; ++attempt) {
      const std::uint64_t estep_seed =
          derive_seed(base_seed, seed_tag::kEstep, static_cast<std::uint64_t>(t) * 8 + attempt);
      PosteriorSummaries summaries =
          gibbs::posterior_summaries(dataset, cur.experts, cur.mixing, config.gibbs_samples,
                                     config.burn_in, estep_seed, config.threads);
      try {
        std::vector<ExpertParams> experts_new;
        bool ridged = false;
        for (int k = 0; k < K; ++k) {
          VectorXd wk(stacked.y.size());
          for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index n_i = dataset.clusters[i].size();
            if (n_i > 0) wk.segment(stacked.offsets[i], n_i) = summaries.z_star[i].col(k);
          }
          auto mle = weighted_mle(family, stacked.X, stacked.y, wk, /*ridge_if_singular=*/true);
          experts_new.push_back(std::move(mle.params));
          ridged = ridged || mle.ridged;
        }
        MixingModel mixing_new = cur.mixing;
        if (kind == MixingModel::Kind::Static) {
          VectorXd logpi_bar = summaries.logpi_star.colwise().mean();
          mixing_new.alpha =
              dirichlet::mle_static(logpi_bar, static_cast<int>(m), cur.mixing.alpha);
        } else {
          mixing_new.gamma = dirichlet::mle_covariate(cur.mixing.gamma, W, summaries.logpi_star);
        }
        cur.experts = std::move(experts_new);
        cur.mixing = std::move(mixing_new);
        result.ridged = result.ridged || ridged;
        stepped = true;
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    if (!stepped) {
      result.trace.push_back(flatten_params(cur.experts, cur.mixing));
      throw NonConvergenceError("M-step failed after 3 refreshed E-step retries at iteration " +
                                std::to_string(t) + ": " + last_error);
    }
    result.trace.push_back(flatten_params(cur.experts, cur.mixing));
    if (monitor.push(result.trace.back())) {
      result.converged = true;
      break;
    }
  }
  result.iterations = std::min(t, config.max_iter);

  // Summaries, marginal likelihood, and criteria at the final parameters.
  result.experts = cur.experts;
  result.mixing = cur.mixing;
  result.summaries = gibbs::posterior_summaries(
      dataset, result.experts, result.mixing, config.gibbs_samples, config.burn_in,
      derive_seed(base_seed, seed_tag::kFinalEstep, 0), config.threads);
  result.log_ml =
      marglik::log_ml_dataset(dataset, result.experts, result.mixing, ml_draws,
                              derive_seed(base_seed, seed_tag::kMarglik, 0), config.threads);

  // Canonical reporting order: descending mean mixing weight, lexicographic
  // beta on ties.
  VectorXd weight;
  if (kind == MixingModel::Kind::Static) {
    weight = dirichlet::mean(result.mixing.alpha);
  } else {
    weight = VectorXd::Zero(K);
    for (Eigen::Index i = 0; i < m; ++i)
      weight += dirichlet::cd_mean(result.mixing.gamma, dataset.clusters[i].w);
    weight /= static_cast<double>(m);
  }
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (weight[a] != weight[b]) return weight[a] > weight[b];
    return beta_less(result.experts[a], result.experts[b]);
  });

  std::vector<ExpertParams> experts_sorted;
  MixingModel mixing_sorted = result.mixing;
  PosteriorSummaries summ_sorted = result.summaries;
  for (int r = 0; r < K; ++r) {
    experts_sorted.push_back(result.experts[order[r]]);
    if (kind == MixingModel::Kind::Static)
      mixing_sorted.alpha[r] = result.mixing.alpha[order[r]];
    else
      mixing_sorted.gamma.row(r) = result.mixing.gamma.row(order[r]);
    summ_sorted.logpi_star.col(r) = result.summaries.logpi_star.col(order[r]);
    summ_sorted.pi_hat.col(r) = result.summaries.pi_hat.col(order[r]);
    for (Eigen::Index i = 0; i < m; ++i)
      summ_sorted.z_star[i].col(r) = result.summaries.z_star[i].col(order[r]);
  }
  result.experts = std::move(experts_sorted);
  result.mixing = std::move(mixing_sorted);
  result.summaries = std::move(summ_sorted);

  auto [aic, bic] = select::information_criteria(dataset, result);
  result.aic = aic;
  result.bic = bic;
  return result;
}

}  // namespace

FitResult fit(const ClusteredDataset& dataset, int K, ExpertFamily family, MixingModel::Kind kind,
              const McemConfig& config, std::optional<InitialParams> init, int ml_draws) {
  if (K < 2) throw ValidationError("mcem::fit requires K >= 2; fit K = 1 as a single expert");
  if (init) return fit_single(dataset, K, family, kind, config, std::move(*init),
                              config.seed, ml_draws);

  const Eigen::Index q = kind == MixingModel::Kind::CovariateDependent ? dataset.q : 0;
  std::optional<FitResult> best;
  std::string last_error;
  const int starts = std::max(1, config.starts);
  for (int s = 0; s < starts; ++s) {
    Rng init_rng(derive_seed(config.seed, seed_tag::kInit, s));
    try {
      InitialParams start = s == 0 ? initialize(dataset, K, family, init_rng, q)
                                   : random_init(dataset, K, family, init_rng, q);
      FitResult r = fit_single(dataset, K, family, kind, config, std::move(start),
                               derive_seed(config.seed, seed_tag::kStart, s), ml_draws);
      if (!best || r.total_log_ml() > best->total_log_ml()) best = std::move(r);
    } catch (const ValidationError&) {
      throw;  // bad inputs fail every start identically
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (!best) throw NonConvergenceError("all " + std::to_string(starts) +
                                       " starts failed; last error: " + last_error);
  return std::move(*best);
}

}  // namespace mcem
}  // namespace lmr
