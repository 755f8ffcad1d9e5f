#include "lmr/marglik.hpp"

#include <cmath>

#include "lmr/dirichlet.hpp"
#include "lmr/errors.hpp"
#include "lmr/expert.hpp"
#include "lmr/special.hpp"

namespace lmr {
namespace marglik {

McEstimate log_ml_mc(const Cluster& cluster, const std::vector<ExpertParams>& experts,
                     const Eigen::Ref<const VectorXd>& alpha_i, int draws, Rng& rng) {
  if (draws < 1) throw ValidationError("log_ml_mc: need at least one draw");
  const Eigen::Index n = cluster.size();
  const Eigen::Index K = static_cast<Eigen::Index>(experts.size());
  if (n == 0) return {0.0, 0.0};  // empty product

  MatrixXd logh = log_density_matrix(experts, cluster);
  VectorXd rowmax = logh.rowwise().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!std::isfinite(rowmax[j]))
      throw NumericalError("all component densities underflow at cluster '" + cluster.id +
                           "', observation " + std::to_string(j));
  MatrixXd h = (logh.colwise() - rowmax).array().exp();
  const double log_shift = rowmax.sum();

  // s_b = sum_j log sum_k pi_k h_k(y_j|x_j), shifted by log_shift.
  VectorXd s(draws);
  for (int b = 0; b < draws; ++b) {
    VectorXd pi = dirichlet::sample(alpha_i, rng);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += std::log(pi.dot(h.row(j).transpose()));
    s[b] = acc;
  }

  const double smax = s.maxCoeff();
  VectorXd t = (s.array() - smax).exp();
  const double mean_t = t.mean();
  McEstimate out;
  out.log_ml = log_shift + smax + std::log(mean_t);
  if (draws > 1) {
    const double var_t = (t.array() - mean_t).square().sum() / (draws - 1);
    out.std_error = std::sqrt(var_t / draws) / mean_t;
  }
  return out;
}

double log_ml_exact_from_logh(const MatrixXd& logh, const Eigen::Ref<const VectorXd>& alpha_i) {
  const Eigen::Index n = logh.rows();
  const Eigen::Index K = logh.cols();
  if (n == 0) return 0.0;
  const double configs = std::pow(static_cast<double>(K), static_cast<double>(n));
  if (configs > 1e6)
    throw ValidationError("log_ml_exact: K^n = " + std::to_string(configs) +
                          " exceeds the enumeration guard of 1e6");

  const double a0 = alpha_i.sum();
  double log_dir_const = std::lgamma(a0) - std::lgamma(static_cast<double>(n) + a0);
  for (Eigen::Index k = 0; k < K; ++k) log_dir_const -= std::lgamma(alpha_i[k]);

  const auto total = static_cast<std::uint64_t>(configs + 0.5);
  VectorXd terms(static_cast<Eigen::Index>(total));
  std::vector<Eigen::Index> z(n, 0);
  VectorXd counts(K);
  for (std::uint64_t c = 0; c < total; ++c) {
    counts.setZero();
    double log_dens = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      counts[z[j]] += 1.0;
      log_dens += logh(j, z[j]);
    }
    double log_weight = log_dir_const;
    for (Eigen::Index k = 0; k < K; ++k) log_weight += std::lgamma(alpha_i[k] + counts[k]);
    terms[static_cast<Eigen::Index>(c)] = log_weight + log_dens;
    // Advance the mixed-radix label configuration.
    for (Eigen::Index j = 0; j < n; ++j) {
      if (++z[j] < K) break;
      z[j] = 0;
    }
  }
  return log_sum_exp(terms);
}

double log_ml_exact(const Cluster& cluster, const std::vector<ExpertParams>& experts,
                    const Eigen::Ref<const VectorXd>& alpha_i) {
  if (cluster.size() == 0) return 0.0;
  return log_ml_exact_from_logh(log_density_matrix(experts, cluster), alpha_i);
}

VectorXd log_ml_dataset(const ClusteredDataset& dataset, const std::vector<ExpertParams>& experts,
                        const MixingModel& mixing, int draws, std::uint64_t seed, int threads) {
  const Eigen::Index m = dataset.num_clusters();
  VectorXd out(m);
  std::vector<std::string> failures(m);
  parallel_for(static_cast<int>(m), threads, [&](int i) {
    const Cluster& cluster = dataset.clusters[i];
    Rng rng(cluster_seed(derive_seed(seed, seed_tag::kMarglik, 0), cluster.id));
    try {
      out[i] = log_ml_mc(cluster, experts, mixing.alpha_for(cluster.w), draws, rng).log_ml;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (Eigen::Index i = 0; i < m; ++i)
    if (!failures[i].empty())
      throw NumericalError("marginal likelihood failed in cluster '" + dataset.clusters[i].id +
                           "': " + failures[i]);
  return out;
}

}  // namespace marglik
}  // namespace lmr
