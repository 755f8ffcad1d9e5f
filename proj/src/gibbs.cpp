#include "lmr/gibbs.hpp"

#include <cmath>

#include "lmr/dirichlet.hpp"
#include "lmr/errors.hpp"
#include "lmr/expert.hpp"
#include "lmr/special.hpp"

namespace lmr {
namespace gibbs {

namespace {
constexpr double kBoundaryClamp = 1e-12;
}

ClusterPosterior gibbs_estep(const Cluster& cluster, const std::vector<ExpertParams>& experts,
                             const Eigen::Ref<const VectorXd>& alpha_i, int num_samples,
                             int burn_in, Rng& rng) {
  const Eigen::Index n = cluster.size();
  const Eigen::Index K = static_cast<Eigen::Index>(experts.size());
  if (num_samples < 1) throw ValidationError("gibbs_estep: need at least one retained sweep");
  if ((alpha_i.array() <= 0.0).any()) throw ValidationError("gibbs_estep: alpha must be positive");

  ClusterPosterior out;
  if (n == 0) {
    // No data: the posterior equals the prior, no sampling needed.
    out.z_star = MatrixXd::Zero(0, K);
    out.pi_hat = dirichlet::mean(alpha_i);
    const double psi_sum = digamma(alpha_i.sum());
    out.logpi_star.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) out.logpi_star[k] = digamma(alpha_i[k]) - psi_sum;
    return out;
  }

  // Component densities are fixed across sweeps: precompute them once, shifted
  // by the row maximum so the sweep loop stays in linear scale.
  MatrixXd logh = log_density_matrix(experts, cluster);
  VectorXd rowmax = logh.rowwise().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!std::isfinite(rowmax[j]))
      throw NumericalError("all component densities underflow at cluster '" + cluster.id +
                           "', observation " + std::to_string(j));
  MatrixXd h = (logh.colwise() - rowmax).array().exp();  // n x K, row max = 1

  VectorXd pi = dirichlet::mean(alpha_i);
  VectorXd ptilde(K), counts(K), anew(K), gam(K);
  MatrixXd zstar_acc = MatrixXd::Zero(n, K);
  VectorXd pi_acc = VectorXd::Zero(K);
  VectorXd logpi_acc = VectorXd::Zero(K);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const int total = burn_in + num_samples;
  for (int sweep = 0; sweep < total; ++sweep) {
    const bool keep = sweep >= burn_in;
    counts.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
      ptilde = pi.cwiseProduct(h.row(j).transpose());
      ptilde /= ptilde.sum();
      if (keep) zstar_acc.row(j) += ptilde;
      double u = unif(rng);
      Eigen::Index z = K - 1;
      double cum = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) {
        cum += ptilde[k];
        if (u <= cum) {
          z = k;
          break;
        }
      }
      counts[z] += 1.0;
    }
    anew = alpha_i + counts;
    for (Eigen::Index k = 0; k < K; ++k) {
      std::gamma_distribution<double> gamma(anew[k], 1.0);
      gam[k] = gamma(rng);
    }
    pi = gam / gam.sum();
    pi = pi.cwiseMax(kBoundaryClamp);
    pi /= pi.sum();
    if (keep) {
      pi_acc += pi;
      logpi_acc += pi.array().log().matrix();
    }
  }

  const double invL = 1.0 / num_samples;
  out.z_star = zstar_acc * invL;
  out.pi_hat = pi_acc * invL;
  out.logpi_star = logpi_acc * invL;
  return out;
}

PosteriorSummaries posterior_summaries(const ClusteredDataset& dataset,
                                       const std::vector<ExpertParams>& experts,
                                       const MixingModel& mixing, int num_samples, int burn_in,
                                       std::uint64_t seed, int threads) {
  const Eigen::Index m = dataset.num_clusters();
  const Eigen::Index K = static_cast<Eigen::Index>(experts.size());

  PosteriorSummaries out;
  out.z_star.resize(m);
  out.logpi_star.resize(m, K);
  out.pi_hat.resize(m, K);

  std::vector<std::string> failures(m);
  parallel_for(static_cast<int>(m), threads, [&](int i) {
    const Cluster& cluster = dataset.clusters[i];
    VectorXd alpha_i = mixing.alpha_for(cluster.w);
    Rng rng(cluster_seed(seed, cluster.id));
    try {
      ClusterPosterior cp = gibbs_estep(cluster, experts, alpha_i, num_samples, burn_in, rng);
      out.z_star[i] = std::move(cp.z_star);
      out.logpi_star.row(i) = cp.logpi_star.transpose();
      out.pi_hat.row(i) = cp.pi_hat.transpose();
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (Eigen::Index i = 0; i < m; ++i)
    if (!failures[i].empty())
      throw NumericalError("E-step failed in cluster '" + dataset.clusters[i].id +
                           "': " + failures[i]);
  return out;
}

}  // namespace gibbs
}  // namespace lmr
