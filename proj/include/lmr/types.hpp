#ifndef LMR_TYPES_HPP
#define LMR_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lmr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One group of observations sharing a conditional density. w carries optional
// cluster-level covariates (empty when the dataset has none).
struct Cluster {
  std::string id;
  VectorXd y;   // n_i responses
  MatrixXd X;   // n_i x p covariate rows
  VectorXd w;   // q cluster-level covariates, or empty

  Eigen::Index size() const { return y.size(); }
};

struct ClusteredDataset {
  std::vector<Cluster> clusters;
  Eigen::Index p = 0;  // covariate dimension
  Eigen::Index q = 0;  // cluster-covariate dimension (0 if absent)

  Eigen::Index num_clusters() const { return static_cast<Eigen::Index>(clusters.size()); }
  Eigen::Index num_obs() const {
    Eigen::Index n = 0;
    for (const auto& c : clusters) n += c.size();
    return n;
  }
};

// Checks dimensional consistency and finiteness; infers p and q when left at
// zero. Clusters with no observations are legal (prediction-only clusters).
ClusteredDataset validate_dataset(ClusteredDataset raw);

enum class ExpertFamily { GaussianLinear, PoissonLog };

// Parameters of one latent component regression.
struct ExpertParams {
  ExpertFamily family = ExpertFamily::GaussianLinear;
  VectorXd beta;
  double sigma2 = 1.0;  // GaussianLinear only
};

// Mixing-proportion law: a single Dirichlet parameter vector shared by all
// clusters, or per-cluster parameters alpha_ik = exp(w_i . gamma_k).
struct MixingModel {
  enum class Kind { Static, CovariateDependent };
  Kind kind = Kind::Static;
  VectorXd alpha;  // K (Static)
  MatrixXd gamma;  // K x q (CovariateDependent)

  Eigen::Index num_components() const {
    return kind == Kind::Static ? alpha.size() : gamma.rows();
  }
  // Dirichlet parameter vector for a cluster with covariates w.
  VectorXd alpha_for(const VectorXd& w) const;
};

// Monte Carlo posterior summaries from the Gibbs E-step, per cluster.
struct PosteriorSummaries {
  std::vector<MatrixXd> z_star;  // per cluster: n_i x K membership probabilities
  MatrixXd logpi_star;           // m x K, E[log pi_ik | Y]
  MatrixXd pi_hat;               // m x K, E[pi_ik | Y]
};

struct McemConfig {
  int gibbs_samples = 500;  // retained Gibbs sweeps per E-step (L)
  int burn_in = 100;        // discarded sweeps
  int batch_size = 30;      // batch-mean window (H)
  int lag = 5;              // batch-mean lag (d)
  double epsilon = 1e-3;    // relative-difference threshold
  double delta = 1e-3;      // denominator guard
  int max_iter = 500;
  int starts = 5;           // multi-start count (1 residual-sliced + random)
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FitResult {
  int K = 0;
  ExpertFamily family = ExpertFamily::GaussianLinear;
  std::vector<ExpertParams> experts;
  MixingModel mixing;
  PosteriorSummaries summaries;
  std::vector<std::string> cluster_ids;
  VectorXd log_ml;  // per-cluster log marginal likelihood
  double aic = 0.0;
  double bic = 0.0;
  std::vector<VectorXd> trace;  // flattened parameters per EM iteration
  bool converged = false;
  int iterations = 0;
  double log_ml_init_total = 0.0;  // total log marginal likelihood at the start
  bool ridged = false;             // some M-step needed ridge regularization
  Eigen::Index p = 0;
  Eigen::Index q = 0;

  double total_log_ml() const { return log_ml.sum(); }
  Eigen::Index cluster_index(const std::string& id) const;
};

}  // namespace lmr

#endif
