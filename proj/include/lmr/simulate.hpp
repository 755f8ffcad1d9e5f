#ifndef LMR_SIMULATE_HPP
#define LMR_SIMULATE_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmr/select.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace simulate {

enum class Scenario { I, II, III };

struct ScenarioSpec {
  Scenario scenario = Scenario::I;
  int m = 50;
  int n = 30;                  // within-cluster size (ignored when n_equals_index)
  bool n_equals_index = false; // n_i = i (scenario III style)
  int replications = 100;
  std::vector<double> x_eval = {-1.5, -0.75, 0.0};
  std::uint64_t seed = 0;
  std::optional<double> force_pi;  // test hook: pin every pi_i
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// True cluster-wise conditional density: a per-cluster Gaussian mixture with
// component means linear in x.
struct GaussComponent {
  double weight, intercept, slope, sd;
};

struct TrueDensity {
  std::vector<std::vector<GaussComponent>> clusters;
  double operator()(Eigen::Index cluster, double t, double x) const;
};

// Deterministic per (spec.seed, replication). The design matrix carries an
// intercept column, so p = 2; scenario III also sets cluster covariates
// w_i = (1, w_i) with q = 2.
std::pair<ClusteredDataset, TrueDensity> generate(const ScenarioSpec& spec, int replication);

struct QuadSpec {
  double lo = -12.0;
  double hi = 12.0;
  double step = 0.005;
};

// Trapezoid integral of (f_hat - f_true)^2 over the quadrature grid.
double integrated_squared_error(const std::function<double(double)>& f_hat,
                                const std::function<double(double)>& f_true,
                                const QuadSpec& quad = {});

enum class Method { LMR, LMR_CD, GM, LM, RI };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ExperimentConfig {
  std::vector<int> k_range = {1, 2, 3};
  select::Criterion criterion = select::Criterion::BIC;
  McemConfig mcem;
  int ml_draws = 10000;
  QuadSpec quad;
};

struct MiseRow {
  int replication;
  std::string method;
  std::string scenario;
  double x;
  std::string cluster_id;
  Eigen::Index n_i;
  double mise;  // per-replication integrated squared error
};

struct ExperimentResult {
  std::vector<MiseRow> rows;
  std::vector<std::string> failures;  // "rep/method: error", excluded from rows
};

// Full replication loop: generate, fit every requested method, score each
// cluster at each evaluation covariate.
ExperimentResult run_experiment(const ScenarioSpec& spec, const std::vector<Method>& methods,
                                const ExperimentConfig& config);

}  // namespace simulate
}  // namespace lmr

#endif
