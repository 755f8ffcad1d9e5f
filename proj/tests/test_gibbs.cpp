#include <doctest.h>

#include <cmath>

#include "lmr/dirichlet.hpp"
#include "lmr/expert.hpp"
#include "lmr/gibbs.hpp"
#include "lmr/special.hpp"
#include "oracles.hpp"

using namespace lmr;

namespace {
ExpertParams gauss1(double b0, double b1, double sigma2) {
  ExpertParams p;
  p.beta = VectorXd(2);
  p.beta << b0, b1;
  p.sigma2 = sigma2;
  return p;
}

Cluster cluster_at(const std::string& id, std::initializer_list<double> ys) {
  Cluster c;
  c.id = id;
  c.y = VectorXd(static_cast<Eigen::Index>(ys.size()));
  Eigen::Index i = 0;
  for (double y : ys) c.y[i++] = y;
  c.X = MatrixXd::Zero(c.y.size(), 2);
  c.X.col(0).setOnes();
  return c;
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

const std::vector<ExpertParams> kExperts = {gauss1(-1.0, 1.0, 1.0), gauss1(1.0, -1.0, 1.0)};
}  // namespace

TEST_CASE("empty cluster posterior equals the prior analytically") {
  Cluster c = cluster_at("e", {});
  Rng rng(1);
  const auto post = gibbs::gibbs_estep(c, kExperts, vec2(5, 3), 100, 10, rng);
  CHECK(post.pi_hat[0] == 0.625);
  CHECK(post.pi_hat[1] == 0.375);
  CHECK(post.logpi_star[0] == doctest::Approx(digamma(5) - digamma(8)).epsilon(1e-14));
  CHECK(post.z_star.rows() == 0);
}

TEST_CASE("identical experts leave the prior symmetric") {
  const std::vector<ExpertParams> same = {gauss1(0, 0, 1), gauss1(0, 0, 1)};
  Cluster c = cluster_at("s", {0.3, -0.5, 1.2, 0.1});
  Rng rng(2);
  const auto post = gibbs::gibbs_estep(c, same, vec2(2, 2), 2000, 100, rng);
  CHECK(post.pi_hat[0] == doctest::Approx(0.5).epsilon(0.04));
  // identical experts make p-tilde equal to pi, so every row is the same
  // average of pi draws and close to symmetric
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(post.z_star(j, 0) == doctest::Approx(post.z_star(0, 0)).epsilon(1e-12));
    CHECK(post.z_star(j, 0) == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("n=1 matches the single-label enumeration") {
  Cluster c = cluster_at("one", {-0.8});
  const VectorXd alpha = vec2(5, 3);
  const MatrixXd logh = log_density_matrix(kExperts, c);
  const auto exact = oracle::enumerate_posterior(logh, alpha);
  Rng rng(3);
  const auto post = gibbs::gibbs_estep(c, kExperts, alpha, 5000, 100, rng);
  CHECK(std::abs(post.pi_hat[0] - exact.pi_hat[0]) < 0.01);
  CHECK(std::abs(post.z_star(0, 0) - exact.z_star(0, 0)) < 0.01);
}

TEST_CASE("small clusters match the full enumeration oracle") {
  const VectorXd alpha = vec2(2, 3);
  ClusteredDataset d;
  d.clusters.push_back(cluster_at("a", {-0.5, 0.9, -1.3}));
  d.clusters.push_back(cluster_at("b", {1.1, 0.2, -0.4, 2.0}));
  d = validate_dataset(std::move(d));
  MixingModel mix;
  mix.alpha = alpha;

  const auto summ = gibbs::posterior_summaries(d, kExperts, mix, 10000, 100, 77);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const auto exact =
        oracle::enumerate_posterior(log_density_matrix(kExperts, d.clusters[i]), alpha);
    CHECK((summ.pi_hat.row(i).transpose() - exact.pi_hat).lpNorm<Eigen::Infinity>() < 0.01);
    CHECK((summ.z_star[i] - exact.z_star).lpNorm<Eigen::Infinity>() < 0.01);
    CHECK((summ.logpi_star.row(i).transpose() - exact.logpi_star).lpNorm<Eigen::Infinity>() <
          0.03);
  }
}

TEST_CASE("z_star rows are probability vectors") {
  Cluster c = cluster_at("p", {0.4, -2.0, 1.7, 0.0, -0.6});
  Rng rng(4);
  const auto post = gibbs::gibbs_estep(c, kExperts, vec2(1, 1), 500, 50, rng);
  for (Eigen::Index j = 0; j < post.z_star.rows(); ++j) {
    CHECK(post.z_star.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(post.z_star.row(j).minCoeff() >= 0.0);
  }
}

TEST_CASE("posterior concentrates as the favorable sample grows") {
  // nested clusters whose every observation strongly favors expert 1 at x=0
  const VectorXd alpha = vec2(2, 2);
  double prev = 0.5;
  for (int n : {1, 2, 4, 8, 16}) {
    Cluster c;
    c.id = "grow";
    c.y = VectorXd::Constant(n, -1.0);  // exactly at expert 1's mean, 2 sds from expert 2's
    c.X = MatrixXd::Zero(n, 2);
    c.X.col(0).setOnes();
    Rng rng(5);
    const auto post = gibbs::gibbs_estep(c, kExperts, alpha, 4000, 100, rng);
    CHECK(post.pi_hat[0] > prev - 0.01);
    prev = post.pi_hat[0];
  }
  CHECK(prev > 0.8);
}

TEST_CASE("cluster order does not change any cluster's summaries") {
  ClusteredDataset d;
  d.clusters.push_back(cluster_at("a", {-0.5, 0.9}));
  d.clusters.push_back(cluster_at("b", {1.1, 0.2, -0.4}));
  d.clusters.push_back(cluster_at("c", {0.7}));
  d = validate_dataset(std::move(d));
  MixingModel mix;
  mix.alpha = vec2(2, 2);

  ClusteredDataset rev = d;
  std::reverse(rev.clusters.begin(), rev.clusters.end());

  const auto s1 = gibbs::posterior_summaries(d, kExperts, mix, 300, 50, 42);
  const auto s2 = gibbs::posterior_summaries(rev, kExperts, mix, 300, 50, 42);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(s1.pi_hat.row(i) == s2.pi_hat.row(2 - i));
    CHECK(s1.logpi_star.row(i) == s2.logpi_star.row(2 - i));
    CHECK(s1.z_star[static_cast<std::size_t>(i)] ==
          s2.z_star[static_cast<std::size_t>(2 - i)]);
  }
}

TEST_CASE("summaries are identical for any thread count") {
  ClusteredDataset d;
  for (int i = 0; i < 6; ++i)
    d.clusters.push_back(cluster_at("c" + std::to_string(i), {0.1 * i, -0.3, 0.5 * i}));
  d = validate_dataset(std::move(d));
  MixingModel mix;
  mix.alpha = vec2(3, 1);

  const auto s1 = gibbs::posterior_summaries(d, kExperts, mix, 200, 40, 9, 1);
  const auto s4 = gibbs::posterior_summaries(d, kExperts, mix, 200, 40, 9, 4);
  CHECK(s1.pi_hat == s4.pi_hat);
  CHECK(s1.logpi_star == s4.logpi_star);
}

TEST_CASE("covariate-dependent mixing uses per-cluster alphas") {
  ClusteredDataset d;
  d.clusters.push_back(cluster_at("z0", {}));
  d.clusters.push_back(cluster_at("z1", {}));
  d.clusters[0].w = vec2(1, 0);
  d.clusters[1].w = vec2(1, 1);
  d = validate_dataset(std::move(d));
  MixingModel mix;
  mix.kind = MixingModel::Kind::CovariateDependent;
  mix.gamma.resize(2, 2);
  mix.gamma << 1.0, 0.6, 1.0, -0.5;

  const auto summ = gibbs::posterior_summaries(d, kExperts, mix, 100, 10, 1);
  for (int i = 0; i < 2; ++i) {
    const VectorXd alpha = mix.alpha_for(d.clusters[i].w);
    CHECK((summ.pi_hat.row(i).transpose() - dirichlet::mean(alpha)).lpNorm<Eigen::Infinity>() <
          1e-14);
  }
}
