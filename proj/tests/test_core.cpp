#include <doctest.h>

#include <cmath>

#include "lmr/errors.hpp"
#include "lmr/rng.hpp"
#include "lmr/types.hpp"

using namespace lmr;

namespace {
Cluster make_cluster(const std::string& id, int n, int p) {
  Cluster c;
  c.id = id;
  c.y = VectorXd::LinSpaced(n, 0.0, 1.0);
  c.X = MatrixXd::Ones(n, p);
  return c;
}
}  // namespace

TEST_CASE("validate_dataset infers p and q") {
  ClusteredDataset d;
  d.clusters.push_back(make_cluster("a", 3, 2));
  d.clusters.push_back(make_cluster("b", 2, 2));
  d.clusters[1].w = VectorXd::Ones(1);
  d.clusters[0].w = VectorXd::Zero(1);
  const auto v = validate_dataset(std::move(d));
  CHECK(v.p == 2);
  CHECK(v.q == 1);
  CHECK(v.num_obs() == 5);
}

TEST_CASE("validate_dataset rejects inconsistencies") {
  SUBCASE("empty") {
    ClusteredDataset d;
    CHECK_THROWS_AS(validate_dataset(std::move(d)), ValidationError);
  }
  SUBCASE("row mismatch") {
    ClusteredDataset d;
    d.clusters.push_back(make_cluster("a", 3, 2));
    d.clusters[0].X = MatrixXd::Ones(2, 2);
    CHECK_THROWS_WITH_AS(validate_dataset(std::move(d)),
                         doctest::Contains("cluster 'a'"), ValidationError);
  }
  SUBCASE("covariate width mismatch") {
    ClusteredDataset d;
    d.clusters.push_back(make_cluster("a", 3, 2));
    d.clusters.push_back(make_cluster("bad", 3, 4));
    CHECK_THROWS_WITH_AS(validate_dataset(std::move(d)),
                         doctest::Contains("cluster 'bad'"), ValidationError);
  }
  SUBCASE("non-finite value") {
    ClusteredDataset d;
    d.clusters.push_back(make_cluster("a", 3, 2));
    d.clusters[0].y[1] = std::nan("");
    CHECK_THROWS_WITH_AS(validate_dataset(std::move(d)),
                         doctest::Contains("non-finite"), ValidationError);
  }
  SUBCASE("missing cluster covariates") {
    ClusteredDataset d;
    d.clusters.push_back(make_cluster("a", 3, 2));
    d.clusters.push_back(make_cluster("b", 3, 2));
    d.clusters[0].w = VectorXd::Ones(2);
    CHECK_THROWS_WITH_AS(validate_dataset(std::move(d)),
                         doctest::Contains("cluster 'b'"), ValidationError);
  }
}

TEST_CASE("empty clusters are legal") {
  ClusteredDataset d;
  d.clusters.push_back(make_cluster("a", 3, 2));
  d.clusters.push_back(make_cluster("empty", 0, 0));
  const auto v = validate_dataset(std::move(d));
  CHECK(v.p == 2);
  CHECK(v.clusters[1].size() == 0);
}

TEST_CASE("mixing model alpha_for") {
  MixingModel mix;
  mix.kind = MixingModel::Kind::CovariateDependent;
  mix.gamma.resize(2, 2);
  mix.gamma << 1.0, 0.6, 1.0, -0.5;
  VectorXd w(2);
  w << 1.0, 1.0;
  const VectorXd a = mix.alpha_for(w);
  CHECK(a[0] == doctest::Approx(std::exp(1.6)).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(mix.alpha_for(VectorXd::Ones(3)), ValidationError);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, seed_tag::kEstep, 0) != derive_seed(1, seed_tag::kEstep, 1));
  CHECK(derive_seed(1, seed_tag::kEstep, 0) != derive_seed(1, seed_tag::kMarglik, 0));
  CHECK(derive_seed(1, seed_tag::kEstep, 0) != derive_seed(2, seed_tag::kEstep, 0));
  CHECK(cluster_seed(1, "c1") != cluster_seed(1, "c2"));
  CHECK(cluster_seed(1, "c1") == cluster_seed(1, "c1"));
}

TEST_CASE("parallel_for covers every index once for any thread count") {
  for (int threads : {1, 2, 7}) {
    std::vector<int> hits(100, 0);
    parallel_for(100, threads, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
}
