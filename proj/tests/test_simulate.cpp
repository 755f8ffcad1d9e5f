#include <doctest.h>

#include <cmath>

#include "lmr/errors.hpp"
#include "lmr/simulate.hpp"

using namespace lmr;
using namespace lmr::simulate;

TEST_CASE("generation is deterministic per (seed, replication)") {
  ScenarioSpec spec;
  spec.m = 8;
  spec.n = 5;
  spec.seed = 99;
  const auto a = generate(spec, 3).first;
  const auto b = generate(spec, 3).first;
  const auto other = generate(spec, 4).first;
  for (int i = 0; i < 8; ++i) {
    CHECK(a.clusters[i].y == b.clusters[i].y);
    CHECK(a.clusters[i].X == b.clusters[i].X);
  }
  CHECK(a.clusters[0].y != other.clusters[0].y);
}

TEST_CASE("scenario II oracle spot value and guard") {
  ScenarioSpec spec;
  spec.scenario = Scenario::II;
  spec.m = 50;
  spec.n = 4;
  const auto [d, truth] = generate(spec, 0);
  // cluster i=20 sits in the second block: phi(1.5; 1.5 + 1*0, 1) = 1/sqrt(2 pi)
  CHECK(truth(19, 1.5, 0.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)).epsilon(1e-14));
  // first and third blocks
  CHECK(truth(0, -1.0, 0.0) == doctest::Approx(1.0 / (0.5 * std::sqrt(2 * M_PI))).epsilon(1e-14));
  CHECK(truth(49, 0.0, 0.0) == doctest::Approx(1.0 / (1.5 * std::sqrt(2 * M_PI))).epsilon(1e-14));

  spec.m = 40;
  CHECK_THROWS_AS(generate(spec, 0), ValidationError);
}

TEST_CASE("scenario oracles integrate to one") {
  for (Scenario s : {Scenario::I, Scenario::II, Scenario::III}) {
    ScenarioSpec spec;
    spec.scenario = s;
    spec.m = 50;
    spec.n = 3;
    spec.n_equals_index = s == Scenario::III;
    const auto [d, truth] = generate(spec, 1);
    for (double x : {-1.5, -0.75, 0.0}) {
      for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(31)}) {
        const double mass = integrated_squared_error(
            [&](double t) { return truth(i, t, x); }, [](double) { return 0.0; }, {});
        // integral of f^2 is not 1; instead integrate f itself via the same grid
        double integral = 0.0;
        for (double t = -12.0; t < 12.0; t += 0.005)
          integral += 0.5 * (truth(i, t, x) + truth(i, t + 0.005, x)) * 0.005;
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(mass > 0.0);
      }
    }
  }
}

TEST_CASE("scenario III structure") {
  ScenarioSpec spec;
  spec.scenario = Scenario::III;
  spec.m = 12;
  spec.seed = 5;
  const auto d = generate(spec, 0).first;
  CHECK(d.q == 2);
  for (int i = 0; i < 12; ++i) {
    CHECK(d.clusters[i].size() == i + 1);  // n_i = i
    CHECK(d.clusters[i].w[0] == 1.0);
    CHECK((d.clusters[i].w[1] == 0.0 || d.clusters[i].w[1] == 1.0));
  }
}

TEST_CASE("forced pi pins the generating component") {
  ScenarioSpec spec;
  spec.m = 20;
  spec.n = 40;
  spec.seed = 11;
  spec.force_pi = 1.0;
  const auto d = generate(spec, 0).first;
  double resid = 0.0;
  for (const auto& c : d.clusters)
    for (Eigen::Index j = 0; j < c.size(); ++j)
      resid += (c.y[j] - (-1.0 + c.X(j, 1))) / (20.0 * 40.0);
  CHECK(std::abs(resid) < 3.0 / std::sqrt(20.0 * 40.0));
}

TEST_CASE("integrated squared error") {
  auto normal = [](double mu) {
    return [mu](double t) { return std::exp(-0.5 * (t - mu) * (t - mu)) / std::sqrt(2 * M_PI); };
  };
  SUBCASE("identical densities give zero") {
    CHECK(integrated_squared_error(normal(0.3), normal(0.3), {}) == 0.0);
  }
  SUBCASE("closed-form gaussian pair") {
    // (2 sqrt(pi) sigma)^{-1} * 2 * (1 - exp(-mu^2 / 4 sigma^2)) at mu=1, sigma=1
    const double expected = 0.12479829408003393;
    CHECK(integrated_squared_error(normal(0.0), normal(1.0), {}) ==
          doctest::Approx(expected).epsilon(1e-5));
  }
  SUBCASE("step halving is converged") {
    const double coarse = integrated_squared_error(normal(0.0), normal(1.0), {-12, 12, 0.005});
    const double fine = integrated_squared_error(normal(0.0), normal(1.0), {-12, 12, 0.0025});
    CHECK(std::abs(coarse - fine) < 1e-8);
  }
}

TEST_CASE("GM rows are cluster-invariant in the experiment table") {
  ScenarioSpec spec;
  spec.m = 6;
  spec.n = 12;
  spec.replications = 1;
  spec.x_eval = {0.0};
  spec.seed = 13;
  ExperimentConfig config;
  config.k_range = {1, 2};
  const auto result = run_experiment(spec, {Method::GM}, config);
  REQUIRE(result.failures.empty());
  REQUIRE(result.rows.size() == 6);
  // GM fits one density for all clusters, but the true densities differ, so
  // only the estimated side is shared; check the rows exist with method tag
  for (const auto& row : result.rows) {
    CHECK(row.method == "gm");
    CHECK(row.scenario == "I");
    CHECK(row.mise >= 0.0);
  }
}
