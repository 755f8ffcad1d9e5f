#include <doctest.h>

#include <cmath>
#include <random>

#include "lmr/errors.hpp"
#include "lmr/expert.hpp"
#include "lmr/rng.hpp"

using namespace lmr;

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;

ExpertParams gaussian(std::initializer_list<double> beta, double sigma2) {
  ExpertParams p;
  p.family = ExpertFamily::GaussianLinear;
  p.beta = VectorXd(static_cast<Eigen::Index>(beta.size()));
  Eigen::Index i = 0;
  for (double b : beta) p.beta[i++] = b;
  p.sigma2 = sigma2;
  return p;
}

// Random regression fixture shared by the MLE tests.
void regression_data(int n, int p, Rng& rng, MatrixXd& X, VectorXd& y) {
  std::normal_distribution<double> norm(0.0, 1.0);
  X.resize(n, p);
  y.resize(n);
  for (int j = 0; j < n; ++j) {
    X(j, 0) = 1.0;
    for (int c = 1; c < p; ++c) X(j, c) = norm(rng);
    y[j] = 0.5 + X.row(j).tail(p - 1).sum() + norm(rng);
  }
}
}  // namespace

TEST_CASE("gaussian log density spot values") {
  VectorXd x1(1);
  x1 << 0.0;
  CHECK(log_density(gaussian({0.0}, 1.0), 0.0, x1) == doctest::Approx(-kHalfLog2Pi).epsilon(1e-14));
  VectorXd x2(1);
  x2 << 2.0;
  CHECK(log_density(gaussian({1.0}, 1.0), 2.0, x2) == doctest::Approx(-kHalfLog2Pi).epsilon(1e-14));
}

TEST_CASE("poisson log density spot values and domain") {
  ExpertParams p;
  p.family = ExpertFamily::PoissonLog;
  p.beta = VectorXd::Zero(1);
  VectorXd x(1);
  x << 1.0;
  CHECK(log_density(p, 0.0, x) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(log_density(p, 2.0, x) == doctest::Approx(-1.0 - std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS(log_density(p, 1.5, x));
  CHECK_THROWS(log_density(p, -1.0, x));
}

TEST_CASE("densities normalize") {
  const auto params = gaussian({0.3, -0.7}, 2.3);
  VectorXd x(2);
  x << 1.0, 0.4;
  const double mean = params.beta.dot(x);
  const double sd = std::sqrt(params.sigma2);
  double integral = 0.0;
  const double step = sd / 200.0;
  for (double t = mean - 8 * sd; t <= mean + 8 * sd; t += step)
    integral += std::exp(log_density(params, t, x)) * step;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));

  ExpertParams pois;
  pois.family = ExpertFamily::PoissonLog;
  pois.beta = VectorXd::Constant(1, 0.9);
  double mass = 0.0;
  for (int t = 0; t < 200; ++t) mass += std::exp(log_density(pois, t, x.head(1)));
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("unit weights reduce to OLS") {
  Rng rng(42);
  MatrixXd X;
  VectorXd y;
  regression_data(40, 3, rng, X, y);
  const auto fit = weighted_mle(ExpertFamily::GaussianLinear, X, y, VectorXd::Ones(40));
  const VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  CHECK((fit.params.beta - ols).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK_FALSE(fit.ridged);
}

TEST_CASE("indicator weights equal subset OLS") {
  Rng rng(7);
  MatrixXd X;
  VectorXd y;
  regression_data(30, 2, rng, X, y);
  VectorXd w = VectorXd::Zero(30);
  w.head(12).setOnes();
  const auto fit = weighted_mle(ExpertFamily::GaussianLinear, X, y, w);
  const MatrixXd Xs = X.topRows(12);
  const VectorXd ys = y.head(12);
  const VectorXd ols = (Xs.transpose() * Xs).ldlt().solve(Xs.transpose() * ys);
  CHECK((fit.params.beta - ols).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("weighted MLE matches an independent weighted solve") {
  MatrixXd X(5, 2);
  X << 1, 0.1, 1, -0.8, 1, 1.7, 1, 0.4, 1, -1.2;
  VectorXd y(5);
  y << 0.2, -1.0, 2.5, 0.7, -1.4;
  VectorXd w(5);
  w << 0.2, 0.4, 0.6, 0.8, 1.0;

  // sqrt-weight scaling solved by QR, independent of the normal equations.
  const VectorXd sw = w.array().sqrt();
  const MatrixXd Xw = sw.asDiagonal() * X;
  const VectorXd yw = sw.asDiagonal() * y;
  const VectorXd beta = Xw.colPivHouseholderQr().solve(yw);
  const VectorXd r = y - X * beta;
  const double sigma2 = (w.array() * r.array().square()).sum() / w.sum();

  const auto fit = weighted_mle(ExpertFamily::GaussianLinear, X, y, w);
  CHECK((fit.params.beta - beta).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(fit.params.sigma2 == doctest::Approx(sigma2).epsilon(1e-10));
}

TEST_CASE("weight scale equivariance is exact for power-of-two factors") {
  Rng rng(3);
  MatrixXd X;
  VectorXd y;
  regression_data(25, 2, rng, X, y);
  VectorXd w(25);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int j = 0; j < 25; ++j) w[j] = unif(rng);
  const auto a = weighted_mle(ExpertFamily::GaussianLinear, X, y, w);
  const auto b = weighted_mle(ExpertFamily::GaussianLinear, X, y, 4.0 * w);
  CHECK(a.params.beta == b.params.beta);
  CHECK(a.params.sigma2 == b.params.sigma2);
}

TEST_CASE("weighted score is zero at the optimum") {
  Rng rng(11);
  MatrixXd X;
  VectorXd y;
  regression_data(50, 3, rng, X, y);
  VectorXd w(50);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int j = 0; j < 50; ++j) w[j] = unif(rng);
  const auto fit = weighted_mle(ExpertFamily::GaussianLinear, X, y, w);
  const VectorXd score = X.transpose() * (w.array() * (y - X * fit.params.beta).array()).matrix();
  CHECK(score.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("singular design errors or ridges on request") {
  MatrixXd X(4, 2);
  X << 1, 2, 1, 2, 1, 2, 1, 2;  // second column collinear with the first
  VectorXd y(4);
  y << 1, 2, 3, 4;
  CHECK_THROWS_AS(weighted_mle(ExpertFamily::GaussianLinear, X, y, VectorXd::Ones(4)),
                  NumericalError);
  const auto fit = weighted_mle(ExpertFamily::GaussianLinear, X, y, VectorXd::Ones(4), true);
  CHECK(fit.ridged);
  CHECK(fit.params.beta.allFinite());
}

TEST_CASE("poisson newton recovers the generating coefficients") {
  Rng rng(5);
  std::normal_distribution<double> norm(0.0, 1.0);
  const int n = 4000;
  MatrixXd X(n, 2);
  VectorXd y(n);
  const double b0 = 0.5, b1 = 0.8;
  for (int j = 0; j < n; ++j) {
    X(j, 0) = 1.0;
    X(j, 1) = norm(rng);
    std::poisson_distribution<int> pois(std::exp(b0 + b1 * X(j, 1)));
    y[j] = pois(rng);
  }
  const auto fit = weighted_mle(ExpertFamily::PoissonLog, X, y, VectorXd::Ones(n));
  CHECK(fit.params.beta[0] == doctest::Approx(b0).epsilon(0.1));
  CHECK(fit.params.beta[1] == doctest::Approx(b1).epsilon(0.1));
  // the fitted score must vanish
  const VectorXd mu = (X * fit.params.beta).array().exp();
  CHECK((X.transpose() * (y - mu)).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("log_density_matrix stacks per-expert densities") {
  Cluster c;
  c.id = "a";
  c.y = VectorXd::Zero(2);
  c.X = MatrixXd::Ones(2, 1);
  std::vector<ExpertParams> experts = {gaussian({0.0}, 1.0), gaussian({1.0}, 1.0)};
  const MatrixXd logh = log_density_matrix(experts, c);
  REQUIRE(logh.rows() == 2);
  REQUIRE(logh.cols() == 2);
  CHECK(logh(0, 0) == doctest::Approx(log_density(experts[0], 0.0, c.X.row(0))).epsilon(1e-15));
  CHECK(logh(1, 1) == doctest::Approx(log_density(experts[1], 0.0, c.X.row(1))).epsilon(1e-15));
}
