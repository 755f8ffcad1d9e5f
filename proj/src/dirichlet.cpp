#include "lmr/dirichlet.hpp"

#include <cmath>

#include "lmr/errors.hpp"
#include "lmr/special.hpp"

namespace lmr {
namespace dirichlet {

namespace {
constexpr double kBoundaryClamp = 1e-12;
}

double log_pdf(const Eigen::Ref<const VectorXd>& pi, const Eigen::Ref<const VectorXd>& alpha) {
  if (pi.size() != alpha.size()) throw ValidationError("log_pdf: dimension mismatch");
  if ((alpha.array() <= 0.0).any()) throw NumericalError("log_pdf: alpha must be positive");
  if ((pi.array() <= 0.0).any())
    throw NumericalError("log_pdf: pi must be strictly inside the simplex");
  if (std::abs(pi.sum() - 1.0) > 1e-10) throw ValidationError("log_pdf: pi does not sum to 1");

  double v = std::lgamma(alpha.sum());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    v += -std::lgamma(alpha[k]) + (alpha[k] - 1.0) * std::log(pi[k]);
  return v;
}

VectorXd sample(const Eigen::Ref<const VectorXd>& alpha, Rng& rng) {
  VectorXd g(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    std::gamma_distribution<double> gamma(alpha[k], 1.0);
    g[k] = gamma(rng);
  }
  VectorXd pi = g / g.sum();
  pi = pi.cwiseMax(kBoundaryClamp);
  return pi / pi.sum();
}

VectorXd mean(const Eigen::Ref<const VectorXd>& alpha) {
  if ((alpha.array() <= 0.0).any()) throw NumericalError("mean: alpha must be positive");
  return alpha / alpha.sum();
}

namespace {

// m*lgamma(sum a) - m*sum lgamma(a_k) + m*sum a_k logpi_bar_k
double static_objective(const VectorXd& alpha, const VectorXd& logpi_bar, int m) {
  double v = m * std::lgamma(alpha.sum());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    v += -m * std::lgamma(alpha[k]) + alpha[k] * m * logpi_bar[k];
  return v;
}

VectorXd static_gradient(const VectorXd& alpha, const VectorXd& logpi_bar, int m) {
  const double psi_sum = digamma(alpha.sum());
  VectorXd g(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    g[k] = m * (psi_sum - digamma(alpha[k]) + logpi_bar[k]);
  return g;
}

}  // namespace

VectorXd mle_static(const Eigen::Ref<const VectorXd>& logpi_bar, int m,
                    const Eigen::Ref<const VectorXd>& alpha_init,
                    std::vector<double>* objective_trace) {
  const Eigen::Index K = logpi_bar.size();
  if (K < 2)
    throw ValidationError("Dirichlet MLE requires K >= 2; alpha is unidentified at K = 1");
  if (alpha_init.size() != K || (alpha_init.array() <= 0.0).any())
    throw ValidationError("mle_static: alpha_init must be a positive K-vector");
  if (!logpi_bar.allFinite() || (logpi_bar.array() >= 0.0).any())
    throw ValidationError("mle_static: logpi_bar entries must be finite and negative");

  VectorXd u = alpha_init.array().log();
  VectorXd alpha = alpha_init;
  double obj = static_objective(alpha, logpi_bar, m);
  if (objective_trace) objective_trace->push_back(obj);

  // The objective and gradient scale linearly with m, so convergence
  // tolerances must too; otherwise large m stalls on the roundoff plateau.
  const double scale_m = std::max(1.0, static_cast<double>(m));

  for (int iter = 0; iter < 200; ++iter) {
    VectorXd grad = static_gradient(alpha, logpi_bar, m);
    if (grad.norm() < 1e-8 * scale_m) return alpha;

    // Hessian in alpha: m*psi1(sum) 11' - m*diag(psi1(a_k)); transformed to
    // log coordinates H_u = D H D + diag(a .* grad).
    const double psi1_sum = trigamma(alpha.sum());
    MatrixXd H = MatrixXd::Constant(K, K, m * psi1_sum);
    for (Eigen::Index k = 0; k < K; ++k) H(k, k) -= m * trigamma(alpha[k]);
    MatrixXd Hu = alpha.asDiagonal() * H * alpha.asDiagonal();
    Hu.diagonal() += alpha.cwiseProduct(grad);
    VectorXd gu = alpha.cwiseProduct(grad);

    VectorXd step = (-Hu).ldlt().solve(gu);
    bool accepted = false;
    double scale = 1.0;
    for (int h = 0; h < 40 && !accepted; ++h, scale *= 0.5) {
      VectorXd u_new = u + scale * step;
      VectorXd a_new = u_new.array().exp();
      if (!a_new.allFinite()) continue;
      const double obj_new = static_objective(a_new, logpi_bar, m);
      if (obj_new > obj) {
        u = u_new;
        alpha = a_new;
        obj = obj_new;
        accepted = true;
      }
    }
    if (!accepted) {
      // Newton direction failed; backtracking ascent along the gradient.
      scale = 1.0 / std::max(1.0, gu.norm());
      for (int h = 0; h < 60 && !accepted; ++h, scale *= 0.5) {
        VectorXd u_new = u + scale * gu;
        VectorXd a_new = u_new.array().exp();
        if (!a_new.allFinite()) continue;
        const double obj_new = static_objective(a_new, logpi_bar, m);
        if (obj_new > obj) {
          u = u_new;
          alpha = a_new;
          obj = obj_new;
          accepted = true;
        }
      }
    }
    if (objective_trace) objective_trace->push_back(obj);
    if (!accepted) {
      // No ascent direction makes progress; accept the iterate if already
      // near-stationary, otherwise report failure.
      if (grad.norm() < 1e-6 * scale_m) return alpha;
      throw NonConvergenceError("mle_static: line search stalled at gradient norm " +
                                std::to_string(grad.norm()));
    }
  }
  VectorXd grad = static_gradient(alpha, logpi_bar, m);
  if (grad.norm() < 1e-6 * scale_m) return alpha;
  throw NonConvergenceError("mle_static: no convergence after 200 iterations (gradient norm " +
                            std::to_string(grad.norm()) + ")");
}

double cd_objective(const MatrixXd& gamma, const MatrixXd& W, const MatrixXd& logpi_star) {
  const Eigen::Index m = W.rows();
  const Eigen::Index K = gamma.rows();
  // a_ik = exp(w_i . gamma_k), exponent clipped to keep the objective finite.
  MatrixXd eta = (W * gamma.transpose()).cwiseMin(300.0);  // m x K
  MatrixXd a = eta.array().exp();
  double v = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    v += std::lgamma(a.row(i).sum());
    for (Eigen::Index k = 0; k < K; ++k)
      v += -std::lgamma(a(i, k)) + a(i, k) * logpi_star(i, k);
  }
  return v;
}

MatrixXd mle_covariate(const MatrixXd& gamma_init, const MatrixXd& W, const MatrixXd& logpi_star) {
  const Eigen::Index K = gamma_init.rows();
  const Eigen::Index q = gamma_init.cols();
  const Eigen::Index m = W.rows();
  if (W.cols() != q || logpi_star.rows() != m || logpi_star.cols() != K)
    throw ValidationError("mle_covariate: dimension mismatch");
  if (K < 2) throw ValidationError("Dirichlet MLE requires K >= 2");

  const Eigen::Index dim = K * q;
  auto to_vec = [&](const MatrixXd& g) {
    VectorXd v(dim);
    for (Eigen::Index k = 0; k < K; ++k) v.segment(k * q, q) = g.row(k).transpose();
    return v;
  };
  auto to_mat = [&](const VectorXd& v) {
    MatrixXd g(K, q);
    for (Eigen::Index k = 0; k < K; ++k) g.row(k) = v.segment(k * q, q).transpose();
    return g;
  };
  auto objective = [&](const VectorXd& v) { return cd_objective(to_mat(v), W, logpi_star); };
  auto gradient = [&](const VectorXd& v) {
    MatrixXd g = to_mat(v);
    MatrixXd eta = (W * g.transpose()).cwiseMin(300.0);
    MatrixXd a = eta.array().exp();
    VectorXd grad = VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double psi_sum = digamma(a.row(i).sum());
      for (Eigen::Index k = 0; k < K; ++k) {
        const double c = a(i, k) * (psi_sum - digamma(a(i, k)) + logpi_star(i, k));
        grad.segment(k * q, q) += c * W.row(i).transpose();
      }
    }
    return grad;
  };

  // BFGS (maximization) with backtracking Armijo line search.
  VectorXd x = to_vec(gamma_init);
  double f = objective(x);
  VectorXd g = gradient(x);
  MatrixXd Hinv = MatrixXd::Identity(dim, dim);

  for (int iter = 0; iter < 500; ++iter) {
    if (g.norm() < 1e-6) return to_mat(x);
    VectorXd dir = Hinv * g;
    if (dir.dot(g) <= 0.0) dir = g;  // reset to steepest ascent

    double step = 1.0;
    const double slope = dir.dot(g);
    VectorXd x_new;
    double f_new = f;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, step *= 0.5) {
      x_new = x + step * dir;
      f_new = objective(x_new);
      if (f_new >= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (g.norm() < 1e-4) return to_mat(x);
      throw NonConvergenceError("mle_covariate: line search stalled at gradient norm " +
                                std::to_string(g.norm()));
    }

    VectorXd g_new = gradient(x_new);
    VectorXd s = x_new - x;
    VectorXd yv = g_new - g;  // note: ascent, curvature condition uses -yv.s
    const double sy = -s.dot(yv);
    if (sy > 1e-12) {
      VectorXd Hy = Hinv * (-yv);
      const double yHy = (-yv).dot(Hy);
      Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / sy;
    } else {
      Hinv.setIdentity();
    }
    x = x_new;
    f = f_new;
    g = g_new;
  }
  if (g.norm() < 1e-4) return to_mat(x);
  throw NonConvergenceError("mle_covariate: no convergence after 500 iterations (gradient norm " +
                            std::to_string(g.norm()) + ")");
}

VectorXd cd_mean(const MatrixXd& gamma, const Eigen::Ref<const VectorXd>& w) {
  VectorXd eta = gamma * w;
  VectorXd e = (eta.array() - eta.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace dirichlet
}  // namespace lmr
