#ifndef LMR_SPECIAL_HPP
#define LMR_SPECIAL_HPP

#include <Eigen/Dense>

namespace lmr {

// Logarithmic derivatives of the gamma function, accurate to ~1e-12 for
// positive arguments (upward recurrence into the asymptotic regime).
double digamma(double x);
double trigamma(double x);

// log(sum(exp(v))) with max subtraction; returns -inf for an all -inf input.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace lmr

#endif
