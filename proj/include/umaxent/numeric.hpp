#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace umaxent {

// Thrown when two operands disagree on a dimension (element count, feature
// count, observation count, horizon).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require_dimension(Eigen::Index actual, Eigen::Index expected, const std::string& what);

// log(sum_i exp(values[i])) with max-shift stabilization.
// Empty input or all -inf returns -inf.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

// log(x) with log(0) = -inf and no floating-point exception noise.
double safe_log(double x);

// x * log(x) with the 0 log 0 = 0 convention.
double x_log_x(double x);

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& values);

}  // namespace umaxent
