#include "umaxent/numeric.hpp"

#include <cmath>
#include <limits>

namespace umaxent {

void require_dimension(Eigen::Index actual, Eigen::Index expected, const std::string& what) {
  if (actual != expected) {
    throw DimensionError(what + ": expected " + std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (values.size() == 0) return kNegInf;
  const double shift = values.maxCoeff();
  if (shift == kNegInf) return kNegInf;
  if (shift == std::numeric_limits<double>::infinity()) return shift;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) sum += std::exp(values[i] - shift);
  return shift + std::log(sum);
}

double safe_log(double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(x);
}

double x_log_x(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& values) { return values.allFinite(); }

}  // namespace umaxent
