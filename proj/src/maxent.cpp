#include "umaxent/maxent.hpp"

#include <ceres/ceres.h>
#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>

namespace umaxent {

ElementSpace::ElementSpace(Eigen::Index size, std::vector<std::string> labels)
    : size_(size), labels_(std::move(labels)) {
  if (size_ < 1) throw std::invalid_argument("ElementSpace: size must be at least 1");
  if (!labels_.empty()) {
    require_dimension(static_cast<Eigen::Index>(labels_.size()), size_, "ElementSpace labels");
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
      throw std::invalid_argument("ElementSpace: labels must be unique");
    }
  }
}

std::string ElementSpace::label(Eigen::Index i) const {
  if (i < 0 || i >= size_) throw std::out_of_range("ElementSpace::label");
  return labels_.empty() ? "x" + std::to_string(i) : labels_[static_cast<std::size_t>(i)];
}

Distribution::Distribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw std::invalid_argument("Distribution: empty support");
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    const double p = probs_[i];
    if (!(p >= 0.0 && p <= 1.0 + kSumTolerance)) {
      throw std::invalid_argument("Distribution: entry " + std::to_string(i) +
                                  " outside [0,1]: " + std::to_string(p));
    }
  }
  const double total = probs_.sum();
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw std::invalid_argument("Distribution: entries sum to " + std::to_string(total));
  }
}

Distribution Distribution::uniform(Eigen::Index size) {
  if (size < 1) throw std::invalid_argument("Distribution::uniform: empty support");
  return Distribution(Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size)));
}

Distribution Distribution::point_mass(Eigen::Index size, Eigen::Index at) {
  if (at < 0 || at >= size) throw std::out_of_range("Distribution::point_mass");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(size);
  p[at] = 1.0;
  return Distribution(std::move(p));
}

Distribution Distribution::normalized(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw std::invalid_argument("Distribution::normalized: weights must be finite and nonnegative");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw std::invalid_argument("Distribution::normalized: zero total mass");
  return Distribution(weights / total);
}

double total_variation(const Distribution& p, const Distribution& q) {
  require_dimension(q.size(), p.size(), "total_variation support");
  return 0.5 * (p.probs() - q.probs()).cwiseAbs().sum();
}

FeatureTable::FeatureTable(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("FeatureTable: needs at least one feature and one element");
  }
  if (!values_.allFinite()) throw std::invalid_argument("FeatureTable: non-finite value");
}

Eigen::VectorXd FeatureTable::scores(const Weights& weights) const {
  require_dimension(weights.size(), num_features(), "weights length");
  if (!weights.allFinite()) throw std::invalid_argument("weights: non-finite entry");
  return values_.transpose() * weights;
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
  if (history < 1) throw std::invalid_argument("SolverConfig: history must be >= 1");
}

namespace {

class OracleFunction final : public ceres::FirstOrderFunction {
 public:
  OracleFunction(const DualOracle& oracle, int size) : oracle_(oracle), size_(size) {}
  int NumParameters() const override { return size_; }
  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const DualPoint point = oracle_(Eigen::Map<const Eigen::VectorXd>(parameters, size_));
    if (!std::isfinite(point.value) || !point.gradient.allFinite()) return false;
    *cost = point.value;
    if (gradient != nullptr) Eigen::Map<Eigen::VectorXd>(gradient, size_) = point.gradient;
    return true;
  }

 private:
  const DualOracle& oracle_;
  int size_;
};

}  // namespace

DescentResult minimize_dual(const DualOracle& oracle, Eigen::VectorXd start,
                            const SolverConfig& config) {
  config.validate();
  Eigen::VectorXd x = std::move(start);
  DualPoint current = oracle(x);
  if (!std::isfinite(current.value) || !current.gradient.allFinite()) {
    throw std::domain_error("minimize_dual: objective not finite at the starting point");
  }

  // Ceres' line search warns through glog on flat stretches of the objective;
  // convergence is reported through the diagnostics instead.
  static std::once_flag quiet;
  std::call_once(quiet, [] { FLAGS_minloglevel = google::GLOG_ERROR; });

  DualDiagnostics diag;
  if (x.size() > 0 && current.gradient.lpNorm<Eigen::Infinity>() > config.tolerance) {
    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.max_lbfgs_rank = config.history;
    options.max_num_iterations = config.max_iterations;
    options.gradient_tolerance = config.tolerance;
    // Run until the gradient test passes or the cost stops moving at all.
    options.function_tolerance = 0.0;
    options.parameter_tolerance = 0.0;
    options.logging_type = ceres::SILENT;
    ceres::GradientProblem problem(new OracleFunction(oracle, static_cast<int>(x.size())));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);
    diag.iterations = std::max(0, static_cast<int>(summary.iterations.size()) - 1);
    current = oracle(x);
  }
  diag.dual_value = current.value;
  diag.gradient_norm = x.size() > 0 ? current.gradient.lpNorm<Eigen::Infinity>() : 0.0;
  diag.converged = diag.gradient_norm <= config.tolerance;
  return {std::move(x), diag};
}

double log_partition(const Weights& weights, const FeatureTable& features) {
  return log_sum_exp(features.scores(weights));
}

Distribution model_distribution(const Weights& weights, const FeatureTable& features) {
  const Eigen::VectorXd scores = features.scores(weights);
  const double log_z = log_sum_exp(scores);
  Eigen::VectorXd p = (scores.array() - log_z).exp().matrix();
  // Renormalize away the last ulp of drift.
  return Distribution(p / p.sum());
}

Eigen::VectorXd expected_features(const Distribution& dist, const FeatureTable& features) {
  require_dimension(dist.size(), features.num_elements(), "distribution support");
  return features.values() * dist.probs();
}

double dual_objective(const Weights& weights, const FeatureTable& features,
                      const Eigen::VectorXd& targets) {
  require_dimension(targets.size(), features.num_features(), "targets length");
  return log_partition(weights, features) - weights.dot(targets);
}

Eigen::VectorXd dual_gradient(const Weights& weights, const FeatureTable& features,
                              const Eigen::VectorXd& targets) {
  require_dimension(targets.size(), features.num_features(), "targets length");
  return expected_features(model_distribution(weights, features), features) - targets;
}

MaxEntSolution solve_maxent(const FeatureTable& features, const Eigen::VectorXd& targets,
                            const SolverConfig& config, const std::optional<Weights>& warm_start) {
  require_dimension(targets.size(), features.num_features(), "targets length");
  if (!targets.allFinite()) throw std::invalid_argument("solve_maxent: non-finite target");
  Weights start = warm_start.value_or(Weights::Zero(features.num_features()));
  require_dimension(start.size(), features.num_features(), "warm start length");

  const DualOracle oracle = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd scores = features.values().transpose() * w;
    const double log_z = log_sum_exp(scores);
    const Eigen::VectorXd p = (scores.array() - log_z).exp().matrix();
    return DualPoint{log_z - w.dot(targets), features.values() * p - targets};
  };
  DescentResult result = minimize_dual(oracle, std::move(start), config);
  return {std::move(result.point), result.diagnostics};
}

double entropy(const Distribution& dist) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) h -= x_log_x(dist[i]);
  return std::max(h, 0.0);
}

}  // namespace umaxent
