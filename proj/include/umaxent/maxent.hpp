#pragma once

// Finite discrete maximum-entropy models.
//
// A model over a finite element space X is log-linear in K features:
//
//   Pr(x) = exp(sum_k lambda_k phi_k(x)) / Z(lambda)
//
// and the maximum-entropy distribution matching target feature expectations
// is found by minimizing the convex dual  log Z(lambda) - lambda . targets.

#include "umaxent/numeric.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace umaxent {

using Weights = Eigen::VectorXd;

class ElementSpace {
 public:
  explicit ElementSpace(Eigen::Index size, std::vector<std::string> labels = {});

  Eigen::Index size() const { return size_; }
  const std::vector<std::string>& labels() const { return labels_; }
  // Display name; falls back to "x<i>" without labels.
  std::string label(Eigen::Index i) const;

 private:
  Eigen::Index size_;
  std::vector<std::string> labels_;
};

// Probability vector over a finite support.
// 
// Construction validates that every entry lies in [0, 1] and that the
// entries sum to one within `kSumTolerance`; instances are immutable.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit Distribution(Eigen::VectorXd probs);

  static Distribution uniform(Eigen::Index size);
  static Distribution point_mass(Eigen::Index size, Eigen::Index at);
  // Normalizes nonnegative weights (e.g. a count histogram).
  static Distribution normalized(const Eigen::Ref<const Eigen::VectorXd>& weights);

  Eigen::Index size() const { return probs_.size(); }
  double operator[](Eigen::Index i) const { return probs_[i]; }
  const Eigen::VectorXd& probs() const { return probs_; }

 private:
  Eigen::VectorXd probs_;
};

double total_variation(const Distribution& p, const Distribution& q);

// phi_k(x) stored as a K x |X| matrix: one row per feature, one column per
// element.
class FeatureTable {
 public:
  explicit FeatureTable(Eigen::MatrixXd values);

  Eigen::Index num_features() const { return values_.rows(); }
  Eigen::Index num_elements() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(Eigen::Index k, Eigen::Index x) const { return values_(k, x); }

  // Per-element score sum_k lambda_k phi_k(x).
  Eigen::VectorXd scores(const Weights& weights) const;

 private:
  Eigen::MatrixXd values_;
};

struct SolverConfig {
  double tolerance = 1e-6;  // on the gradient infinity-norm
  int max_iterations = 10000;
  int history = 20;  // L-BFGS correction pairs

  void validate() const;
};

struct DualDiagnostics {
  double dual_value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct DualPoint {
  double value;
  Eigen::VectorXd gradient;
};

using DualOracle = std::function<DualPoint(const Eigen::VectorXd&)>;

struct DescentResult {
  Eigen::VectorXd point;
  DualDiagnostics diagnostics;
};

// L-BFGS with a Wolfe line search on a smooth convex objective. Stops at
// ||grad||_inf <= tolerance; otherwise (iteration cap, or no further decrease
// representable in double precision) returns the last iterate with
// converged = false.
DescentResult minimize_dual(const DualOracle& oracle, Eigen::VectorXd start,
                            const SolverConfig& config);

double log_partition(const Weights& weights, const FeatureTable& features);

Distribution model_distribution(const Weights& weights, const FeatureTable& features);

Eigen::VectorXd expected_features(const Distribution& dist, const FeatureTable& features);

// log Z(lambda) - lambda . targets
double dual_objective(const Weights& weights, const FeatureTable& features,
                      const Eigen::VectorXd& targets);

// E_lambda[phi] - targets
Eigen::VectorXd dual_gradient(const Weights& weights, const FeatureTable& features,
                              const Eigen::VectorXd& targets);

struct MaxEntSolution {
  Weights weights;
  DualDiagnostics diagnostics;
};

// A non-converged solve is reported through diagnostics.converged, with the
// last iterate; it never throws for that reason.
MaxEntSolution solve_maxent(const FeatureTable& features, const Eigen::VectorXd& targets,
                            const SolverConfig& config = {},
                            const std::optional<Weights>& warm_start = std::nullopt);

// Shannon entropy in nats.
double entropy(const Distribution& dist);

}  // namespace umaxent
