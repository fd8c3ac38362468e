#pragma once

// Maximum entropy under noisy, partial observations.
//
// Only symbols omega drawn through a known static channel Pr(omega | x) are
// observed. The model-matching constraints become
//
//   E_lambda[phi_k] = sum_omega P~(omega) sum_x Pr_lambda(x | omega) phi_k(x)
//
// whose right-hand side depends on the model itself. run_umaxent() alternates
// a posterior E-step with an ordinary maximum-entropy M-step.

#include "umaxent/maxent.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace umaxent {

class ObservationSpace {
 public:
  explicit ObservationSpace(Eigen::Index size, std::vector<std::string> labels = {});
  Eigen::Index size() const { return size_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  Eigen::Index size_;
  std::vector<std::string> labels_;
};

// Pr(omega | x) as an |X| x |Omega| row-stochastic matrix.
class ObservationModel {
 public:
  explicit ObservationModel(Eigen::MatrixXd channel);

  static ObservationModel identity(Eigen::Index size);
  // Every row equal to `row`: observations carry no information about x.
  static ObservationModel uninformative(Eigen::Index num_elements, const Distribution& row);

  Eigen::Index num_elements() const { return channel_.rows(); }
  Eigen::Index num_observations() const { return channel_.cols(); }
  const Eigen::MatrixXd& channel() const { return channel_; }
  double operator()(Eigen::Index x, Eigen::Index omega) const { return channel_(x, omega); }

 private:
  Eigen::MatrixXd channel_;
};

// Empirical distribution P~(omega) over observation symbols.
using EmpiricalObservations = Distribution;

// Raised when data puts mass on a symbol the model deems impossible.
class ImpossibleObservation : public std::runtime_error {
 public:
  explicit ImpossibleObservation(Eigen::Index observation, const std::string& context = {});
  Eigen::Index observation() const { return observation_; }

 private:
  Eigen::Index observation_;
};

// Raised by run_umaxent when an M-step fails to reach its tolerance.
class EmNonConvergence : public std::runtime_error {
 public:
  EmNonConvergence(int em_iteration, Weights best, DualDiagnostics inner);
  int em_iteration() const { return em_iteration_; }
  const Weights& best_weights() const { return best_; }
  const DualDiagnostics& inner() const { return inner_; }

 private:
  int em_iteration_;
  Weights best_;
  DualDiagnostics inner_;
};

struct PosteriorTable {
  Eigen::MatrixXd probs;      // |X| x |Omega|, column omega is Pr(x | omega)
  Eigen::VectorXd evidence;   // Pr(omega) under the model
  std::vector<bool> reachable;  // false where Pr(omega) == 0; that column is zero
};

PosteriorTable posterior(const Distribution& model, const ObservationModel& obs);

// E-step targets sum_omega P~(omega) sum_x Pr_prev(x | omega) phi(x).
Eigen::VectorXd e_step(const Weights& weights_prev, const FeatureTable& features,
                       const ObservationModel& obs, const EmpiricalObservations& data);

// L(lambda) = sum_omega P~(omega) log Pr_lambda(omega). Returns -inf when an
// observed symbol is impossible under the model.
double observation_log_likelihood(const Weights& weights, const FeatureTable& features,
                                  const ObservationModel& obs, const EmpiricalObservations& data);

struct EmConfig {
  double tolerance = 1e-5;  // on ||lambda - lambda'||_inf
  int max_iterations = 500;
  SolverConfig inner;

  void validate() const;
};

// Per-iteration decomposition L(lambda') = U*(lambda') + Q(lambda', lambda') + H(lambda').
struct EmIteration {
  double log_likelihood;       // L at the new weights
  double q_value;              // Q(lambda, lambda') at the new weights
  double conditional_entropy;  // H(lambda')
  double expected_log_obs;     // U*(lambda')
  double step_norm;            // ||lambda - lambda'||_inf
};

struct EmDiagnostics {
  double initial_log_likelihood = 0.0;
  std::vector<EmIteration> history;
  int iterations = 0;
  bool converged = false;
};

struct EmResult {
  Weights weights;
  EmDiagnostics diagnostics;
};

EmResult run_umaxent(const FeatureTable& features, const ObservationModel& obs,
                     const EmpiricalObservations& data, const EmConfig& config = {},
                     const std::optional<Weights>& init = std::nullopt);

// The pieces of the likelihood decomposition at lambda' (for diagnostics).
struct LikelihoodTerms {
  double expected_log_obs;     // U*
  double conditional_entropy;  // H
};
LikelihoodTerms likelihood_terms(const Weights& weights_prev, const FeatureTable& features,
                                 const ObservationModel& obs, const EmpiricalObservations& data);

// Feature expectations of the "decode then count" baseline: every observed
// symbol is assigned wholesale to argmax_x Pr(omega | x) prior(x), ties to
// the lowest index. Feeding these to solve_maxent gives the ML MaxEnt model.
Eigen::VectorXd ml_maxent_targets(const ObservationModel& obs, const EmpiricalObservations& data,
                                  const FeatureTable& features,
                                  const std::optional<Distribution>& decode_prior = std::nullopt);

// The decoded empirical distribution behind ml_maxent_targets().
Distribution ml_decoded_distribution(const ObservationModel& obs,
                                     const EmpiricalObservations& data,
                                     const std::optional<Distribution>& decode_prior = std::nullopt);

// Deterministic channel Pr(omega_y | x) = [group(x) == y]; under it the
// E-step reproduces the latent-variable completion over each group.
ObservationModel latent_reduction_channel(const std::vector<int>& group_of_element);

}  // namespace umaxent
