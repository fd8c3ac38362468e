#pragma once

// Slow, direct reference computations used to check the library: plain
// summations, enumeration of every path, finite differences and dense
// linear solves. Nothing here shares code with the routines it checks.

#include "umaxent/irl.hpp"
#include "umaxent/maxent.hpp"
#include "umaxent/mdp.hpp"
#include "umaxent/uncertain.hpp"

#include <functional>
#include <vector>

namespace umaxent::oracle {

// log sum_x exp(score(x)) without any shift, in long double.
double naive_log_partition(const Weights& weights, const FeatureTable& features);

// sum_x p(x) phi_k(x) by an explicit double loop.
Eigen::VectorXd naive_expectation(const Distribution& dist, const FeatureTable& features);

// (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-5);

// Pr(x | omega) via the full joint table Pr(x, omega), columns normalized.
Eigen::MatrixXd joint_posterior(const Distribution& model, const ObservationModel& obs);

// sum_omega P~(omega) sum_x Pr(x | omega) phi(x) by a triple loop.
Eigen::VectorXd triple_loop_e_step(const Weights& weights, const FeatureTable& features,
                                   const ObservationModel& obs, const Distribution& data);

// Latent-variable completion: group y observed with frequency P~(y); inside
// the group the model's conditional Pr(x) / Z_y spreads the mass.
Eigen::VectorXd latent_completion(const Weights& weights, const FeatureTable& features,
                                  const std::vector<int>& group_of_element,
                                  const Distribution& group_frequencies);

double naive_kld(const Distribution& p, const Distribution& q);

// Every (state, action) path of the policy's horizon with its probability.
struct WeightedPath {
  Trajectory path;
  double probability;
};
std::vector<WeightedPath> enumerate_paths(const Mdp& dynamics, const TimedPolicy& policy);

Eigen::VectorXd enumerated_feature_counts(const Mdp& dynamics, const RewardFeatures& features,
                                          const TimedPolicy& policy);

// Smoothing marginals Pr(s_t, a_t | omega) and log Pr(omega) by summing over
// every path; kMissing steps carry likelihood 1.
struct EnumeratedPosterior {
  std::vector<Eigen::MatrixXd> pairs;
  double log_likelihood;
};
EnumeratedPosterior enumerated_posterior(const ObservationSequence& sequence,
                                         const StepChannel& channel, const Mdp& dynamics,
                                         const TimedPolicy& policy);

// Solves (I - gamma P_pi) V = R_pi directly.
ValueFunction linear_policy_values(const Mdp& mdp, const Policy& policy);

}  // namespace umaxent::oracle
