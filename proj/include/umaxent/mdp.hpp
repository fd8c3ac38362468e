#pragma once

// Finite Markov decision processes <S, A, T, R, gamma, S0>, exact solvers,
// simulation, and the inverse learning error metric.

#include "umaxent/maxent.hpp"
#include "umaxent/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace umaxent {

using ValueFunction = Eigen::VectorXd;

class Mdp {
 public:
  static constexpr double kRowTolerance = 1e-9;

  // transitions[a](s, s') = Pr(s' | s, a); reward(s, a).
  Mdp(std::vector<Eigen::MatrixXd> transitions, Eigen::MatrixXd reward, double discount,
      Distribution initial);

  int num_states() const { return static_cast<int>(reward_.rows()); }
  int num_actions() const { return static_cast<int>(reward_.cols()); }
  const Eigen::MatrixXd& transition(int action) const { return transitions_[action]; }
  double transition(int s, int a, int next) const { return transitions_[a](s, next); }
  const Eigen::MatrixXd& reward() const { return reward_; }
  double discount() const { return discount_; }
  const Distribution& initial() const { return initial_; }

  // Same dynamics, different reward.
  Mdp with_reward(Eigen::MatrixXd reward) const;

 private:
  std::vector<Eigen::MatrixXd> transitions_;
  Eigen::MatrixXd reward_;
  double discount_;
  Distribution initial_;
};

// Stationary Pr(a | s) as an |S| x |A| row-stochastic matrix.
class Policy {
 public:
  explicit Policy(Eigen::MatrixXd probs);

  static Policy uniform(int states, int actions);
  static Policy deterministic(const std::vector<int>& action_of_state, int actions);

  int num_states() const { return static_cast<int>(probs_.rows()); }
  int num_actions() const { return static_cast<int>(probs_.cols()); }
  const Eigen::MatrixXd& probs() const { return probs_; }
  double operator()(int s, int a) const { return probs_(s, a); }

 private:
  Eigen::MatrixXd probs_;
};

// One policy per timestep of a finite horizon; entry t acts at step t.
using TimedPolicy = std::vector<Policy>;

TimedPolicy repeat_policy(const Policy& policy, int horizon);

struct StateAction {
  int state;
  int action;
};

inline bool operator==(const StateAction& a, const StateAction& b) {
  return a.state == b.state && a.action == b.action;
}

using Trajectory = std::vector<StateAction>;

struct ValueIterationResult {
  ValueFunction values;
  Policy greedy;
  int iterations;
};

// Discounted optimal values; requires discount < 1. The returned values have
// Bellman residual <= tolerance and the greedy policy breaks ties toward the
// lowest action index.
ValueIterationResult value_iteration(const Mdp& mdp, double tolerance = 1e-10);

// Q(s, a) = R(s, a) + gamma sum_s' T(s' | s, a) V(s')
Eigen::MatrixXd action_values(const Mdp& mdp, const ValueFunction& values);

Policy greedy_policy(const Mdp& mdp, const ValueFunction& values);

// V_pi within `tolerance` of the policy's Bellman fixed point.
ValueFunction policy_evaluation(const Mdp& mdp, const Policy& policy, double tolerance = 1e-10);

// State transition matrix under a policy: sum_a pi(a|s) T(s'|s,a).
Eigen::MatrixXd transition_under(const Mdp& mdp, const Policy& policy);

Trajectory sample_trajectory(const Mdp& mdp, const TimedPolicy& policy, Rng& rng);
Trajectory sample_trajectory(const Mdp& mdp, const TimedPolicy& policy, std::uint64_t seed);
Trajectory sample_trajectory(const Mdp& mdp, const Policy& policy, int horizon,
                             std::uint64_t seed);

// Pr(s_t = s) for t = 0..horizon-1 by forward propagation from S0.
std::vector<Eigen::VectorXd> state_marginals(const Mdp& mdp, const TimedPolicy& policy);

// Pr(s_t = s, a_t = a) for t = 0..horizon-1.
std::vector<Eigen::MatrixXd> state_action_marginals(const Mdp& mdp, const TimedPolicy& policy);

// || V^expert - V^learned ||_1, both evaluated under mdp's reward, summed
// over every state.
double ile(const Mdp& mdp, const Policy& expert, const Policy& learned,
           double tolerance = 1e-10);

}  // namespace umaxent
