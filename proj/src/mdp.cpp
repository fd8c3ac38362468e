#include "umaxent/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace umaxent {

namespace {

void check_rows(const Eigen::MatrixXd& m, const std::string& what) {
  if ((m.array() < 0.0).any() || (m.array() > 1.0 + Mdp::kRowTolerance).any() || !m.allFinite()) {
    throw std::invalid_argument(what + ": entries must lie in [0,1]");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double total = m.row(r).sum();
    if (std::abs(total - 1.0) > Mdp::kRowTolerance) {
      throw std::invalid_argument(what + ": row " + std::to_string(r) + " sums to " +
                                  std::to_string(total));
    }
  }
}

// Stop when successive sweeps differ by at most this much; the result is then
// within `tolerance` of the fixed point (contraction bound gamma/(1-gamma)).
double sweep_threshold(double tolerance, double discount) {
  return discount == 0.0 ? tolerance : tolerance * (1.0 - discount) / (2.0 * discount);
}

constexpr int kMaxSweeps = 1'000'000;

}  // namespace

Mdp::Mdp(std::vector<Eigen::MatrixXd> transitions, Eigen::MatrixXd reward, double discount,
         Distribution initial)
    : transitions_(std::move(transitions)),
      reward_(std::move(reward)),
      discount_(discount),
      initial_(std::move(initial)) {
  if (reward_.rows() < 1 || reward_.cols() < 1) {
    throw std::invalid_argument("Mdp: needs at least one state and one action");
  }
  require_dimension(static_cast<Eigen::Index>(transitions_.size()), reward_.cols(),
                    "Mdp transition tables (one per action)");
  require_dimension(initial_.size(), reward_.rows(), "Mdp initial distribution");
  for (std::size_t a = 0; a < transitions_.size(); ++a) {
    const auto& t = transitions_[a];
    if (t.rows() != reward_.rows() || t.cols() != reward_.rows()) {
      throw DimensionError("Mdp: transition table for action " + std::to_string(a) +
                           " must be |S| x |S|");
    }
    check_rows(t, "Mdp transition for action " + std::to_string(a));
  }
  if (!reward_.allFinite()) throw std::invalid_argument("Mdp: non-finite reward");
  if (!(discount_ >= 0.0 && discount_ <= 1.0)) {
    throw std::invalid_argument("Mdp: discount must lie in [0,1]");
  }
}

Mdp Mdp::with_reward(Eigen::MatrixXd reward) const {
  return Mdp(transitions_, std::move(reward), discount_, initial_);
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) throw std::invalid_argument("Policy: empty table");
  check_rows(probs_, "Policy");
}

Policy Policy::uniform(int states, int actions) {
  return Policy(Eigen::MatrixXd::Constant(states, actions, 1.0 / actions));
}

Policy Policy::deterministic(const std::vector<int>& action_of_state, int actions) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(action_of_state.size()), actions);
  for (std::size_t s = 0; s < action_of_state.size(); ++s) {
    const int a = action_of_state[s];
    if (a < 0 || a >= actions) throw std::out_of_range("Policy::deterministic: action index");
    p(static_cast<Eigen::Index>(s), a) = 1.0;
  }
  return Policy(std::move(p));
}

TimedPolicy repeat_policy(const Policy& policy, int horizon) {
  if (horizon < 1) throw std::invalid_argument("repeat_policy: horizon must be >= 1");
  return TimedPolicy(static_cast<std::size_t>(horizon), policy);
}

Eigen::MatrixXd action_values(const Mdp& mdp, const ValueFunction& values) {
  require_dimension(values.size(), mdp.num_states(), "value function");
  Eigen::MatrixXd q = mdp.reward();
  for (int a = 0; a < mdp.num_actions(); ++a) {
    q.col(a) += mdp.discount() * (mdp.transition(a) * values);
  }
  return q;
}

Policy greedy_policy(const Mdp& mdp, const ValueFunction& values) {
  const Eigen::MatrixXd q = action_values(mdp, values);
  std::vector<int> choice(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    int best = 0;
    for (int a = 1; a < mdp.num_actions(); ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    choice[static_cast<std::size_t>(s)] = best;
  }
  return Policy::deterministic(choice, mdp.num_actions());
}

ValueIterationResult value_iteration(const Mdp& mdp, double tolerance) {
  if (!(mdp.discount() < 1.0)) {
    throw std::invalid_argument("value_iteration: discount must be < 1 for the discounted solver");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("value_iteration: tolerance must be positive");
  const double threshold = sweep_threshold(tolerance, mdp.discount());
  ValueFunction v = ValueFunction::Zero(mdp.num_states());
  int it = 0;
  while (it < kMaxSweeps) {
    ++it;
    ValueFunction next = action_values(mdp, v).rowwise().maxCoeff();
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change <= threshold) break;
  }
  Policy greedy = greedy_policy(mdp, v);
  return {std::move(v), std::move(greedy), it};
}

Eigen::MatrixXd transition_under(const Mdp& mdp, const Policy& policy) {
  require_dimension(policy.num_states(), mdp.num_states(), "policy states");
  require_dimension(policy.num_actions(), mdp.num_actions(), "policy actions");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_states());
  for (int a = 0; a < mdp.num_actions(); ++a) {
    m += policy.probs().col(a).asDiagonal() * mdp.transition(a);
  }
  return m;
}

ValueFunction policy_evaluation(const Mdp& mdp, const Policy& policy, double tolerance) {
  if (!(mdp.discount() < 1.0)) {
    throw std::invalid_argument("policy_evaluation: discount must be < 1");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("policy_evaluation: tolerance must be positive");
  const Eigen::MatrixXd m = transition_under(mdp, policy);
  const Eigen::VectorXd r = mdp.reward().cwiseProduct(policy.probs()).rowwise().sum();
  const double threshold = sweep_threshold(tolerance, mdp.discount());
  ValueFunction v = ValueFunction::Zero(mdp.num_states());
  for (int it = 0; it < kMaxSweeps; ++it) {
    ValueFunction next = r + mdp.discount() * (m * v);
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change <= threshold) break;
  }
  return v;
}

Trajectory sample_trajectory(const Mdp& mdp, const TimedPolicy& policy, Rng& rng) {
  if (policy.empty()) throw std::invalid_argument("sample_trajectory: horizon must be >= 1");
  Trajectory path;
  path.reserve(policy.size());
  int s = static_cast<int>(sample_index(mdp.initial().probs(), rng));
  for (std::size_t t = 0; t < policy.size(); ++t) {
    const Policy& pi = policy[t];
    require_dimension(pi.num_states(), mdp.num_states(), "policy states");
    const int a = static_cast<int>(sample_index(pi.probs().row(s).transpose(), rng));
    path.push_back({s, a});
    if (t + 1 < policy.size()) {
      s = static_cast<int>(sample_index(mdp.transition(a).row(s).transpose(), rng));
    }
  }
  return path;
}

Trajectory sample_trajectory(const Mdp& mdp, const TimedPolicy& policy, std::uint64_t seed) {
  Rng rng(seed);
  return sample_trajectory(mdp, policy, rng);
}

Trajectory sample_trajectory(const Mdp& mdp, const Policy& policy, int horizon,
                             std::uint64_t seed) {
  return sample_trajectory(mdp, repeat_policy(policy, horizon), seed);
}

std::vector<Eigen::VectorXd> state_marginals(const Mdp& mdp, const TimedPolicy& policy) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(policy.size());
  Eigen::VectorXd d = mdp.initial().probs();
  for (std::size_t t = 0; t < policy.size(); ++t) {
    out.push_back(d);
    if (t + 1 < policy.size()) d = transition_under(mdp, policy[t]).transpose() * d;
  }
  return out;
}

std::vector<Eigen::MatrixXd> state_action_marginals(const Mdp& mdp, const TimedPolicy& policy) {
  const auto states = state_marginals(mdp, policy);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(policy.size());
  for (std::size_t t = 0; t < policy.size(); ++t) {
    out.push_back(states[t].asDiagonal() * policy[t].probs());
  }
  return out;
}

double ile(const Mdp& mdp, const Policy& expert, const Policy& learned, double tolerance) {
  const ValueFunction ve = policy_evaluation(mdp, expert, tolerance);
  const ValueFunction vl = policy_evaluation(mdp, learned, tolerance);
  return (ve - vl).cwiseAbs().sum();
}

}  // namespace umaxent
