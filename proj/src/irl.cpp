#include "umaxent/irl.hpp"

#include "umaxent/experiment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace umaxent {

RewardFeatures::RewardFeatures(Eigen::MatrixXd values, int states, int actions)
    : values_(std::move(values)), states_(states), actions_(actions) {
  if (states_ < 1 || actions_ < 1) throw std::invalid_argument("RewardFeatures: empty MDP");
  if (values_.rows() < 1) throw std::invalid_argument("RewardFeatures: needs at least one feature");
  require_dimension(values_.cols(), static_cast<Eigen::Index>(states_) * actions_,
                    "RewardFeatures columns (|S| |A|)");
  if (!values_.allFinite()) throw std::invalid_argument("RewardFeatures: non-finite value");
}

RewardFeatures RewardFeatures::state_indicators(int states, int actions) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(states, static_cast<Eigen::Index>(states) * actions);
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) v(s, s * actions + a) = 1.0;
  }
  return RewardFeatures(std::move(v), states, actions);
}

Eigen::MatrixXd RewardFeatures::reward(const Weights& weights) const {
  require_dimension(weights.size(), num_features(), "weights length");
  const Eigen::VectorXd flat = values_.transpose() * weights;
  // flat is ordered s-major; reshape to |S| x |A|.
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), actions_, states_).transpose();
}

Eigen::VectorXd RewardFeatures::expectation(const Eigen::MatrixXd& mass) const {
  if (mass.rows() != states_ || mass.cols() != actions_) {
    throw DimensionError("RewardFeatures::expectation: mass must be |S| x |A|");
  }
  const Eigen::MatrixXd flat_rows = mass.transpose();  // column-major: a fastest, i.e. s * |A| + a
  return values_ * Eigen::Map<const Eigen::VectorXd>(flat_rows.data(), flat_rows.size());
}

Eigen::VectorXd RewardFeatures::trajectory_counts(const Trajectory& path) const {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_features());
  for (const auto& [s, a] : path) {
    if (s < 0 || s >= states_ || a < 0 || a >= actions_) {
      throw std::out_of_range("trajectory step outside the MDP");
    }
    counts += of(s, a);
  }
  return counts;
}

SoftPolicy soft_value_iteration(const Mdp& dynamics, const Eigen::MatrixXd& reward, int horizon) {
  if (horizon < 1) throw std::invalid_argument("soft_value_iteration: horizon must be >= 1");
  const int ns = dynamics.num_states();
  const int na = dynamics.num_actions();
  if (reward.rows() != ns || reward.cols() != na) {
    throw DimensionError("soft_value_iteration: reward must be |S| x |A|");
  }
  SoftPolicy out;
  out.policy.resize(static_cast<std::size_t>(horizon), Policy::uniform(ns, na));
  Eigen::VectorXd next = Eigen::VectorXd::Zero(ns);
  Eigen::MatrixXd q(ns, na);
  for (int t = horizon - 1; t >= 0; --t) {
    for (int a = 0; a < na; ++a) q.col(a) = reward.col(a) + dynamics.transition(a) * next;
    Eigen::VectorXd v(ns);
    Eigen::MatrixXd pi(ns, na);
    for (int s = 0; s < ns; ++s) {
      v[s] = log_sum_exp(q.row(s).transpose());
      pi.row(s) = (q.row(s).array() - v[s]).exp();
      pi.row(s) /= pi.row(s).sum();
    }
    out.policy[static_cast<std::size_t>(t)] = Policy(std::move(pi));
    next = std::move(v);
  }
  out.initial_values = std::move(next);
  return out;
}

SoftPolicy soft_value_iteration(const Mdp& dynamics, const RewardFeatures& features,
                                const Weights& weights, int horizon) {
  require_dimension(features.num_states(), dynamics.num_states(), "feature states");
  require_dimension(features.num_actions(), dynamics.num_actions(), "feature actions");
  if (!weights.allFinite()) throw std::invalid_argument("soft_value_iteration: non-finite weights");
  return soft_value_iteration(dynamics, features.reward(weights), horizon);
}

Eigen::VectorXd expected_feature_counts(const Mdp& dynamics, const RewardFeatures& features,
                                        const TimedPolicy& policy) {
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dynamics.num_states(), dynamics.num_actions());
  for (const auto& d : state_action_marginals(dynamics, policy)) total += d;
  return features.expectation(total);
}

DualPoint causal_dual(const Mdp& dynamics, const RewardFeatures& features,
                      const Eigen::VectorXd& targets, int horizon, const Weights& weights) {
  const SoftPolicy soft = soft_value_iteration(dynamics, features, weights, horizon);
  const double value = dynamics.initial().probs().dot(soft.initial_values) - weights.dot(targets);
  return {value, expected_feature_counts(dynamics, features, soft.policy) - targets};
}

void IrlConfig::validate() const {
  solver.validate();
  if (!(em_tolerance > 0.0)) throw std::invalid_argument("IrlConfig: em_tolerance must be positive");
  if (em_max_iterations < 1) throw std::invalid_argument("IrlConfig: em_max_iterations must be >= 1");
  if (workers < 1) throw std::invalid_argument("IrlConfig: workers must be >= 1");
  if (!(l2 >= 0.0)) throw std::invalid_argument("IrlConfig: l2 must be >= 0");
}

IrlResult fit_feature_counts(const Mdp& dynamics, const RewardFeatures& features,
                             const Eigen::VectorXd& targets, int horizon,
                             const SolverConfig& solver, const std::optional<Weights>& warm_start,
                             double l2) {
  if (!(l2 >= 0.0)) throw std::invalid_argument("fit_feature_counts: l2 must be >= 0");
  require_dimension(targets.size(), features.num_features(), "feature-count targets");
  if (!targets.allFinite()) throw std::invalid_argument("fit_feature_counts: non-finite target");
  Weights start = warm_start.value_or(Weights::Zero(features.num_features()));
  require_dimension(start.size(), features.num_features(), "warm start length");

  auto oracle = [&](const Eigen::VectorXd& w) {
    DualPoint p = causal_dual(dynamics, features, targets, horizon, w);
    if (l2 > 0.0) {
      p.value += 0.5 * l2 * w.squaredNorm();
      p.gradient += l2 * w;
    }
    return p;
  };
  DescentResult descent = minimize_dual(oracle, std::move(start), solver);

  IrlResult result;
  result.policy = soft_value_iteration(dynamics, features, descent.point, horizon).policy;
  result.weights = std::move(descent.point);
  result.diagnostics.inner = descent.diagnostics;
  if (!descent.diagnostics.converged) result.diagnostics.inner_nonconverged = 1;
  return result;
}

namespace {

int common_horizon(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("IRL: no trajectories");
  const std::size_t h = trajectories.front().size();
  if (h == 0) throw std::invalid_argument("IRL: empty trajectory");
  for (const auto& path : trajectories) {
    if (path.size() != h) throw DimensionError("IRL: trajectories differ in horizon");
  }
  return static_cast<int>(h);
}

int common_horizon(const std::vector<ObservationSequence>& sequences) {
  if (sequences.empty()) throw std::invalid_argument("IRL: no observation sequences");
  const std::size_t h = sequences.front().size();
  if (h == 0) throw std::invalid_argument("IRL: empty observation sequence");
  for (const auto& seq : sequences) {
    if (seq.size() != h) throw DimensionError("IRL: sequences differ in horizon");
  }
  return static_cast<int>(h);
}

}  // namespace

Eigen::VectorXd empirical_feature_counts(const RewardFeatures& features,
                                         const std::vector<Trajectory>& trajectories) {
  common_horizon(trajectories);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(features.num_features());
  for (const auto& path : trajectories) total += features.trajectory_counts(path);
  return total / static_cast<double>(trajectories.size());
}

IrlResult maxcausalent_irl(const Mdp& dynamics, const RewardFeatures& features,
                           const std::vector<Trajectory>& trajectories, const IrlConfig& config) {
  config.validate();
  const int horizon = common_horizon(trajectories);
  return fit_feature_counts(dynamics, features, empirical_feature_counts(features, trajectories),
                            horizon, config.solver, std::nullopt, config.l2);
}

PosteriorMarginals forward_backward(const ObservationSequence& sequence,
                                    const StepChannel& channel, const Mdp& dynamics,
                                    const TimedPolicy& policy, bool restart_on_impossible) {
  const std::size_t horizon = sequence.size();
  if (horizon == 0) throw std::invalid_argument("forward_backward: empty sequence");
  require_dimension(static_cast<Eigen::Index>(policy.size()), static_cast<Eigen::Index>(horizon),
                    "policy horizon vs sequence length");
  require_dimension(channel.num_elements(), dynamics.num_states(), "channel states");
  const int ns = dynamics.num_states();
  const int na = dynamics.num_actions();

  std::vector<Eigen::VectorXd> evidence(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const int w = sequence[t];
    if (w == kMissing) {
      evidence[t] = Eigen::VectorXd::Ones(ns);
    } else if (w < 0 || w >= channel.num_observations()) {
      throw std::out_of_range("forward_backward: symbol " + std::to_string(w) + " at step " +
                              std::to_string(t));
    } else {
      evidence[t] = channel.channel().col(w);
    }
  }

  std::vector<Eigen::MatrixXd> step(horizon > 1 ? horizon - 1 : 0);
  for (std::size_t t = 0; t + 1 < horizon; ++t) step[t] = transition_under(dynamics, policy[t]);

  // alpha[t](s) = Pr(s_t = s | omega_{0..t}); scale[t] = Pr(omega_t | omega_{0..t-1}).
  std::vector<Eigen::VectorXd> alpha(horizon);
  std::vector<double> scale(horizon);
  std::vector<bool> cut(horizon, false);  // chain restarted at this step
  PosteriorMarginals out;
  double log_likelihood = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    Eigen::VectorXd a = t == 0 ? Eigen::VectorXd(dynamics.initial().probs())
                               : Eigen::VectorXd(step[t - 1].transpose() * alpha[t - 1]);
    a = a.cwiseProduct(evidence[t]);
    double c = a.sum();
    if (!(c > 0.0) && restart_on_impossible) {
      a = evidence[t] / static_cast<double>(ns);
      c = a.sum();
      cut[t] = true;
      ++out.restarts;
    }
    if (!(c > 0.0)) {
      throw ImpossibleObservation(sequence[t], "zero likelihood at step " + std::to_string(t));
    }
    alpha[t] = a / c;
    scale[t] = c;
    log_likelihood += std::log(c);
  }

  // beta[t](s) = Pr(omega_{t+1..} | s_t = s) / prod_{u > t} scale[u].
  std::vector<Eigen::VectorXd> beta(horizon);
  beta[horizon - 1] = Eigen::VectorXd::Ones(ns);
  for (std::size_t t = horizon - 1; t-- > 0;) {
    beta[t] = cut[t + 1] ? Eigen::VectorXd(Eigen::VectorXd::Ones(ns))
                         : Eigen::VectorXd(step[t] * evidence[t + 1].cwiseProduct(beta[t + 1]) /
                                           scale[t + 1]);
  }

  out.log_likelihood = log_likelihood;
  out.pairs.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    Eigen::MatrixXd pair = alpha[t].asDiagonal() * policy[t].probs();
    if (t + 1 < horizon && !cut[t + 1]) {
      const Eigen::VectorXd ahead = evidence[t + 1].cwiseProduct(beta[t + 1]) / scale[t + 1];
      for (int a = 0; a < na; ++a) pair.col(a).array() *= (dynamics.transition(a) * ahead).array();
    }
    pair /= pair.sum();
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

CausalEStep causal_e_step(const Mdp& dynamics, const RewardFeatures& features,
                          const StepChannel& channel,
                          const std::vector<ObservationSequence>& sequences,
                          const TimedPolicy& policy, int workers, bool restart_on_impossible) {
  if (sequences.empty()) throw std::invalid_argument("causal_e_step: no sequences");
  struct Part {
    Eigen::MatrixXd mass;
    double log_likelihood;
  };
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(dynamics.num_states(), dynamics.num_actions());
  double log_likelihood = 0.0;
  run_ordered<Part>(
      sequences.size(), workers,
      [&](std::size_t i) {
        PosteriorMarginals post;
        try {
          post = forward_backward(sequences[i], channel, dynamics, policy, restart_on_impossible);
        } catch (const ImpossibleObservation& e) {
          throw ImpossibleObservation(e.observation(),
                                      "sequence " + std::to_string(i) + ": " + e.what());
        }
        Part part{Eigen::MatrixXd::Zero(dynamics.num_states(), dynamics.num_actions()),
                  post.log_likelihood};
        for (const auto& p : post.pairs) part.mass += p;
        return part;
      },
      [&](std::size_t, Part& part) {
        mass += part.mass;
        log_likelihood += part.log_likelihood;
      });
  return {features.expectation(mass) / static_cast<double>(sequences.size()), log_likelihood};
}

namespace {

IrlResult causal_em(const Mdp& dynamics, const RewardFeatures& features,
                    const StepChannel& channel, const std::vector<ObservationSequence>& sequences,
                    const IrlConfig& config, const std::optional<Weights>& init, bool restart) {
  config.validate();
  const int horizon = common_horizon(sequences);
  Weights current = init.value_or(Weights::Zero(features.num_features()));
  require_dimension(current.size(), features.num_features(), "initial weights length");

  IrlResult result;
  TimedPolicy policy = soft_value_iteration(dynamics, features, current, horizon).policy;
  for (int it = 1; it <= config.em_max_iterations; ++it) {
    const CausalEStep e =
        causal_e_step(dynamics, features, channel, sequences, policy, config.workers, restart);
    result.diagnostics.log_likelihood.push_back(e.log_likelihood);
    IrlResult m =
        fit_feature_counts(dynamics, features, e.targets, horizon, config.solver, current, config.l2);
    result.diagnostics.inner = m.diagnostics.inner;
    result.diagnostics.inner_nonconverged += m.diagnostics.inner_nonconverged;
    result.diagnostics.em_iterations = it;
    const double step = (m.weights - current).lpNorm<Eigen::Infinity>();
    current = std::move(m.weights);
    policy = std::move(m.policy);
    if (step <= config.em_tolerance) {
      result.diagnostics.em_converged = true;
      break;
    }
  }
  result.diagnostics.log_likelihood.push_back(
      causal_e_step(dynamics, features, channel, sequences, policy, config.workers, restart)
          .log_likelihood);
  result.weights = std::move(current);
  result.policy = std::move(policy);
  return result;
}

}  // namespace

IrlResult umaxcausalent_irl(const Mdp& dynamics, const RewardFeatures& features,
                            const StepChannel& channel,
                            const std::vector<ObservationSequence>& sequences,
                            const IrlConfig& config, const std::optional<Weights>& init) {
  return causal_em(dynamics, features, channel, sequences, config, init, false);
}

std::vector<int> ml_decode_states(const ObservationSequence& sequence, const StepChannel& channel,
                                  const std::vector<SymbolOverride>& overrides) {
  std::vector<int> states;
  states.reserve(sequence.size());
  for (const int w : sequence) {
    if (w == kMissing) {
      states.push_back(kMissing);
      continue;
    }
    if (w < 0 || w >= channel.num_observations()) {
      throw std::out_of_range("ml_decode_states: symbol " + std::to_string(w));
    }
    int decoded = -1;
    for (const auto& o : overrides) {
      if (o.symbol == w) decoded = o.state;
    }
    if (decoded < 0) {
      Eigen::Index best = 0;
      channel.channel().col(w).maxCoeff(&best);  // first maximum: lowest state on ties
      decoded = static_cast<int>(best);
    }
    states.push_back(decoded);
  }
  return states;
}

Trajectory fill_actions(const Mdp& dynamics, const std::vector<int>& states) {
  Trajectory path;
  path.reserve(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    const int s = states[t];
    if (s == kMissing) {
      path.push_back({kMissing, kMissing});
      continue;
    }
    if (s < 0 || s >= dynamics.num_states()) throw std::out_of_range("fill_actions: state index");
    int action = 0;
    if (t + 1 < states.size() && states[t + 1] != kMissing) {
      const int next = states[t + 1];
      for (int a = 1; a < dynamics.num_actions(); ++a) {
        if (dynamics.transition(s, a, next) > dynamics.transition(s, action, next)) action = a;
      }
    }
    path.push_back({s, action});
  }
  return path;
}

std::vector<Trajectory> ml_decode_trajectories(const std::vector<ObservationSequence>& sequences,
                                               const StepChannel& channel, const Mdp& dynamics,
                                               const std::vector<SymbolOverride>& overrides) {
  std::vector<Trajectory> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    out.push_back(fill_actions(dynamics, ml_decode_states(seq, channel, overrides)));
  }
  return out;
}

std::vector<ObservationSequence> woerr_filter(const std::vector<ObservationSequence>& sequences,
                                              int drop_symbol) {
  std::vector<ObservationSequence> out = sequences;
  for (auto& seq : out) {
    for (int& w : seq) {
      if (w == drop_symbol) w = kMissing;
    }
  }
  return out;
}

std::optional<Eigen::VectorXd> observed_step_targets(const RewardFeatures& features,
                                                     const std::vector<Trajectory>& masked) {
  const int horizon = common_horizon(masked);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(features.num_features());
  int used = 0;
  for (const auto& path : masked) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(features.num_features());
    int observed = 0;
    for (const auto& [s, a] : path) {
      if (s == kMissing) continue;
      counts += features.of(s, a);
      ++observed;
    }
    if (observed == 0) continue;
    total += counts * (static_cast<double>(horizon) / observed);
    ++used;
  }
  if (used == 0) return std::nullopt;
  return Eigen::VectorXd(total / used);
}

IrlResult woerr_irl(const Mdp& dynamics, const RewardFeatures& features,
                    const std::vector<Trajectory>& masked, const IrlConfig& config) {
  config.validate();
  const int horizon = common_horizon(masked);
  const auto targets = observed_step_targets(features, masked);
  if (!targets) {
    // Nothing observed: the uninformed starting model.
    const Weights zero = Weights::Zero(features.num_features());
    return {zero, soft_value_iteration(dynamics, features, zero, horizon).policy, {}};
  }
  return fit_feature_counts(dynamics, features, *targets, horizon, config.solver, std::nullopt,
                            config.l2);
}

std::vector<ObservationSequence> occlusion_sequences(const std::vector<Trajectory>& masked) {
  std::vector<ObservationSequence> out;
  out.reserve(masked.size());
  for (const auto& path : masked) {
    ObservationSequence seq;
    seq.reserve(path.size());
    for (const auto& step : path) seq.push_back(step.state);
    out.push_back(std::move(seq));
  }
  return out;
}

IrlResult chiddendataem_irl(const Mdp& dynamics, const RewardFeatures& features,
                            const std::vector<Trajectory>& masked, const IrlConfig& config,
                            const std::optional<Weights>& init) {
  return causal_em(dynamics, features, StepChannel::identity(dynamics.num_states()),
                   occlusion_sequences(masked), config, init, true);
}

}  // namespace umaxent
