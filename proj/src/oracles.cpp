#include "umaxent/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace umaxent::oracle {

double naive_log_partition(const Weights& weights, const FeatureTable& features) {
  long double z = 0.0L;
  for (Eigen::Index x = 0; x < features.num_elements(); ++x) {
    long double score = 0.0L;
    for (Eigen::Index k = 0; k < features.num_features(); ++k) {
      score += static_cast<long double>(weights[k]) * features(k, x);
    }
    z += std::exp(score);
  }
  return static_cast<double>(std::log(z));
}

Eigen::VectorXd naive_expectation(const Distribution& dist, const FeatureTable& features) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.num_features());
  for (Eigen::Index k = 0; k < features.num_features(); ++k) {
    for (Eigen::Index x = 0; x < features.num_elements(); ++x) out[k] += dist[x] * features(k, x);
  }
  return out;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd joint_posterior(const Distribution& model, const ObservationModel& obs) {
  const Eigen::Index nx = obs.num_elements(), nw = obs.num_observations();
  Eigen::MatrixXd joint(nx, nw);
  for (Eigen::Index x = 0; x < nx; ++x) {
    for (Eigen::Index w = 0; w < nw; ++w) joint(x, w) = model[x] * obs(x, w);
  }
  for (Eigen::Index w = 0; w < nw; ++w) {
    double column = 0.0;
    for (Eigen::Index x = 0; x < nx; ++x) column += joint(x, w);
    for (Eigen::Index x = 0; x < nx; ++x) joint(x, w) = column > 0.0 ? joint(x, w) / column : 0.0;
  }
  return joint;
}

Eigen::VectorXd triple_loop_e_step(const Weights& weights, const FeatureTable& features,
                                   const ObservationModel& obs, const Distribution& data) {
  // Unnormalized model, normalized explicitly.
  const Eigen::Index nx = features.num_elements();
  std::vector<double> p(static_cast<std::size_t>(nx));
  double z = 0.0;
  for (Eigen::Index x = 0; x < nx; ++x) {
    double score = 0.0;
    for (Eigen::Index k = 0; k < features.num_features(); ++k) score += weights[k] * features(k, x);
    p[static_cast<std::size_t>(x)] = std::exp(score);
    z += p[static_cast<std::size_t>(x)];
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.num_features());
  for (Eigen::Index w = 0; w < obs.num_observations(); ++w) {
    if (data[w] == 0.0) continue;
    double evidence = 0.0;
    for (Eigen::Index x = 0; x < nx; ++x) evidence += p[static_cast<std::size_t>(x)] / z * obs(x, w);
    for (Eigen::Index x = 0; x < nx; ++x) {
      const double post = p[static_cast<std::size_t>(x)] / z * obs(x, w) / evidence;
      for (Eigen::Index k = 0; k < features.num_features(); ++k) {
        out[k] += data[w] * post * features(k, x);
      }
    }
  }
  return out;
}

Eigen::VectorXd latent_completion(const Weights& weights, const FeatureTable& features,
                                  const std::vector<int>& group_of_element,
                                  const Distribution& group_frequencies) {
  const Eigen::Index nx = features.num_elements();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.num_features());
  for (Eigen::Index y = 0; y < group_frequencies.size(); ++y) {
    double z_y = 0.0;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(features.num_features());
    for (Eigen::Index x = 0; x < nx; ++x) {
      if (group_of_element[static_cast<std::size_t>(x)] != y) continue;
      double score = 0.0;
      for (Eigen::Index k = 0; k < features.num_features(); ++k) score += weights[k] * features(k, x);
      const double u = std::exp(score);
      z_y += u;
      for (Eigen::Index k = 0; k < features.num_features(); ++k) acc[k] += u * features(k, x);
    }
    if (group_frequencies[y] > 0.0) out += group_frequencies[y] * acc / z_y;
  }
  return out;
}

double naive_kld(const Distribution& p, const Distribution& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * std::log(p[i] / q[i]);
  }
  return total;
}

std::vector<WeightedPath> enumerate_paths(const Mdp& dynamics, const TimedPolicy& policy) {
  const int ns = dynamics.num_states(), na = dynamics.num_actions();
  std::vector<WeightedPath> frontier;
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      frontier.push_back({{{s, a}}, dynamics.initial()[s] * policy[0](s, a)});
    }
  }
  for (std::size_t t = 1; t < policy.size(); ++t) {
    std::vector<WeightedPath> next;
    for (const auto& wp : frontier) {
      const StateAction last = wp.path.back();
      for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
          WeightedPath extended = wp;
          extended.path.push_back({s, a});
          extended.probability *= dynamics.transition(last.state, last.action, s) * policy[t](s, a);
          next.push_back(std::move(extended));
        }
      }
    }
    frontier = std::move(next);
  }
  return frontier;
}

Eigen::VectorXd enumerated_feature_counts(const Mdp& dynamics, const RewardFeatures& features,
                                          const TimedPolicy& policy) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.num_features());
  for (const auto& wp : enumerate_paths(dynamics, policy)) {
    for (const auto& [s, a] : wp.path) out += wp.probability * features.of(s, a);
  }
  return out;
}

EnumeratedPosterior enumerated_posterior(const ObservationSequence& sequence,
                                         const StepChannel& channel, const Mdp& dynamics,
                                         const TimedPolicy& policy) {
  const std::size_t horizon = sequence.size();
  EnumeratedPosterior out;
  out.pairs.assign(horizon, Eigen::MatrixXd::Zero(dynamics.num_states(), dynamics.num_actions()));
  double total = 0.0;
  for (const auto& wp : enumerate_paths(dynamics, policy)) {
    double joint = wp.probability;
    for (std::size_t t = 0; t < horizon; ++t) {
      if (sequence[t] != kMissing) joint *= channel(wp.path[t].state, sequence[t]);
    }
    total += joint;
    for (std::size_t t = 0; t < horizon; ++t) out.pairs[t](wp.path[t].state, wp.path[t].action) += joint;
  }
  if (!(total > 0.0)) throw std::domain_error("enumerated_posterior: zero-probability sequence");
  for (auto& p : out.pairs) p /= total;
  out.log_likelihood = std::log(total);
  return out;
}

ValueFunction linear_policy_values(const Mdp& mdp, const Policy& policy) {
  const int ns = mdp.num_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ns, ns);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      r[s] += policy(s, a) * mdp.reward()(s, a);
      for (int n = 0; n < ns; ++n) p(s, n) += policy(s, a) * mdp.transition(s, a, n);
    }
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(ns, ns) - mdp.discount() * p;
  return system.fullPivLu().solve(r);
}

}  // namespace umaxent::oracle
