#include "umaxent/uncertain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace umaxent {
namespace {

constexpr double kRowTolerance = 1e-9;

void require_consistent(const FeatureTable& features, const ObservationModel& obs,
                        const EmpiricalObservations& data) {
  require_dimension(obs.num_elements(), features.num_elements(), "channel rows vs elements");
  require_dimension(data.size(), obs.num_observations(), "empirical observations vs channel");
}

void require_observable(const PosteriorTable& table, const EmpiricalObservations& data) {
  for (Eigen::Index w = 0; w < data.size(); ++w) {
    if (data[w] > 0.0 && !table.reachable[static_cast<std::size_t>(w)]) {
      throw ImpossibleObservation(w, "model assigns zero probability");
    }
  }
}

// sum_omega P~(omega) Pr(x | omega): the data completed by the posterior.
Eigen::VectorXd completed_distribution(const PosteriorTable& table,
                                       const EmpiricalObservations& data) {
  return table.probs * data.probs();
}

}  // namespace

ObservationSpace::ObservationSpace(Eigen::Index size, std::vector<std::string> labels)
    : size_(size), labels_(std::move(labels)) {
  if (size_ < 1) throw std::invalid_argument("ObservationSpace: size must be at least 1");
  if (!labels_.empty()) {
    require_dimension(static_cast<Eigen::Index>(labels_.size()), size_, "ObservationSpace labels");
  }
}

ObservationModel::ObservationModel(Eigen::MatrixXd channel) : channel_(std::move(channel)) {
  if (channel_.rows() < 1 || channel_.cols() < 1) {
    throw std::invalid_argument("ObservationModel: empty channel");
  }
  if (!channel_.allFinite() || (channel_.array() < 0.0).any() || (channel_.array() > 1.0).any()) {
    throw std::invalid_argument("ObservationModel: entries must lie in [0,1]");
  }
  for (Eigen::Index x = 0; x < channel_.rows(); ++x) {
    const double total = channel_.row(x).sum();
    if (std::abs(total - 1.0) > kRowTolerance) {
      throw std::invalid_argument("ObservationModel: row " + std::to_string(x) + " sums to " +
                                  std::to_string(total));
    }
  }
}

ObservationModel ObservationModel::identity(Eigen::Index size) {
  return ObservationModel(Eigen::MatrixXd::Identity(size, size));
}

ObservationModel ObservationModel::uninformative(Eigen::Index num_elements,
                                                 const Distribution& row) {
  Eigen::MatrixXd channel(num_elements, row.size());
  for (Eigen::Index x = 0; x < num_elements; ++x) channel.row(x) = row.probs().transpose();
  return ObservationModel(std::move(channel));
}

ImpossibleObservation::ImpossibleObservation(Eigen::Index observation, const std::string& context)
    : std::runtime_error("impossible observation " + std::to_string(observation) +
                         (context.empty() ? "" : ": " + context)),
      observation_(observation) {}

EmNonConvergence::EmNonConvergence(int em_iteration, Weights best, DualDiagnostics inner)
    : std::runtime_error("M-step did not converge at EM iteration " + std::to_string(em_iteration) +
                         " (gradient norm " + std::to_string(inner.gradient_norm) + " after " +
                         std::to_string(inner.iterations) + " iterations)"),
      em_iteration_(em_iteration),
      best_(std::move(best)),
      inner_(inner) {}

PosteriorTable posterior(const Distribution& model, const ObservationModel& obs) {
  require_dimension(model.size(), obs.num_elements(), "model support vs channel rows");
  PosteriorTable table;
  table.probs = obs.channel().array().colwise() * model.probs().array();
  table.evidence = table.probs.colwise().sum().transpose();
  table.reachable.assign(static_cast<std::size_t>(obs.num_observations()), true);
  for (Eigen::Index w = 0; w < obs.num_observations(); ++w) {
    if (table.evidence[w] > 0.0) {
      table.probs.col(w) /= table.evidence[w];
    } else {
      table.reachable[static_cast<std::size_t>(w)] = false;
      table.probs.col(w).setZero();
    }
  }
  return table;
}

Eigen::VectorXd e_step(const Weights& weights_prev, const FeatureTable& features,
                       const ObservationModel& obs, const EmpiricalObservations& data) {
  require_consistent(features, obs, data);
  const PosteriorTable table = posterior(model_distribution(weights_prev, features), obs);
  require_observable(table, data);
  return features.values() * completed_distribution(table, data);
}

double observation_log_likelihood(const Weights& weights, const FeatureTable& features,
                                  const ObservationModel& obs, const EmpiricalObservations& data) {
  require_consistent(features, obs, data);
  const Distribution model = model_distribution(weights, features);
  const Eigen::VectorXd evidence = obs.channel().transpose() * model.probs();
  double total = 0.0;
  for (Eigen::Index w = 0; w < data.size(); ++w) {
    if (data[w] <= 0.0) continue;
    if (evidence[w] <= 0.0) return -std::numeric_limits<double>::infinity();
    total += data[w] * std::log(evidence[w]);
  }
  return total;
}

LikelihoodTerms likelihood_terms(const Weights& weights_prev, const FeatureTable& features,
                                 const ObservationModel& obs, const EmpiricalObservations& data) {
  require_consistent(features, obs, data);
  const PosteriorTable table = posterior(model_distribution(weights_prev, features), obs);
  require_observable(table, data);
  LikelihoodTerms terms{0.0, 0.0};
  for (Eigen::Index w = 0; w < data.size(); ++w) {
    if (data[w] <= 0.0) continue;
    for (Eigen::Index x = 0; x < obs.num_elements(); ++x) {
      const double post = table.probs(x, w);
      if (post <= 0.0) continue;
      terms.expected_log_obs += data[w] * post * std::log(obs(x, w));
      terms.conditional_entropy -= data[w] * post * std::log(post);
    }
  }
  return terms;
}

void EmConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("EmConfig: tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("EmConfig: max_iterations must be >= 1");
  inner.validate();
}

EmResult run_umaxent(const FeatureTable& features, const ObservationModel& obs,
                     const EmpiricalObservations& data, const EmConfig& config,
                     const std::optional<Weights>& init) {
  config.validate();
  require_consistent(features, obs, data);
  Weights current = init.value_or(Weights::Zero(features.num_features()));
  require_dimension(current.size(), features.num_features(), "initial weights length");

  EmResult result;
  result.diagnostics.initial_log_likelihood =
      observation_log_likelihood(current, features, obs, data);
  for (int it = 1; it <= config.max_iterations; ++it) {
    const Eigen::VectorXd targets = e_step(current, features, obs, data);
    const LikelihoodTerms terms = likelihood_terms(current, features, obs, data);
    MaxEntSolution m_step = solve_maxent(features, targets, config.inner, current);
    if (!m_step.diagnostics.converged) {
      throw EmNonConvergence(it, std::move(m_step.weights), m_step.diagnostics);
    }
    const double step = (m_step.weights - current).lpNorm<Eigen::Infinity>();
    current = std::move(m_step.weights);

    EmIteration record;
    record.log_likelihood = observation_log_likelihood(current, features, obs, data);
    record.q_value = -m_step.diagnostics.dual_value;
    record.conditional_entropy = terms.conditional_entropy;
    record.expected_log_obs = terms.expected_log_obs;
    record.step_norm = step;
    result.diagnostics.history.push_back(record);
    result.diagnostics.iterations = it;
    if (step <= config.tolerance) {
      result.diagnostics.converged = true;
      break;
    }
  }
  result.weights = std::move(current);
  return result;
}

Distribution ml_decoded_distribution(const ObservationModel& obs,
                                     const EmpiricalObservations& data,
                                     const std::optional<Distribution>& decode_prior) {
  require_dimension(data.size(), obs.num_observations(), "empirical observations vs channel");
  const Distribution prior = decode_prior.value_or(Distribution::uniform(obs.num_elements()));
  require_dimension(prior.size(), obs.num_elements(), "decode prior support");

  Eigen::VectorXd decoded = Eigen::VectorXd::Zero(obs.num_elements());
  for (Eigen::Index w = 0; w < data.size(); ++w) {
    if (data[w] <= 0.0) continue;
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index x = 0; x < obs.num_elements(); ++x) {
      const double score = obs(x, w) * prior[x];
      if (score > best_score) {
        best_score = score;
        best = x;
      }
    }
    if (best < 0) throw ImpossibleObservation(w, "no element can emit it under the decode prior");
    decoded[best] += data[w];
  }
  return Distribution::normalized(decoded);
}

Eigen::VectorXd ml_maxent_targets(const ObservationModel& obs, const EmpiricalObservations& data,
                                  const FeatureTable& features,
                                  const std::optional<Distribution>& decode_prior) {
  require_consistent(features, obs, data);
  return expected_features(ml_decoded_distribution(obs, data, decode_prior), features);
}

ObservationModel latent_reduction_channel(const std::vector<int>& group_of_element) {
  if (group_of_element.empty()) throw std::invalid_argument("latent_reduction_channel: empty partition");
  const int groups = *std::max_element(group_of_element.begin(), group_of_element.end()) + 1;
  Eigen::MatrixXd channel =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(group_of_element.size()), groups);
  for (std::size_t x = 0; x < group_of_element.size(); ++x) {
    if (group_of_element[x] < 0) throw std::invalid_argument("latent_reduction_channel: negative group");
    channel(static_cast<Eigen::Index>(x), group_of_element[x]) = 1.0;
  }
  return ObservationModel(std::move(channel));
}

}  // namespace umaxent
