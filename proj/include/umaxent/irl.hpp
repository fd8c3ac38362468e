#pragma once

// Inverse reinforcement learning by maximum causal entropy.
//
// The learner sees either ground-truth (state, action) trajectories or, in the
// uncertain setting, one observation symbol per step drawn through a static
// channel Pr(omega | s). Rewards are linear in per-(s, a) features and the
// induced behavior is the time-indexed soft policy of a finite horizon.

#include "umaxent/mdp.hpp"
#include "umaxent/uncertain.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace umaxent {

inline constexpr int kMissing = -1;

// One symbol per timestep, or kMissing.
using ObservationSequence = std::vector<int>;

// Pr(omega | s): rows are states.
using StepChannel = ObservationModel;

// phi_k(s, a) stored as a K x (|S| |A|) table, column s * |A| + a.
class RewardFeatures {
 public:
  RewardFeatures(Eigen::MatrixXd values, int states, int actions);

  // phi_s(s', a) = [s' == s]
  static RewardFeatures state_indicators(int states, int actions);

  int num_features() const { return static_cast<int>(values_.rows()); }
  int num_states() const { return states_; }
  int num_actions() const { return actions_; }
  const Eigen::MatrixXd& values() const { return values_; }
  auto of(int s, int a) const { return values_.col(s * actions_ + a); }

  // R(s, a) = sum_k lambda_k phi_k(s, a) as an |S| x |A| matrix.
  Eigen::MatrixXd reward(const Weights& weights) const;

  // sum_{s,a} mass(s, a) phi(s, a)
  Eigen::VectorXd expectation(const Eigen::MatrixXd& mass) const;

  Eigen::VectorXd trajectory_counts(const Trajectory& path) const;

 private:
  Eigen::MatrixXd values_;
  int states_;
  int actions_;
};

struct SoftPolicy {
  TimedPolicy policy;
  Eigen::VectorXd initial_values;  // soft value V_0(s)
};

// Undiscounted finite-horizon soft Bellman backups with V_horizon = 0:
//   Q_t(s,a) = R(s,a) + sum_s' T(s'|s,a) V_{t+1}(s'),  V_t = logsumexp_a Q_t,
//   pi_t(a|s) = exp(Q_t(s,a) - V_t(s)).
// The mdp's own reward and discount are ignored.
SoftPolicy soft_value_iteration(const Mdp& dynamics, const Eigen::MatrixXd& reward, int horizon);
SoftPolicy soft_value_iteration(const Mdp& dynamics, const RewardFeatures& features,
                                const Weights& weights, int horizon);

// sum_t sum_{s,a} D_t(s,a) phi(s,a) with D_t the occupancy from S0.
Eigen::VectorXd expected_feature_counts(const Mdp& dynamics, const RewardFeatures& features,
                                        const TimedPolicy& policy);

// sum_s S0(s) V_0(s) - lambda . targets, with gradient
// expected_feature_counts - targets.
DualPoint causal_dual(const Mdp& dynamics, const RewardFeatures& features,
                      const Eigen::VectorXd& targets, int horizon, const Weights& weights);

struct IrlConfig {
  SolverConfig solver;
  // Adds (l2 / 2) ||lambda||^2 to every dual (a Gaussian prior on the
  // weights). With finite data the empirical counts are often unreachable,
  // e.g. a state seen less often than S0 alone forces, and then only a
  // positive l2 gives the solve a finite answer.
  double l2 = 0.0;
  double em_tolerance = 1e-5;  // on ||lambda - lambda'||_inf
  int em_max_iterations = 500;
  int workers = 1;             // E-step pool over sequences

  void validate() const;
};

struct IrlDiagnostics {
  DualDiagnostics inner;        // last M-step (the only solve for non-EM fits)
  int em_iterations = 0;
  bool em_converged = false;
  int inner_nonconverged = 0;   // M-steps that stopped short of tolerance
  // Observation log-likelihood summed over sequences, before each EM
  // iteration and once after the last.
  std::vector<double> log_likelihood;
};

struct IrlResult {
  Weights weights;
  TimedPolicy policy;
  IrlDiagnostics diagnostics;
};

// Weights whose soft policy matches the given feature-count targets.
IrlResult fit_feature_counts(const Mdp& dynamics, const RewardFeatures& features,
                             const Eigen::VectorXd& targets, int horizon,
                             const SolverConfig& solver = {},
                             const std::optional<Weights>& warm_start = std::nullopt,
                             double l2 = 0.0);

// Mean per-trajectory feature counts.
Eigen::VectorXd empirical_feature_counts(const RewardFeatures& features,
                                         const std::vector<Trajectory>& trajectories);

IrlResult maxcausalent_irl(const Mdp& dynamics, const RewardFeatures& features,
                           const std::vector<Trajectory>& trajectories,
                           const IrlConfig& config = {});

struct PosteriorMarginals {
  std::vector<Eigen::MatrixXd> pairs;  // Pr(s_t, a_t | omega_{1:T}), |S| x |A| per step
  double log_likelihood;               // log Pr(omega_{1:T})
  int restarts = 0;
};

// Exact smoothing on the chain s_0 ~ S0, a_t ~ pi_t(.|s_t), s_{t+1} ~ T,
// omega_t ~ Pr(.|s_t). kMissing steps contribute a unit likelihood. The
// recursions are rescaled every step and the scale factors kept as logs.
//
// A step whose symbol has zero probability given the past throws
// ImpossibleObservation, unless `restart_on_impossible` is set: then the
// chain is cut there and restarted from the uniform prior, so the pieces are
// smoothed independently (log_likelihood then covers the pieces only).
PosteriorMarginals forward_backward(const ObservationSequence& sequence,
                                    const StepChannel& channel, const Mdp& dynamics,
                                    const TimedPolicy& policy, bool restart_on_impossible = false);

struct CausalEStep {
  Eigen::VectorXd targets;  // mean posterior feature counts
  double log_likelihood;    // summed over sequences
};

CausalEStep causal_e_step(const Mdp& dynamics, const RewardFeatures& features,
                          const StepChannel& channel,
                          const std::vector<ObservationSequence>& sequences,
                          const TimedPolicy& policy, int workers = 1,
                          bool restart_on_impossible = false);

IrlResult umaxcausalent_irl(const Mdp& dynamics, const RewardFeatures& features,
                            const StepChannel& channel,
                            const std::vector<ObservationSequence>& sequences,
                            const IrlConfig& config = {},
                            const std::optional<Weights>& init = std::nullopt);

// Forces `symbol` to decode as `state` regardless of the channel.
struct SymbolOverride {
  int symbol;
  int state;
};

// Per-symbol argmax_s Pr(omega | s), ties to the lowest state; kMissing
// passes through.
std::vector<int> ml_decode_states(const ObservationSequence& sequence, const StepChannel& channel,
                                  const std::vector<SymbolOverride>& overrides = {});

// Action at step t is argmax_a T(s_{t+1} | s_t, a) with ties to the lowest
// index; the last step, and any step whose successor is unknown, gets action 0.
// Unknown states stay kMissing.
Trajectory fill_actions(const Mdp& dynamics, const std::vector<int>& states);

std::vector<Trajectory> ml_decode_trajectories(const std::vector<ObservationSequence>& sequences,
                                               const StepChannel& channel, const Mdp& dynamics,
                                               const std::vector<SymbolOverride>& overrides = {});

// Replaces every occurrence of `drop_symbol` by kMissing.
std::vector<ObservationSequence> woerr_filter(const std::vector<ObservationSequence>& sequences,
                                              int drop_symbol);

// Feature counts over observed steps only, each sequence rescaled by
// horizon / observed-steps so that it estimates a full-horizon count.
// Sequences with no observed step are skipped; if all are, returns nullopt.
std::optional<Eigen::VectorXd> observed_step_targets(const RewardFeatures& features,
                                                     const std::vector<Trajectory>& masked);

// MaxCausalEnt on observed steps only (the drop-missing control).
IrlResult woerr_irl(const Mdp& dynamics, const RewardFeatures& features,
                    const std::vector<Trajectory>& masked, const IrlConfig& config = {});

// EM over the completions of kMissing steps; observed (state, action) entries
// are taken as ground truth and only the states enter the likelihood.
// Decoded states the dynamics cannot connect split the sequence (see
// forward_backward's restart_on_impossible).
IrlResult chiddendataem_irl(const Mdp& dynamics, const RewardFeatures& features,
                            const std::vector<Trajectory>& masked, const IrlConfig& config = {},
                            const std::optional<Weights>& init = std::nullopt);

// The occlusion view as observation sequences over an identity channel:
// symbol = observed state, kMissing where hidden.
std::vector<ObservationSequence> occlusion_sequences(const std::vector<Trajectory>& masked);

}  // namespace umaxent
