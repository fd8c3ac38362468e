#pragma once

// Cross-module property checks on seeded random instances. Each check reports
// the worst deviation seen against its tolerance; the CLI's "properties"
// command and the acceptance runner both call these.

#include <cstdint>
#include <string>
#include <vector>

namespace umaxent {

struct PropertyOptions {
  std::uint64_t seed = 1;
  // Test hook: added to every analytic dual-gradient component inside the
  // gradient check, which must then fail.
  double gradient_perturbation = 0.0;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  int instances = 0;
  double worst = 0.0;      // largest deviation observed
  double tolerance = 0.0;
  std::string detail;
};

// Analytic dual gradient vs central differences (h = 1e-5); |X| <= 20, K <= 8.
PropertyResult check_dual_gradient(const PropertyOptions& options, int instances = 100);

// Targets generated by a known weight vector; solved model within TV 1e-6.
PropertyResult check_maxent_inversion(const PropertyOptions& options, int instances = 50);

// uMaxEnt with the identity channel vs plain MaxEnt on the same data.
PropertyResult check_identity_reduction(const PropertyOptions& options, int instances = 50);

// E-step under a partition channel vs the latent-variable completion sum.
PropertyResult check_latent_reduction(const PropertyOptions& options, int instances = 50);

// Observation log-likelihood never drops across EM iterations (slack 1e-8).
PropertyResult check_em_monotone(const PropertyOptions& options, int instances = 50);

// At EM termination the model's feature expectations match its own E-step
// targets within 1e-5.
PropertyResult check_em_constraints(const PropertyOptions& options, int instances = 50);

// With exact Pr(omega) from a log-linear truth, the truth satisfies the
// uncertain constraints (no solving involved).
PropertyResult check_infinite_data(const PropertyOptions& options, int instances = 100);

// Smoothing marginals and likelihood vs enumeration of all paths (horizon
// <= 4, |S| <= 4).
PropertyResult check_forward_backward(const PropertyOptions& options, int instances = 200);

// Expected feature counts vs enumeration of all paths.
PropertyResult check_feature_counts(const PropertyOptions& options, int instances = 100);

// Every soft policy row sums to 1 at every step.
PropertyResult check_soft_policy_rows(const PropertyOptions& options, int instances = 100);

// Occlusion E-step (identity channel, hidden steps) vs completion by
// enumeration.
PropertyResult check_occlusion_e_step(const PropertyOptions& options, int instances = 50);

// Discounted greedy policies are Bellman-optimal; policy evaluation matches a
// direct linear solve.
PropertyResult check_bellman(const PropertyOptions& options, int instances = 50);

struct IrlSelfConsistency {
  PropertyResult counts;  // learned vs empirical feature counts, tol 1e-3
  PropertyResult ile;     // learned vs generating reward, tol 0.05
};

// MaxCausalEnt on `trajectories` samples from a known soft policy on a
// 6-state, 2-action MDP.
IrlSelfConsistency check_irl_self_consistency(const PropertyOptions& options,
                                              int trajectories = 10000);

std::vector<PropertyResult> run_property_suite(const PropertyOptions& options);

std::string describe(const PropertyResult& result);

}  // namespace umaxent
