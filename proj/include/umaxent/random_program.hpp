#pragma once

// Randomly generated uncertain maximum-entropy programs and the
// KLD-versus-data harness comparing uMaxEnt, ML MaxEnt and the
// exact-observation control.

#include "umaxent/experiment.hpp"
#include "umaxent/maxent.hpp"
#include "umaxent/uncertain.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace umaxent {

struct IntRange {
  int lo;
  int hi;
};

struct RealRange {
  double lo;
  double hi;
};

struct RandomProgramSpec {
  IntRange elements{4, 12};
  std::optional<IntRange> observations;  // unset: |Omega| = |X|
  IntRange features{2, 6};
  RealRange feature_values{0.0, 1.0};
  RealRange weights{-3.0, 3.0};
  // Half-width of a per-element log-potential added to the truth that no
  // combination of the features can express; 0 keeps the truth inside the
  // learner's log-linear family.
  double hidden_potential = 0.5;
  // Channel rows are Dirichlet(base_alpha, ..., base_alpha + concentration,
  // ...), the boosted entry sitting on the row's "signal" symbol. Signal
  // symbols form a random injection when |Omega| >= |X|.
  double base_alpha = 1.0;
  double concentration = 4.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedProgram {
  ElementSpace elements;
  ObservationSpace observations;
  FeatureTable features;
  Weights true_weights;
  Eigen::VectorXd hidden_potential;  // per element; zero when in-family
  Distribution true_distribution;
  ObservationModel channel;
  Distribution true_observations;
  std::vector<Eigen::Index> signal_of_element;
};

// Deterministic in spec.seed.
GeneratedProgram generate_program(const RandomProgramSpec& spec);

// Normalized histogram of n i.i.d. draws from the program's true Pr(omega).
EmpiricalObservations sample_observations(const GeneratedProgram& program, int n,
                                          std::uint64_t seed);

class AbsoluteContinuityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// KL(p || q) in nats.
double kld(const Distribution& p, const Distribution& q);

// KL(p || model) with the model's log-probabilities taken from its scores, so
// a model probability that underflows to zero still gives a finite value.
double kld_to_model(const Distribution& p, const Weights& weights, const FeatureTable& features);

namespace figure1 {
inline constexpr const char* kUMaxEnt = "uMaxEnt";
inline constexpr const char* kMlMaxEnt = "MLMaxEnt";
inline constexpr const char* kInfObs = "InfObs";
}  // namespace figure1

struct Figure1Config {
  RandomProgramSpec spec;  // spec.seed is the master seed
  std::vector<int> grid{10, 100, 1000, 10000, 100000};
  int trials = 100;
  int workers = 1;
  EmConfig em;
  SolverConfig solver;  // for the ML MaxEnt baseline
};

struct Figure1Row {
  std::string algorithm;
  int n_observations = 0;
  int trial = 0;
  double kld = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
};

struct CurvePoint {
  int n_observations = 0;
  std::string algorithm;
  double mean_kld = 0.0;
  double stddev_kld = 0.0;
  int trials = 0;
  int failures = 0;
};

using Figure1Sink = std::function<void(const Figure1Row&)>;

// Runs every trial (fanned out over config.workers), streams per-trial rows
// to `sink` in (trial, N, algorithm) order and returns one point per
// (N, algorithm). Failed trials are reported through the sink and counted,
// never averaged.
std::vector<CurvePoint> run_figure1(const Figure1Config& config, const Figure1Sink& sink = {});

std::string figure1_csv_header();
std::string figure1_csv_row(const Figure1Row& row);
std::string figure1_summary_header();
std::string figure1_summary_row(const CurvePoint& point);

// Qualitative ordering at the largest N: uMaxEnt within `inf_factor` of the
// exact-data control, ML MaxEnt at least `ml_factor` worse than uMaxEnt, and
// uMaxEnt non-increasing in N up to one standard error.
Verdict figure1_verdict(const std::vector<CurvePoint>& points, double inf_factor = 1.5,
                        double ml_factor = 3.0);

}  // namespace umaxent
