#include "umaxent/irl.hpp"
#include "umaxent/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace umaxent;

namespace {

Eigen::MatrixXd random_rows(Rng& rng, int rows, int cols, double alpha = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    m.row(i) = sample_dirichlet(Eigen::VectorXd::Constant(cols, alpha), rng).transpose();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

Mdp random_dynamics(Rng& rng, int states, int actions) {
  std::vector<Eigen::MatrixXd> t;
  for (int a = 0; a < actions; ++a) t.push_back(random_rows(rng, states, states, 0.5));
  return Mdp(t, Eigen::MatrixXd::Zero(states, actions), 0.9,
             Distribution::normalized(sample_dirichlet(Eigen::VectorXd::Ones(states), rng)));
}

// One random successor per (s, a) and a point-mass start.
Mdp deterministic_dynamics(Rng& rng, int states, int actions) {
  std::vector<Eigen::MatrixXd> t;
  for (int a = 0; a < actions; ++a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(states, states);
    for (int s = 0; s < states; ++s) m(s, uniform_int(rng, 0, states - 1)) = 1.0;
    t.push_back(m);
  }
  return Mdp(t, Eigen::MatrixXd::Zero(states, actions), 0.9,
             Distribution::point_mass(states, uniform_int(rng, 0, states - 1)));
}

RewardFeatures random_features(Rng& rng, int k, int states, int actions) {
  Eigen::MatrixXd v(k, states * actions);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < states * actions; ++j) v(i, j) = uniform01(rng);
  }
  return RewardFeatures(v, states, actions);
}

Weights random_weights(Rng& rng, int k, double scale) {
  Weights w(k);
  for (int i = 0; i < k; ++i) w[i] = uniform_real(rng, -scale, scale);
  return w;
}

// Action 0 stays, action 1 switches.
Mdp stay_or_switch(const Distribution& initial) {
  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  return Mdp({Eigen::Matrix2d::Identity(), swap}, Eigen::MatrixXd::Zero(2, 2), 0.9, initial);
}

ObservationSequence observe(const Trajectory& path, const StepChannel& channel, Rng& rng) {
  ObservationSequence seq;
  for (const auto& step : path) {
    seq.push_back(static_cast<int>(sample_index(channel.channel().row(step.state).transpose(), rng)));
  }
  return seq;
}

double max_policy_gap(const TimedPolicy& a, const TimedPolicy& b) {
  double gap = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    gap = std::max(gap, (a[t].probs() - b[t].probs()).cwiseAbs().maxCoeff());
  }
  return gap;
}

}  // namespace

TEST_CASE("reward features") {
  const auto f = RewardFeatures::state_indicators(3, 2);
  CHECK(f.num_features() == 3);
  CHECK(f.of(2, 1)[2] == 1.0);
  CHECK(f.of(2, 1).sum() == 1.0);
  const Eigen::MatrixXd r = f.reward(Eigen::Vector3d(1.0, 2.0, 3.0));
  CHECK(r(1, 0) == 2.0);
  CHECK(r(1, 1) == 2.0);
  const Trajectory path{{0, 0}, {2, 1}, {2, 0}};
  CHECK(f.trajectory_counts(path) == Eigen::Vector3d(1.0, 0.0, 2.0));
  CHECK_THROWS_AS(RewardFeatures(Eigen::MatrixXd::Zero(2, 5), 3, 2), DimensionError);
}

TEST_CASE("soft_value_iteration") {
  SUBCASE("zero reward gives uniform policies") {
    Rng rng(1);
    const Mdp m = random_dynamics(rng, 4, 3);
    const auto soft = soft_value_iteration(m, Eigen::MatrixXd::Zero(4, 3), 5);
    REQUIRE(soft.policy.size() == 5);
    for (const auto& p : soft.policy) CHECK((p.probs().array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-12);
    CHECK(soft.initial_values[0] == doctest::Approx(5.0 * std::log(3.0)));
  }
  SUBCASE("two states, two steps, solved by hand") {
    // R = 1 in state 1. V_1 = (log 2, 1 + log 2); at step 0 the better
    // action has Q one higher, so it gets probability e / (1 + e).
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
    r.row(1).setOnes();
    const auto soft = soft_value_iteration(stay_or_switch(Distribution::uniform(2)), r, 2);
    const double e = std::exp(1.0);
    CHECK(soft.policy[0](0, 1) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
    CHECK(soft.policy[0](1, 0) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
    CHECK(soft.policy[1](0, 0) == doctest::Approx(0.5));
    CHECK(soft.initial_values[0] == doctest::Approx(std::log(2.0) + std::log(1.0 + e)).epsilon(1e-12));
    CHECK(soft.initial_values[1] == doctest::Approx(1.0 + std::log(2.0) + std::log(1.0 + e)).epsilon(1e-12));
  }
  SUBCASE("scaling the reward up approaches the hard finite-horizon argmax") {
    Rng rng(2);
    const int horizon = 4;
    for (int i = 0; i < 10; ++i) {
      const Mdp m = random_dynamics(rng, 5, 3);
      Eigen::MatrixXd r(5, 3);
      for (int s = 0; s < 5; ++s) {
        for (int a = 0; a < 3; ++a) r(s, a) = uniform01(rng);
      }
      const auto soft = soft_value_iteration(m, 1000.0 * r, horizon);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
      for (int t = horizon - 1; t >= 0; --t) {
        Eigen::MatrixXd q = r;
        for (int a = 0; a < 3; ++a) q.col(a) += m.transition(a) * v;
        for (int s = 0; s < 5; ++s) {
          Eigen::Index best = 0;
          v[s] = q.row(s).maxCoeff(&best);
          // Soft values differ from hard ones by at most horizon * log|A| / 1000,
          // so only a clear winner must dominate.
          Eigen::RowVectorXd others = q.row(s);
          others[best] = -1e300;
          if (v[s] - others.maxCoeff() < 0.02) continue;
          CHECK(soft.policy[static_cast<std::size_t>(t)](s, static_cast<int>(best)) >= 0.99);
        }
      }
    }
  }
  SUBCASE("rows sum to one under extreme rewards") {
    Rng rng(3);
    const Mdp m = random_dynamics(rng, 4, 2);
    Eigen::MatrixXd r(4, 2);
    r << 300, -300, 0, 1e-9, -250, 250, 40, 40;
    for (const auto& p : soft_value_iteration(m, r, 6).policy) {
      CHECK((p.probs().rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("expected_feature_counts") {
  Rng rng(4);
  SUBCASE("horizon one is the initial expectation") {
    const Mdp m = random_dynamics(rng, 3, 2);
    const auto f = random_features(rng, 2, 3, 2);
    const Policy pi(random_rows(rng, 3, 2));
    Eigen::VectorXd manual = Eigen::VectorXd::Zero(2);
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) manual += m.initial().probs()[s] * pi(s, a) * f.of(s, a);
    }
    CHECK((expected_feature_counts(m, f, {pi}) - manual).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("deterministic dynamics and policy count the unique path") {
    const Mdp m = stay_or_switch(Distribution::point_mass(2, 0));
    const auto f = RewardFeatures::state_indicators(2, 2);
    const TimedPolicy pi{Policy::deterministic({1, 1}, 2), Policy::deterministic({0, 0}, 2),
                         Policy::deterministic({0, 0}, 2)};
    // 0 -> 1 -> 1
    CHECK(expected_feature_counts(m, f, pi) == Eigen::Vector2d(1.0, 2.0));
  }
  SUBCASE("matches path enumeration") {
    for (int i = 0; i < 20; ++i) {
      const Mdp m = random_dynamics(rng, 3, 2);
      const auto f = random_features(rng, 3, 3, 2);
      const auto pi = soft_value_iteration(m, f, random_weights(rng, 3, 2.0), 4).policy;
      CHECK((expected_feature_counts(m, f, pi) - oracle::enumerated_feature_counts(m, f, pi))
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("causal dual gradient matches finite differences") {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const Mdp m = random_dynamics(rng, 4, 2);
    const auto f = random_features(rng, 3, 4, 2);
    const Eigen::VectorXd targets = Eigen::Vector3d(uniform01(rng), uniform01(rng), uniform01(rng)) * 3.0;
    const Weights w = random_weights(rng, 3, 1.0);
    const auto fd = oracle::central_difference(
        [&](const Eigen::VectorXd& x) { return causal_dual(m, f, targets, 3, x).value; }, w);
    CHECK((causal_dual(m, f, targets, 3, w).gradient - fd).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("fit_feature_counts and maxcausalent_irl") {
  Rng rng(6);
  SUBCASE("targets produced by known weights are matched") {
    for (int i = 0; i < 10; ++i) {
      const Mdp m = random_dynamics(rng, 4, 2);
      const auto f = random_features(rng, 3, 4, 2);
      const auto truth = soft_value_iteration(m, f, random_weights(rng, 3, 2.0), 5).policy;
      const Eigen::VectorXd targets = expected_feature_counts(m, f, truth);
      const auto fit = fit_feature_counts(m, f, targets, 5);
      CHECK(fit.diagnostics.inner.converged);
      CHECK((expected_feature_counts(m, f, fit.policy) - targets).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
  SUBCASE("targets of the zero-weight policy keep the zero weights") {
    const Mdp m = random_dynamics(rng, 4, 3);
    const auto f = random_features(rng, 3, 4, 3);
    const auto uniform = soft_value_iteration(m, f, Weights::Zero(3), 4).policy;
    const auto fit = fit_feature_counts(m, f, expected_feature_counts(m, f, uniform), 4);
    CHECK(fit.weights.cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("an expert that always ends in state 1 rewards state 1 most") {
    const Mdp m = stay_or_switch(Distribution::uniform(2));
    const auto f = RewardFeatures::state_indicators(2, 2);
    const std::vector<Trajectory> data{{{0, 1}, {1, 0}, {1, 0}}, {{1, 0}, {1, 0}, {1, 0}}};
    IrlConfig config;
    config.l2 = 0.01;
    const auto fit = maxcausalent_irl(m, f, data, config);
    Eigen::Index best = 0;
    fit.weights.maxCoeff(&best);
    CHECK(best == 1);
  }
  SUBCASE("inconsistent horizons are rejected") {
    const Mdp m = stay_or_switch(Distribution::uniform(2));
    const auto f = RewardFeatures::state_indicators(2, 2);
    CHECK_THROWS_AS(maxcausalent_irl(m, f, {{{0, 0}}, {{0, 0}, {0, 0}}}), DimensionError);
    CHECK_THROWS(maxcausalent_irl(m, f, {}));
  }
}

TEST_CASE("forward_backward") {
  Rng rng(7);
  SUBCASE("identity channel pins the states") {
    const Mdp m = random_dynamics(rng, 3, 2);
    const auto pi = repeat_policy(Policy(random_rows(rng, 3, 2)), 3);
    const auto path = sample_trajectory(m, pi, rng);
    const ObservationSequence seq{path[0].state, path[1].state, path[2].state};
    const auto fb = forward_backward(seq, StepChannel::identity(3), m, pi);
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(fb.pairs[t].row(path[t].state).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("a single step is Bayes' rule") {
    const Mdp m = random_dynamics(rng, 3, 2);
    const Policy pi(random_rows(rng, 3, 2));
    const StepChannel ch(random_rows(rng, 3, 4));
    const auto fb = forward_backward({2}, ch, m, {pi});
    double evidence = 0.0;
    for (int s = 0; s < 3; ++s) evidence += m.initial().probs()[s] * ch(s, 2);
    CHECK(fb.log_likelihood == doctest::Approx(std::log(evidence)).epsilon(1e-12));
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        CHECK(fb.pairs[0](s, a) ==
              doctest::Approx(m.initial().probs()[s] * ch(s, 2) * pi(s, a) / evidence).epsilon(1e-12));
      }
    }
  }
  SUBCASE("matches path enumeration, including missing steps") {
    for (int i = 0; i < 30; ++i) {
      const int ns = uniform_int(rng, 2, 4);
      const int horizon = uniform_int(rng, 1, 4);
      const Mdp m = random_dynamics(rng, ns, 2);
      const auto f = random_features(rng, 2, ns, 2);
      const auto pi = soft_value_iteration(m, f, random_weights(rng, 2, 2.0), horizon).policy;
      const StepChannel ch(random_rows(rng, ns, ns + 1));
      ObservationSequence seq = observe(sample_trajectory(m, pi, rng), ch, rng);
      if (horizon > 1) seq[static_cast<std::size_t>(uniform_int(rng, 0, horizon - 1))] = kMissing;
      const auto fb = forward_backward(seq, ch, m, pi);
      const auto ref = oracle::enumerated_posterior(seq, ch, m, pi);
      CHECK(std::abs(fb.log_likelihood - ref.log_likelihood) <= 1e-10);
      for (std::size_t t = 0; t < seq.size(); ++t) {
        CHECK((fb.pairs[t] - ref.pairs[t]).cwiseAbs().maxCoeff() <= 1e-10);
      }
    }
  }
  SUBCASE("an impossible symbol raises unless restarts are allowed") {
    const Mdp m = stay_or_switch(Distribution::point_mass(2, 0));
    const auto pi = repeat_policy(Policy::deterministic({0, 0}, 2), 2);  // always stay
    const ObservationSequence seq{0, 1};
    CHECK_THROWS_AS(forward_backward(seq, StepChannel::identity(2), m, pi), ImpossibleObservation);
    const auto fb = forward_backward(seq, StepChannel::identity(2), m, pi, true);
    CHECK(fb.restarts == 1);
    CHECK(fb.pairs[0](0, 0) == doctest::Approx(1.0));
    CHECK(fb.pairs[1].row(1).sum() == doctest::Approx(1.0));
  }
  SUBCASE("bad input") {
    const Mdp m = stay_or_switch(Distribution::uniform(2));
    const auto pi = repeat_policy(Policy::uniform(2, 2), 2);
    CHECK_THROWS_AS(forward_backward({0, 5}, StepChannel::identity(2), m, pi), std::out_of_range);
    CHECK_THROWS_AS(forward_backward({0}, StepChannel::identity(2), m, pi), DimensionError);
  }
}

TEST_CASE("umaxcausalent_irl") {
  Rng rng(8);
  SUBCASE("identity channel on complete data reduces to MaxCausalEnt") {
    const Mdp m = random_dynamics(rng, 4, 2);
    const auto f = RewardFeatures::state_indicators(4, 2);
    const auto expert = soft_value_iteration(m, f, random_weights(rng, 4, 2.0), 4).policy;
    std::vector<Trajectory> paths;
    std::vector<ObservationSequence> seqs;
    for (int n = 0; n < 40; ++n) {
      paths.push_back(sample_trajectory(m, expert, rng));
      seqs.push_back(observe(paths.back(), StepChannel::identity(4), rng));
    }
    IrlConfig config;
    config.l2 = 0.01;
    const auto em = umaxcausalent_irl(m, f, StepChannel::identity(4), seqs, config);
    const auto direct = maxcausalent_irl(m, f, paths, config);
    CHECK(em.diagnostics.em_converged);
    CHECK(max_policy_gap(em.policy, direct.policy) <= 1e-4);
  }
  SUBCASE("an uninformative channel stays at the initialization") {
    const Mdp m = random_dynamics(rng, 4, 2);
    const auto f = random_features(rng, 3, 4, 2);
    Eigen::MatrixXd rows(4, 3);
    rows.rowwise() = Eigen::RowVector3d(0.2, 0.3, 0.5);
    const std::vector<ObservationSequence> seqs{{0, 1, 2}, {2, 2, 1}};
    const Weights init = random_weights(rng, 3, 1.0);
    const auto em = umaxcausalent_irl(m, f, StepChannel(rows), seqs, {}, init);
    CHECK(em.diagnostics.em_iterations == 1);
    CHECK((em.weights - init).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("likelihood never decreases with deterministic dynamics and a known start") {
    for (int i = 0; i < 30; ++i) {
      const int ns = uniform_int(rng, 2, 5);
      const int na = uniform_int(rng, 2, 3);
      const int horizon = uniform_int(rng, 2, 6);
      const int k = uniform_int(rng, 1, 4);
      const Mdp m = deterministic_dynamics(rng, ns, na);
      const auto f = random_features(rng, k, ns, na);
      const auto expert = soft_value_iteration(m, f, random_weights(rng, k, 2.0), horizon).policy;
      const StepChannel ch(random_rows(rng, ns, ns + 1));
      std::vector<ObservationSequence> seqs;
      for (int n = 0; n < 30; ++n) seqs.push_back(observe(sample_trajectory(m, expert, rng), ch, rng));
      const auto em = umaxcausalent_irl(m, f, ch, seqs);
      const auto& ll = em.diagnostics.log_likelihood;
      for (std::size_t j = 1; j < ll.size(); ++j) CHECK(ll[j] >= ll[j - 1] - 1e-6);
    }
  }
}

TEST_CASE("chiddendataem_irl") {
  Rng rng(9);
  const Mdp m = random_dynamics(rng, 4, 2);
  const auto f = RewardFeatures::state_indicators(4, 2);
  const auto expert = soft_value_iteration(m, f, random_weights(rng, 4, 2.0), 4).policy;
  std::vector<Trajectory> paths;
  for (int n = 0; n < 30; ++n) paths.push_back(sample_trajectory(m, expert, rng));
  IrlConfig config;
  config.l2 = 0.01;

  SUBCASE("with nothing hidden it is MaxCausalEnt") {
    const auto em = chiddendataem_irl(m, f, paths, config);
    const auto direct = maxcausalent_irl(m, f, paths, config);
    CHECK(max_policy_gap(em.policy, direct.policy) <= 1e-4);
  }
  SUBCASE("with everything hidden it stays at the initialization") {
    std::vector<Trajectory> hidden(3, Trajectory(4, {kMissing, kMissing}));
    const Weights init = random_weights(rng, 4, 1.0);
    IrlConfig plain;
    const auto em = chiddendataem_irl(m, f, hidden, plain, init);
    CHECK(em.diagnostics.em_iterations == 1);
    CHECK((em.weights - init).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("its E-step is the identity-channel E-step on occlusion sequences") {
    auto masked = paths;
    for (auto& p : masked) p[static_cast<std::size_t>(uniform_int(rng, 0, 3))] = {kMissing, kMissing};
    const auto seqs = occlusion_sequences(masked);
    CHECK(seqs[0].size() == 4);
    const auto pi = soft_value_iteration(m, f, random_weights(rng, 4, 1.0), 4).policy;
    const auto e = causal_e_step(m, f, StepChannel::identity(4), seqs, pi, 1, true);
    Eigen::VectorXd manual = Eigen::VectorXd::Zero(4);
    for (const auto& seq : seqs) {
      const auto ref = oracle::enumerated_posterior(seq, StepChannel::identity(4), m, pi);
      for (const auto& pair : ref.pairs) manual += f.expectation(pair);
    }
    manual /= static_cast<double>(seqs.size());
    CHECK((e.targets - manual).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("decoding baselines") {
  SUBCASE("ml_decode_states takes the most likely state per symbol") {
    Eigen::MatrixXd c(3, 3);
    c << 0.6, 0.3, 0.1,  //
        0.2, 0.3, 0.5,   //
        0.1, 0.8, 0.1;
    const StepChannel ch(c);
    CHECK(ml_decode_states({0, 1, 2, kMissing}, ch) == std::vector<int>{0, 2, 1, kMissing});
    CHECK(ml_decode_states({1}, ch, {{1, 0}}) == std::vector<int>{0});
    CHECK_THROWS_AS(ml_decode_states({3}, ch), std::out_of_range);
  }
  SUBCASE("fill_actions picks the likeliest action into the next state") {
    const Mdp m = stay_or_switch(Distribution::uniform(2));
    const Trajectory path = fill_actions(m, {0, 1, 1, kMissing, 0});
    const Trajectory expected{{0, 1}, {1, 0}, {1, 0}, {kMissing, kMissing}, {0, 0}};
    CHECK(path == expected);
  }
  SUBCASE("woerr_filter blanks one symbol wherever it appears") {
    const std::vector<ObservationSequence> seqs{{3, 1, 3}, {0, 3, 2}};
    const std::vector<ObservationSequence> expected{{kMissing, 1, kMissing}, {0, kMissing, 2}};
    CHECK(woerr_filter(seqs, 3) == expected);
  }
  SUBCASE("observed_step_targets rescales partial sequences to the horizon") {
    const auto f = RewardFeatures::state_indicators(2, 2);
    const std::vector<Trajectory> masked{{{0, 0}, {kMissing, kMissing}}, {{1, 0}, {1, 1}}};
    const auto targets = observed_step_targets(f, masked);
    REQUIRE(targets.has_value());
    // First path: state 0 once in one observed step, scaled to 2 steps.
    CHECK(*targets == Eigen::Vector2d(1.0, 1.0));
    const std::vector<Trajectory> blank{{{kMissing, kMissing}}};
    CHECK_FALSE(observed_step_targets(f, blank).has_value());
  }
}
