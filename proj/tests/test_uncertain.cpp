#include "umaxent/oracles.hpp"
#include "umaxent/random.hpp"
#include "umaxent/random_program.hpp"
#include "umaxent/uncertain.hpp"

#include <doctest.h>

#include <cmath>

using namespace umaxent;

namespace {

FeatureTable random_table(Rng& rng, int features, int elements) {
  Eigen::MatrixXd v(features, elements);
  for (int k = 0; k < features; ++k) {
    for (int x = 0; x < elements; ++x) v(k, x) = uniform01(rng);
  }
  return FeatureTable(v);
}

Weights random_weights(Rng& rng, int size, double half_width) {
  Weights w(size);
  for (int k = 0; k < size; ++k) w[k] = uniform_real(rng, -half_width, half_width);
  return w;
}

Distribution random_distribution(Rng& rng, int size) {
  return Distribution::normalized(sample_dirichlet(Eigen::VectorXd::Ones(size), rng));
}

ObservationModel random_channel(Rng& rng, int elements, int observations) {
  Eigen::MatrixXd c(elements, observations);
  for (int x = 0; x < elements; ++x) {
    c.row(x) = sample_dirichlet(Eigen::VectorXd::Ones(observations), rng).transpose();
    c.row(x) /= c.row(x).sum();
  }
  return ObservationModel(c);
}

}  // namespace

TEST_CASE("observation model validation") {
  CHECK_THROWS_AS(ObservationModel(Eigen::Matrix2d::Constant(0.7)), std::invalid_argument);
  CHECK_NOTHROW(ObservationModel::identity(3));
  const auto flat = ObservationModel::uninformative(3, Distribution(Eigen::Vector2d(0.2, 0.8)));
  CHECK(flat(2, 1) == doctest::Approx(0.8));
}

TEST_CASE("posterior") {
  SUBCASE("Bayes arithmetic") {
    Eigen::Matrix2d c;
    c << 0.9, 0.1, 0.3, 0.7;
    const auto table = posterior(Distribution::uniform(2), ObservationModel(c));
    CHECK(table.probs(0, 0) == doctest::Approx(0.75));
    CHECK(table.probs(1, 0) == doctest::Approx(0.25));
  }
  SUBCASE("identity channel gives the identity table") {
    Rng rng(1);
    const auto table = posterior(random_distribution(rng, 4), ObservationModel::identity(4));
    CHECK((table.probs - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("matches the joint-table oracle and reconstructs Bayes' rule") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      const auto model = random_distribution(rng, 5);
      const auto obs = random_channel(rng, 5, 4);
      const auto table = posterior(model, obs);
      CHECK((table.probs - oracle::joint_posterior(model, obs)).cwiseAbs().maxCoeff() <= 1e-12);
      for (Eigen::Index w = 0; w < 4; ++w) {
        CHECK(std::abs(table.probs.col(w).sum() - 1.0) <= 1e-9);
        for (Eigen::Index x = 0; x < 5; ++x) {
          CHECK(std::abs(obs(x, w) * model[x] - table.probs(x, w) * table.evidence[w]) <= 1e-9);
        }
      }
    }
  }
  SUBCASE("unreachable symbols are flagged, not divided by zero") {
    Eigen::Matrix2d c;
    c << 1.0, 0.0, 1.0, 0.0;
    const auto table = posterior(Distribution::uniform(2), ObservationModel(c));
    CHECK_FALSE(table.reachable[1]);
    CHECK(table.probs.col(1).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("e_step") {
  Rng rng(3);
  const FeatureTable f = random_table(rng, 3, 5);
  SUBCASE("identity channel gives the empirical expectation") {
    const auto data = random_distribution(rng, 5);
    const Eigen::VectorXd got = e_step(random_weights(rng, 3, 2.0), f, ObservationModel::identity(5), data);
    CHECK((got - expected_features(data, f)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("uninformative channel gives the model's own expectation") {
    const Weights w = random_weights(rng, 3, 2.0);
    const auto flat = ObservationModel::uninformative(5, random_distribution(rng, 3));
    const Eigen::VectorXd got = e_step(w, f, flat, random_distribution(rng, 3));
    CHECK((got - expected_features(model_distribution(w, f), f)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("matches the triple-loop oracle") {
    for (int i = 0; i < 20; ++i) {
      const Weights w = random_weights(rng, 3, 2.0);
      const auto obs = random_channel(rng, 5, 6);
      const auto data = random_distribution(rng, 6);
      CHECK((e_step(w, f, obs, data) - oracle::triple_loop_e_step(w, f, obs, data)).cwiseAbs().maxCoeff() <=
            1e-12);
    }
  }
  SUBCASE("mass on an impossible symbol raises and names it") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(5, 3);
    c.col(0).setOnes();
    const Distribution data(Eigen::Vector3d(0.5, 0.0, 0.5));
    try {
      e_step(Weights::Zero(3), f, ObservationModel(c), data);
      FAIL("expected ImpossibleObservation");
    } catch (const ImpossibleObservation& e) {
      CHECK(e.observation() == 2);
    }
  }
}

TEST_CASE("latent reduction channel") {
  Rng rng(4);
  SUBCASE("trivial partition is the identity channel") {
    const auto c = latent_reduction_channel({0, 1, 2, 3});
    CHECK((c.channel() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("one group makes the data uninformative") {
    const FeatureTable f = random_table(rng, 2, 4);
    const Weights w = random_weights(rng, 2, 2.0);
    const Eigen::VectorXd got = e_step(w, f, latent_reduction_channel({0, 0, 0, 0}), Distribution::uniform(1));
    CHECK((got - expected_features(model_distribution(w, f), f)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("six elements in three groups match the completion sum") {
    const std::vector<int> group{0, 1, 2, 0, 1, 2};
    for (int i = 0; i < 10; ++i) {
      const FeatureTable f = random_table(rng, 3, 6);
      const Weights w = random_weights(rng, 3, 2.0);
      const auto freq = random_distribution(rng, 3);
      const Eigen::VectorXd got = e_step(w, f, latent_reduction_channel(group), freq);
      CHECK((got - oracle::latent_completion(w, f, group, freq)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("observation_log_likelihood") {
  Rng rng(5);
  SUBCASE("identity channel at the empirical model is the negative entropy") {
    // A one-hot feature per element lets the model hit the data exactly.
    const FeatureTable f(Eigen::MatrixXd::Identity(4, 4));
    const auto data = random_distribution(rng, 4);
    const auto fit = solve_maxent(f, expected_features(data, f), SolverConfig{.tolerance = 1e-12});
    CHECK(observation_log_likelihood(fit.weights, f, ObservationModel::identity(4), data) ==
          doctest::Approx(-entropy(data)).epsilon(1e-9));
  }
  SUBCASE("matches direct summation") {
    for (int i = 0; i < 20; ++i) {
      const FeatureTable f = random_table(rng, 2, 5);
      const Weights w = random_weights(rng, 2, 2.0);
      const auto obs = random_channel(rng, 5, 3);
      const auto data = random_distribution(rng, 3);
      const auto p = model_distribution(w, f);
      double direct = 0.0;
      for (Eigen::Index o = 0; o < 3; ++o) {
        double pr = 0.0;
        for (Eigen::Index x = 0; x < 5; ++x) pr += p[x] * obs(x, o);
        direct += data[o] * std::log(pr);
      }
      CHECK(std::abs(observation_log_likelihood(w, f, obs, data) - direct) <= 1e-12);
    }
  }
  SUBCASE("an impossible observed symbol gives minus infinity") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
    c.col(0).setOnes();
    const FeatureTable f(Eigen::RowVector2d(0.0, 1.0));
    CHECK(observation_log_likelihood(Weights::Zero(1), f, ObservationModel(c),
                                     Distribution::uniform(2)) == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("likelihood decomposition") {
  Rng rng(6);
  const FeatureTable f = random_table(rng, 3, 6);
  const auto obs = random_channel(rng, 6, 4);
  const auto data = random_distribution(rng, 4);
  const Weights w = random_weights(rng, 3, 2.0);
  const auto terms = likelihood_terms(w, f, obs, data);
  // At lambda' = lambda: L = U* + Q + H with Q the expected complete-data
  // log-likelihood sum_w P~(w) sum_x Pr(x|w) log Pr(x).
  const auto p = model_distribution(w, f);
  const auto table = posterior(p, obs);
  double q = 0.0;
  for (Eigen::Index o = 0; o < 4; ++o) {
    for (Eigen::Index x = 0; x < 6; ++x) q += data[o] * table.probs(x, o) * std::log(p[x]);
  }
  CHECK(terms.expected_log_obs + q + terms.conditional_entropy ==
        doctest::Approx(observation_log_likelihood(w, f, obs, data)).epsilon(1e-10));
  CHECK(terms.conditional_entropy >= 0.0);
}

TEST_CASE("run_umaxent") {
  SUBCASE("identity channel reduces to plain MaxEnt") {
    Rng rng(7);
    for (int i = 0; i < 10; ++i) {
      const FeatureTable f = random_table(rng, 3, 6);
      const auto data = random_distribution(rng, 6);
      const auto u = run_umaxent(f, ObservationModel::identity(6), data);
      const auto plain = solve_maxent(f, expected_features(data, f));
      CHECK(total_variation(model_distribution(u.weights, f), model_distribution(plain.weights, f)) <= 1e-6);
    }
  }
  SUBCASE("exact observation probabilities recover an in-family truth") {
    RandomProgramSpec spec;
    spec.elements = {8, 8};
    spec.hidden_potential = 0.0;
    spec.concentration = 20.0;  // mild noise
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      spec.seed = seed;
      const auto program = generate_program(spec);
      EmConfig config;
      config.max_iterations = 5000;
      const auto fit = run_umaxent(program.features, program.channel, program.true_observations, config);
      CHECK(kld(program.true_distribution, model_distribution(fit.weights, program.features)) <= 1e-3);
    }
  }
  SUBCASE("uninformative channel stops at the initialization after one iteration") {
    Rng rng(8);
    const FeatureTable f = random_table(rng, 3, 5);
    const Weights init = random_weights(rng, 3, 2.0);
    const auto flat = ObservationModel::uninformative(5, random_distribution(rng, 4));
    const auto fit = run_umaxent(f, flat, random_distribution(rng, 4), {}, init);
    CHECK(fit.diagnostics.converged);
    CHECK(fit.diagnostics.iterations == 1);
    CHECK(total_variation(model_distribution(fit.weights, f), model_distribution(init, f)) <= 1e-6);
  }
  SUBCASE("likelihood never decreases and converged runs satisfy their own constraints") {
    RandomProgramSpec spec;
    spec.hidden_potential = 0.0;
    EmConfig config;
    config.max_iterations = 20000;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      spec.seed = seed;
      const auto program = generate_program(spec);
      const auto data = sample_observations(program, 500, seed);
      const auto fit = run_umaxent(program.features, program.channel, data, config);
      double previous = fit.diagnostics.initial_log_likelihood;
      for (const auto& it : fit.diagnostics.history) {
        CHECK(it.log_likelihood >= previous - 1e-8);
        previous = it.log_likelihood;
      }
      REQUIRE(fit.diagnostics.converged);
      const Eigen::VectorXd gap =
          expected_features(model_distribution(fit.weights, program.features), program.features) -
          e_step(fit.weights, program.features, program.channel, data);
      CHECK(gap.cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
  SUBCASE("an M-step that cannot converge raises with the best weights") {
    // Data on the boundary of the polytope under an identity channel.
    const FeatureTable f(Eigen::RowVector2d(0.0, 1.0));
    EmConfig config;
    config.inner.max_iterations = 5;
    CHECK_THROWS_AS(run_umaxent(f, ObservationModel::identity(2), Distribution::point_mass(2, 1), config),
                    EmNonConvergence);
  }
}

TEST_CASE("exact data: the truth satisfies the uncertain constraints") {
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const FeatureTable f = random_table(rng, 3, 7);
    const Weights truth = random_weights(rng, 3, 3.0);
    const auto obs = random_channel(rng, 7, 5);
    const auto p = model_distribution(truth, f);
    const Distribution exact(obs.channel().transpose() * p.probs());
    CHECK((e_step(truth, f, obs, exact) - expected_features(p, f)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("ML MaxEnt decoding baseline") {
  SUBCASE("identity channel matches the E-step reduction") {
    Rng rng(10);
    const FeatureTable f = random_table(rng, 2, 4);
    const auto data = random_distribution(rng, 4);
    CHECK((ml_maxent_targets(ObservationModel::identity(4), data, f) - expected_features(data, f))
              .cwiseAbs()
              .maxCoeff() <= 1e-15);
  }
  SUBCASE("a 60/40 posterior is decoded wholesale") {
    // Uniform prior: Pr(x0 | w0) = 0.6, Pr(x1 | w0) = 0.4.
    Eigen::Matrix2d c;
    c << 0.6, 0.4, 0.4, 0.6;
    const ObservationModel obs(c);
    const auto decoded = ml_decoded_distribution(obs, Distribution::point_mass(2, 0));
    CHECK(decoded[0] == 1.0);
    const auto table = posterior(Distribution::uniform(2), obs);
    CHECK(table.probs(0, 0) == doctest::Approx(0.6));
    CHECK(decoded[0] != doctest::Approx(table.probs(0, 0)));
  }
  SUBCASE("decoding loses to exact-data EM on almost every random program") {
    RandomProgramSpec spec;
    spec.hidden_potential = 0.0;
    int worse = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      spec.seed = seed;
      const auto program = generate_program(spec);
      const auto ml = solve_maxent(program.features,
                                   ml_maxent_targets(program.channel, program.true_observations, program.features));
      EmConfig config;
      config.max_iterations = 5000;
      const auto u = run_umaxent(program.features, program.channel, program.true_observations, config);
      const double ml_kld = kld_to_model(program.true_distribution, ml.weights, program.features);
      const double u_kld = kld_to_model(program.true_distribution, u.weights, program.features);
      if (ml_kld > u_kld) ++worse;
    }
    CHECK(worse >= 95);
  }
}
