#include "umaxent/random_program.hpp"

#include "umaxent/experiment.hpp"
#include "umaxent/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace umaxent {
namespace {

void require_range(const IntRange& r, const char* what) {
  if (r.lo < 1 || r.hi < r.lo) throw std::invalid_argument(std::string("RandomProgramSpec: bad ") + what);
}

void require_range(const RealRange& r, const char* what) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi)) || r.hi < r.lo) {
    throw std::invalid_argument(std::string("RandomProgramSpec: bad ") + what);
  }
}

}  // namespace

void RandomProgramSpec::validate() const {
  require_range(elements, "element range");
  if (observations) require_range(*observations, "observation range");
  require_range(features, "feature range");
  require_range(feature_values, "feature value range");
  require_range(weights, "weight range");
  if (!(base_alpha > 0.0)) throw std::invalid_argument("RandomProgramSpec: base_alpha must be positive");
  if (!(hidden_potential >= 0.0)) throw std::invalid_argument("RandomProgramSpec: hidden_potential must be >= 0");
  if (!(concentration >= 0.0)) throw std::invalid_argument("RandomProgramSpec: concentration must be >= 0");
}

GeneratedProgram generate_program(const RandomProgramSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int n_elements = uniform_int(rng, spec.elements.lo, spec.elements.hi);
  const int n_observations =
      spec.observations ? uniform_int(rng, spec.observations->lo, spec.observations->hi) : n_elements;
  const int n_features = uniform_int(rng, spec.features.lo, spec.features.hi);

  Eigen::MatrixXd phi(n_features, n_elements);
  for (int x = 0; x < n_elements; ++x) {
    for (int k = 0; k < n_features; ++k) {
      phi(k, x) = uniform_real(rng, spec.feature_values.lo, spec.feature_values.hi);
    }
  }
  Weights lambda(n_features);
  for (int k = 0; k < n_features; ++k) lambda[k] = uniform_real(rng, spec.weights.lo, spec.weights.hi);

  // Signal symbols: a random injection while symbols last, then uniform.
  std::vector<Eigen::Index> symbols(static_cast<std::size_t>(n_observations));
  std::iota(symbols.begin(), symbols.end(), 0);
  for (int i = n_observations - 1; i > 0; --i) {
    std::swap(symbols[static_cast<std::size_t>(i)],
              symbols[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
  }
  std::vector<Eigen::Index> signal(static_cast<std::size_t>(n_elements));
  for (int x = 0; x < n_elements; ++x) {
    signal[static_cast<std::size_t>(x)] =
        x < n_observations ? symbols[static_cast<std::size_t>(x)] : uniform_int(rng, 0, n_observations - 1);
  }

  Eigen::MatrixXd channel(n_elements, n_observations);
  for (int x = 0; x < n_elements; ++x) {
    Eigen::VectorXd alphas = Eigen::VectorXd::Constant(n_observations, spec.base_alpha);
    alphas[signal[static_cast<std::size_t>(x)]] += spec.concentration;
    Eigen::VectorXd row = sample_dirichlet(alphas, rng);
    // Keep every symbol possible from every element.
    row = row.cwiseMax(1e-12);
    channel.row(x) = (row / row.sum()).transpose();
  }

  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(n_elements);
  if (spec.hidden_potential > 0.0) {
    for (int x = 0; x < n_elements; ++x) {
      hidden[x] = uniform_real(rng, -spec.hidden_potential, spec.hidden_potential);
    }
  }

  FeatureTable features(std::move(phi));
  const Eigen::VectorXd log_truth = features.scores(lambda) + hidden;
  Distribution truth = Distribution::normalized((log_truth.array() - log_truth.maxCoeff()).exp().matrix());
  ObservationModel obs(std::move(channel));
  Distribution true_obs = Distribution::normalized(obs.channel().transpose() * truth.probs());
  return GeneratedProgram{ElementSpace(n_elements),
                          ObservationSpace(n_observations),
                          std::move(features),
                          std::move(lambda),
                          std::move(hidden),
                          std::move(truth),
                          std::move(obs),
                          std::move(true_obs),
                          std::move(signal)};
}

EmpiricalObservations sample_observations(const GeneratedProgram& program, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_observations: n must be >= 1");
  Rng rng(seed);
  const Eigen::VectorXd& p = program.true_observations.probs();
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
  for (int i = 0; i < n; ++i) counts[sample_index(p, rng)] += 1.0;
  return Distribution::normalized(counts);
}

double kld(const Distribution& p, const Distribution& q) {
  require_dimension(q.size(), p.size(), "kld support");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      throw AbsoluteContinuityError("kld: q(" + std::to_string(i) + ") = 0 where p > 0");
    }
    total += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(total, 0.0);
}

double kld_to_model(const Distribution& p, const Weights& weights, const FeatureTable& features) {
  require_dimension(features.num_elements(), p.size(), "kld support");
  const Eigen::VectorXd scores = features.scores(weights);
  const double log_z = log_sum_exp(scores);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * (std::log(p[i]) - (scores[i] - log_z));
  }
  return std::max(total, 0.0);
}

namespace {

struct TrialRows {
  std::vector<Figure1Row> rows;
};

TrialRows run_figure1_trial(const Figure1Config& config, int trial) {
  const std::uint64_t trial_seed = derive_seed(config.spec.seed, static_cast<std::uint64_t>(trial));
  RandomProgramSpec spec = config.spec;
  spec.seed = trial_seed;
  const GeneratedProgram program = generate_program(spec);

  auto make_row = [&](const char* algorithm, int n) {
    Figure1Row row;
    row.algorithm = algorithm;
    row.n_observations = n;
    row.trial = trial;
    row.seed = trial_seed;
    return row;
  };
  auto fail = [](Figure1Row& row, const std::exception& e) {
    row.failed = true;
    row.kld = std::nan("");
    row.error = e.what();
  };

  // The exact-observation control does not depend on N.
  Figure1Row inf_template = make_row(figure1::kInfObs, 0);
  try {
    const EmResult inf = run_umaxent(program.features, program.channel, program.true_observations, config.em);
    inf_template.kld = kld_to_model(program.true_distribution, inf.weights, program.features);
  } catch (const std::exception& e) {
    fail(inf_template, e);
  }

  TrialRows out;
  for (int n : config.grid) {
    const EmpiricalObservations data =
        sample_observations(program, n, derive_seed(trial_seed, static_cast<std::uint64_t>(n)));

    Figure1Row u = make_row(figure1::kUMaxEnt, n);
    try {
      const EmResult fit = run_umaxent(program.features, program.channel, data, config.em);
      u.kld = kld_to_model(program.true_distribution, fit.weights, program.features);
    } catch (const std::exception& e) {
      fail(u, e);
    }
    out.rows.push_back(std::move(u));

    Figure1Row ml = make_row(figure1::kMlMaxEnt, n);
    try {
      // The baseline's output is its solver's last iterate, converged or not:
      // decoded data can sit on the boundary where no finite weights exist.
      const MaxEntSolution fit = solve_maxent(
          program.features, ml_maxent_targets(program.channel, data, program.features), config.solver);
      ml.kld = kld_to_model(program.true_distribution, fit.weights, program.features);
    } catch (const std::exception& e) {
      fail(ml, e);
    }
    out.rows.push_back(std::move(ml));

    Figure1Row inf = inf_template;
    inf.n_observations = n;
    out.rows.push_back(std::move(inf));
  }
  return out;
}

}  // namespace

std::vector<CurvePoint> run_figure1(const Figure1Config& config, const Figure1Sink& sink) {
  config.spec.validate();
  config.em.validate();
  config.solver.validate();
  if (config.trials < 1) throw std::invalid_argument("run_figure1: trials must be >= 1");
  if (config.grid.empty() || !std::is_sorted(config.grid.begin(), config.grid.end())) {
    throw std::invalid_argument("run_figure1: grid must be nonempty and ascending");
  }

  const std::vector<std::string> algorithms{figure1::kUMaxEnt, figure1::kMlMaxEnt, figure1::kInfObs};
  // values[grid index][algorithm index]
  std::vector<std::vector<std::vector<double>>> values(
      config.grid.size(), std::vector<std::vector<double>>(algorithms.size()));
  std::vector<std::vector<int>> failures(config.grid.size(), std::vector<int>(algorithms.size(), 0));

  auto grid_index = [&](int n) {
    return static_cast<std::size_t>(std::find(config.grid.begin(), config.grid.end(), n) - config.grid.begin());
  };
  auto algorithm_index = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(algorithms.begin(), algorithms.end(), name) - algorithms.begin());
  };

  run_ordered<TrialRows>(
      static_cast<std::size_t>(config.trials), config.workers,
      [&](std::size_t trial) { return run_figure1_trial(config, static_cast<int>(trial)); },
      [&](std::size_t, TrialRows& trial_rows) {
        for (const Figure1Row& row : trial_rows.rows) {
          const std::size_t g = grid_index(row.n_observations);
          const std::size_t a = algorithm_index(row.algorithm);
          if (row.failed) {
            ++failures[g][a];
          } else {
            values[g][a].push_back(row.kld);
          }
          if (sink) sink(row);
        }
      });

  std::vector<CurvePoint> points;
  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      const SampleSummary s = summarize(values[g][a]);
      points.push_back(CurvePoint{config.grid[g], algorithms[a], s.mean, s.stddev, s.count, failures[g][a]});
    }
  }
  return points;
}

std::string figure1_csv_header() { return "experiment,algorithm,n_observations,trial,kld,seed"; }

std::string figure1_csv_row(const Figure1Row& row) {
  std::ostringstream out;
  out << "figure1," << row.algorithm << ',' << row.n_observations << ',' << row.trial << ','
      << format_double(row.kld) << ',' << row.seed;
  return out.str();
}

std::string figure1_summary_header() {
  return "experiment,algorithm,n_observations,mean_kld,stddev_kld,trials,failures";
}

std::string figure1_summary_row(const CurvePoint& point) {
  std::ostringstream out;
  out << "figure1," << point.algorithm << ',' << point.n_observations << ','
      << format_double(point.mean_kld) << ',' << format_double(point.stddev_kld) << ','
      << point.trials << ',' << point.failures;
  return out.str();
}

Verdict figure1_verdict(const std::vector<CurvePoint>& points, double inf_factor, double ml_factor) {
  Verdict verdict;
  auto check = [&](bool ok, const std::string& text) { verdict.check(ok, text); };
  auto series = [&](const std::string& algorithm) {
    std::vector<CurvePoint> out;
    for (const auto& p : points) {
      if (p.algorithm == algorithm) out.push_back(p);
    }
    std::sort(out.begin(), out.end(),
              [](const CurvePoint& a, const CurvePoint& b) { return a.n_observations < b.n_observations; });
    return out;
  };
  const auto u = series(figure1::kUMaxEnt);
  const auto ml = series(figure1::kMlMaxEnt);
  const auto inf = series(figure1::kInfObs);
  if (u.empty() || ml.empty() || inf.empty()) {
    check(false, "missing algorithm series");
    return verdict;
  }
  for (const auto& p : points) {
    if (p.trials > 0 && !(p.mean_kld >= 0.0)) check(false, "negative KLD at " + p.algorithm);
  }

  const CurvePoint& u_last = u.back();
  const CurvePoint& ml_last = ml.back();
  const CurvePoint& inf_last = inf.back();
  std::ostringstream a;
  a << "uMaxEnt " << u_last.mean_kld << " <= " << inf_factor << " x InfObs " << inf_last.mean_kld
    << " at N=" << u_last.n_observations;
  check(u_last.mean_kld <= inf_factor * inf_last.mean_kld, a.str());

  std::ostringstream b;
  b << "MLMaxEnt " << ml_last.mean_kld << " >= " << ml_factor << " x uMaxEnt " << u_last.mean_kld
    << " at N=" << ml_last.n_observations;
  check(ml_last.mean_kld >= ml_factor * u_last.mean_kld, b.str());

  bool monotone = true;
  std::ostringstream c;
  c << "uMaxEnt non-increasing in N within one standard error:";
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double se = std::max(u[i].stddev_kld / std::sqrt(std::max(1, u[i].trials)),
                               u[i + 1].stddev_kld / std::sqrt(std::max(1, u[i + 1].trials)));
    if (u[i + 1].mean_kld > u[i].mean_kld + se) monotone = false;
    c << ' ' << u[i].mean_kld;
  }
  c << ' ' << u.back().mean_kld;
  check(monotone, c.str());
  return verdict;
}

}  // namespace umaxent
