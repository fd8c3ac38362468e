#include "umaxent/fugitive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace umaxent {

GridMap GridMap::parse(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == ';') continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw MapFormatError("map: no grid rows");

  GridMap map;
  map.height_ = static_cast<int>(rows.size());
  map.width_ = static_cast<int>(rows.front().size());
  map.blocked_.assign(static_cast<std::size_t>(map.width_ * map.height_), false);
  map.state_of_.assign(map.blocked_.size(), -1);
  for (int r = 0; r < map.height_; ++r) {
    const std::string& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != map.width_) {
      throw MapFormatError("map: row " + std::to_string(r) + " has width " +
                           std::to_string(row.size()) + ", expected " + std::to_string(map.width_));
    }
    for (int c = 0; c < map.width_; ++c) {
      const std::size_t at = static_cast<std::size_t>(r * map.width_ + c);
      const char ch = row[static_cast<std::size_t>(c)];
      if (ch == '#') {
        map.blocked_[at] = true;
        continue;
      }
      if (ch != '.' && ch != 'A' && ch != 'B' && ch != 'T') {
        throw MapFormatError(std::string("map: unknown cell character '") + ch + "'");
      }
      const int state = static_cast<int>(map.cells_.size());
      map.state_of_[at] = state;
      map.cells_.push_back({r, c});
      auto unique = [&](int& slot, const char* what) {
        if (slot != -1) throw MapFormatError(std::string("map: more than one ") + what);
        slot = state;
      };
      if (ch == 'A') unique(map.goal_, "safe house 'A'");
      if (ch == 'B') unique(map.decoy_, "safe house 'B'");
      if (ch == 'T') {
        if (map.tower_.row != -1) throw MapFormatError("map: more than one tower 'T'");
        map.tower_ = {r, c};
      }
    }
  }
  if (map.goal_ < 0 || map.decoy_ < 0) throw MapFormatError("map: needs both 'A' and 'B'");
  if (map.tower_.row < 0) throw MapFormatError("map: needs a tower 'T'");
  return map;
}

GridMap GridMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MapFormatError("cannot open map '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

bool GridMap::blocked(int row, int col) const {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) return true;
  return blocked_[static_cast<std::size_t>(row * width_ + col)];
}

int GridMap::state_at(int row, int col) const {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) return -1;
  return state_of_[static_cast<std::size_t>(row * width_ + col)];
}

double GridMap::distance(int a, int b) const {
  const GridCell ca = cell(a), cb = cell(b);
  return std::hypot(ca.row - cb.row, ca.col - cb.col);
}

double GridMap::tower_distance(int state) const {
  const GridCell c = cell(state);
  return std::hypot(c.row - tower_.row, c.col - tower_.col);
}

bool GridMap::occluded(int state) const {
  // Clip the centre-to-centre segment against each blocked cell's open box.
  const GridCell target = cell(state);
  const double x0 = tower_.col + 0.5, y0 = tower_.row + 0.5;
  const double dx = target.col - tower_.col, dy = target.row - tower_.row;
  constexpr double eps = 1e-12;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (!blocked_[static_cast<std::size_t>(r * width_ + c)]) continue;
      double lo = 0.0, hi = 1.0;
      auto clip = [&](double start, double delta, double min, double max) {
        if (std::abs(delta) < eps) return start > min && start < max;
        double a = (min - start) / delta, b = (max - start) / delta;
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
        return true;
      };
      if (!clip(x0, dx, c, c + 1.0) || !clip(y0, dy, r, r + 1.0)) continue;
      if (hi - lo > eps) return true;
    }
  }
  return false;
}

Mdp build_fugitive_mdp(const GridMap& map, double discount, double success) {
  const int ns = map.num_states();
  if (ns < 1) throw MapFormatError("map: no open cells");
  if (!(success >= 0.0 && success <= 1.0)) {
    throw std::invalid_argument("build_fugitive_mdp: success must lie in [0,1]");
  }
  constexpr int dr[kNumMoves] = {-1, 1, 0, 0};
  constexpr int dc[kNumMoves] = {0, 0, 1, -1};
  auto result = [&](int s, int move) {
    const GridCell c = map.cell(s);
    const int next = map.state_at(c.row + dr[move], c.col + dc[move]);
    return next < 0 ? s : next;
  };
  const double slip = (1.0 - success) / (kNumMoves - 1);
  std::vector<Eigen::MatrixXd> transitions(kNumMoves, Eigen::MatrixXd::Zero(ns, ns));
  for (int a = 0; a < kNumMoves; ++a) {
    for (int s = 0; s < ns; ++s) {
      for (int m = 0; m < kNumMoves; ++m) {
        transitions[static_cast<std::size_t>(a)](s, result(s, m)) += m == a ? success : slip;
      }
    }
  }
  Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(ns, kNumMoves);
  reward.row(map.goal()).setOnes();
  return Mdp(std::move(transitions), std::move(reward), discount, Distribution::uniform(ns));
}

NoiseSetting NoiseSetting::low() {
  NoiseSetting s;
  s.name = "low";
  s.sigma = 0.5;
  return s;
}

NoiseSetting NoiseSetting::high() {
  NoiseSetting s;
  s.name = "high";
  s.sigma = 2.0;
  return s;
}

void NoiseSetting::validate() const {
  if (name.empty()) throw std::invalid_argument("NoiseSetting: empty name");
  if (!(sigma > 0.0)) throw std::invalid_argument("NoiseSetting: sigma must be positive");
  if (!(sigma_growth >= 0.0 && miss_growth >= 0.0)) {
    throw std::invalid_argument("NoiseSetting: growth rates must be nonnegative");
  }
  if (!(base_miss >= 0.0 && base_miss <= 1.0)) {
    throw std::invalid_argument("NoiseSetting: base_miss must lie in [0,1]");
  }
  if (!(mountain_multiplier >= 1.0)) {
    throw std::invalid_argument("NoiseSetting: mountain_multiplier must be >= 1");
  }
}

int miss_symbol(const GridMap& map) { return map.num_states(); }

StepChannel build_tower_channel(const GridMap& map, const NoiseSetting& setting) {
  setting.validate();
  const int ns = map.num_states();
  Eigen::MatrixXd channel = Eigen::MatrixXd::Zero(ns, ns + 1);
  for (int s = 0; s < ns; ++s) {
    const double d = map.tower_distance(s);
    double miss = setting.base_miss * (1.0 + setting.miss_growth * d);
    if (map.occluded(s)) miss *= setting.mountain_multiplier;
    miss = std::clamp(miss, 0.0, 1.0);

    const double spread = setting.sigma * (1.0 + setting.sigma_growth * d);
    Eigen::VectorXd log_w(ns);
    for (int w = 0; w < ns; ++w) {
      const double gap = map.distance(w, s);
      log_w[w] = -gap * gap / (2.0 * spread * spread);
    }
    const Eigen::VectorXd w = (log_w.array() - log_sum_exp(log_w)).exp();
    channel.row(s).head(ns) = (1.0 - miss) * w.transpose() / w.sum();
    channel(s, ns) = miss;
  }
  return StepChannel(std::move(channel));
}

void FugitiveConfig::validate() const {
  if (map.num_states() < 1) throw std::invalid_argument("FugitiveConfig: no map loaded");
  if (settings.empty()) throw std::invalid_argument("FugitiveConfig: no noise settings");
  for (const auto& s : settings) s.validate();
  if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()) || grid.front() < 1 ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw std::invalid_argument("FugitiveConfig: grid must be strictly ascending positive counts");
  }
  if (trials < 1) throw std::invalid_argument("FugitiveConfig: trials must be >= 1");
  if (workers < 1) throw std::invalid_argument("FugitiveConfig: workers must be >= 1");
  if (horizon < 1) throw std::invalid_argument("FugitiveConfig: horizon must be >= 1");
  irl.validate();
}

double greedy_ile(const Mdp& mdp, const Eigen::MatrixXd& learned_reward) {
  const Policy expert = value_iteration(mdp).greedy;
  const Policy learned = value_iteration(mdp.with_reward(learned_reward)).greedy;
  return ile(mdp, expert, learned);
}

namespace {

struct Scenario {
  Mdp mdp;
  RewardFeatures features;
  TimedPolicy expert;
  Policy optimal;
  ValueFunction optimal_values;
  std::vector<StepChannel> channels;
};

Scenario make_scenario(const FugitiveConfig& config) {
  Mdp mdp = build_fugitive_mdp(config.map);
  RewardFeatures features = RewardFeatures::state_indicators(mdp.num_states(), mdp.num_actions());
  TimedPolicy expert =
      soft_value_iteration(mdp, config.expert_reward_scale * mdp.reward(), config.horizon).policy;
  Policy optimal = value_iteration(mdp).greedy;
  ValueFunction optimal_values = policy_evaluation(mdp, optimal);
  std::vector<StepChannel> channels;
  for (const auto& s : config.settings) channels.push_back(build_tower_channel(config.map, s));
  return {std::move(mdp), std::move(features), std::move(expert), std::move(optimal),
          std::move(optimal_values), std::move(channels)};
}

double scenario_ile(const Scenario& sc, const Weights& weights) {
  const Policy learned = value_iteration(sc.mdp.with_reward(sc.features.reward(weights))).greedy;
  return (sc.optimal_values - policy_evaluation(sc.mdp, learned)).cwiseAbs().sum();
}

ObservationSequence observe(const Trajectory& path, const StepChannel& channel, Rng& rng) {
  ObservationSequence seq;
  seq.reserve(path.size());
  for (const auto& step : path) {
    seq.push_back(static_cast<int>(sample_index(channel.channel().row(step.state).transpose(), rng)));
  }
  return seq;
}

std::vector<FugitiveRow> run_trial(const FugitiveConfig& config, const Scenario& sc, int trial) {
  const std::uint64_t trial_seed = derive_seed(config.seed, static_cast<std::uint64_t>(trial));
  const int pool = config.grid.back();

  Rng path_rng(derive_seed(trial_seed, 0));
  std::vector<Trajectory> paths;
  for (int i = 0; i < pool; ++i) paths.push_back(sample_trajectory(sc.mdp, sc.expert, path_rng));

  std::vector<std::vector<ObservationSequence>> observed(config.settings.size());
  for (std::size_t k = 0; k < config.settings.size(); ++k) {
    Rng obs_rng(derive_seed(trial_seed, 1 + k));
    for (const auto& path : paths) observed[k].push_back(observe(path, sc.channels[k], obs_rng));
  }

  const int miss = miss_symbol(config.map);
  const std::vector<SymbolOverride> absurd{{miss, config.map.decoy()}};

  auto scored = [&](const std::string& setting, const char* algorithm, int n, auto&& fit) {
    FugitiveRow row;
    row.setting = setting;
    row.algorithm = algorithm;
    row.n_trajectories = n;
    row.trial = trial;
    row.seed = trial_seed;
    try {
      row.ile = scenario_ile(sc, fit());
    } catch (const std::exception& e) {
      row.failed = true;
      row.ile = std::nan("");
      row.error = e.what();
    }
    return row;
  };

  std::vector<FugitiveRow> rows;
  std::vector<FugitiveRow> truth;  // does not depend on the setting
  for (int n : config.grid) {
    const std::vector<Trajectory> prefix(paths.begin(), paths.begin() + n);
    truth.push_back(scored("", fugitive::kTrue, n, [&] {
      return maxcausalent_irl(sc.mdp, sc.features, prefix, config.irl).weights;
    }));
  }

  for (std::size_t k = 0; k < config.settings.size(); ++k) {
    const std::string& setting = config.settings[k].name;
    const StepChannel& channel = sc.channels[k];
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
      const int n = config.grid[g];
      const std::vector<ObservationSequence> seqs(observed[k].begin(), observed[k].begin() + n);

      FugitiveRow t = truth[g];
      t.setting = setting;
      rows.push_back(std::move(t));

      rows.push_back(scored(setting, fugitive::kMl, n, [&] {
        const auto decoded = ml_decode_trajectories(seqs, channel, sc.mdp, absurd);
        return maxcausalent_irl(sc.mdp, sc.features, decoded, config.irl).weights;
      }));

      const auto masked = ml_decode_trajectories(woerr_filter(seqs, miss), channel, sc.mdp);
      rows.push_back(scored(setting, fugitive::kWoerr, n, [&] {
        return woerr_irl(sc.mdp, sc.features, masked, config.irl).weights;
      }));
      rows.push_back(scored(setting, fugitive::kHiddenDataEm, n, [&] {
        return chiddendataem_irl(sc.mdp, sc.features, masked, config.irl).weights;
      }));
      rows.push_back(scored(setting, fugitive::kUMaxCausalEnt, n, [&] {
        return umaxcausalent_irl(sc.mdp, sc.features, channel, seqs, config.irl).weights;
      }));
    }
  }
  return rows;
}

}  // namespace

std::vector<FugitivePoint> run_fugitive_experiment(const FugitiveConfig& config,
                                                   const FugitiveSink& sink) {
  config.validate();
  const Scenario sc = make_scenario(config);
  const std::vector<std::string> algorithms{fugitive::kTrue, fugitive::kMl, fugitive::kWoerr,
                                            fugitive::kHiddenDataEm, fugitive::kUMaxCausalEnt};

  struct Cell {
    std::vector<double> values;
    int failures = 0;
  };
  // cells[setting][grid][algorithm]
  std::vector<std::vector<std::vector<Cell>>> cells(
      config.settings.size(),
      std::vector<std::vector<Cell>>(config.grid.size(), std::vector<Cell>(algorithms.size())));
  auto index_of = [](const auto& range, const auto& value) {
    return static_cast<std::size_t>(std::find(range.begin(), range.end(), value) - range.begin());
  };
  std::vector<std::string> setting_names;
  for (const auto& s : config.settings) setting_names.push_back(s.name);

  run_ordered<std::vector<FugitiveRow>>(
      static_cast<std::size_t>(config.trials), config.workers,
      [&](std::size_t trial) { return run_trial(config, sc, static_cast<int>(trial)); },
      [&](std::size_t, std::vector<FugitiveRow>& rows) {
        for (const auto& row : rows) {
          Cell& cell = cells[index_of(setting_names, row.setting)][index_of(config.grid, row.n_trajectories)]
                            [index_of(algorithms, row.algorithm)];
          if (row.failed) ++cell.failures;
          else cell.values.push_back(row.ile);
          if (sink) sink(row);
        }
      });

  std::vector<FugitivePoint> points;
  for (std::size_t k = 0; k < config.settings.size(); ++k) {
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
      for (std::size_t a = 0; a < algorithms.size(); ++a) {
        const Cell& cell = cells[k][g][a];
        const SampleSummary s = summarize(cell.values);
        points.push_back({setting_names[k], config.grid[g], algorithms[a], s.mean, s.stddev, s.count,
                          cell.failures});
      }
    }
  }
  return points;
}

std::string fugitive_csv_header() { return "experiment,setting,algorithm,n_trajectories,trial,ile,seed"; }

std::string fugitive_csv_row(const FugitiveRow& row) {
  std::ostringstream out;
  out << "fugitive," << row.setting << ',' << row.algorithm << ',' << row.n_trajectories << ','
      << row.trial << ',' << format_double(row.ile) << ',' << row.seed;
  return out.str();
}

std::string fugitive_summary_header() {
  return "experiment,setting,algorithm,n_trajectories,mean_ile,stddev_ile,trials,failures";
}

std::string fugitive_summary_row(const FugitivePoint& point) {
  std::ostringstream out;
  out << "fugitive," << point.setting << ',' << point.algorithm << ',' << point.n_trajectories << ','
      << format_double(point.mean_ile) << ',' << format_double(point.stddev_ile) << ','
      << point.trials << ',' << point.failures;
  return out.str();
}

Verdict fugitive_verdict(const std::vector<FugitivePoint>& points, double plateau_factor) {
  Verdict verdict;
  std::vector<std::string> settings;
  for (const auto& p : points) {
    if (std::find(settings.begin(), settings.end(), p.setting) == settings.end()) {
      settings.push_back(p.setting);
    }
  }
  if (settings.empty()) verdict.check(false, "no fugitive results");
  for (const auto& setting : settings) {
    int largest = 0;
    for (const auto& p : points) {
      if (p.setting == setting) largest = std::max(largest, p.n_trajectories);
    }
    auto mean = [&](const char* algorithm) {
      for (const auto& p : points) {
        if (p.setting == setting && p.n_trajectories == largest && p.algorithm == algorithm &&
            p.trials > 0) {
          return p.mean_ile;
        }
      }
      return std::nan("");
    };
    const double truth = mean(fugitive::kTrue);
    const double u = mean(fugitive::kUMaxCausalEnt);
    const std::string at = " (" + setting + ", N=" + std::to_string(largest) + ")";
    verdict.check(truth <= u, std::string("TRUE ") + format_double(truth) + " <= uMaxCausalEntIRL " +
                                  format_double(u) + at);
    for (const char* control : {fugitive::kMl, fugitive::kWoerr, fugitive::kHiddenDataEm}) {
      const double c = mean(control);
      verdict.check(u < c, std::string("uMaxCausalEntIRL ") + format_double(u) + " < " + control +
                               " " + format_double(c) + at);
    }
    if (setting == "low") {
      const double c = mean(fugitive::kHiddenDataEm);
      verdict.check(u <= plateau_factor * c, std::string("uMaxCausalEntIRL ") + format_double(u) +
                                                 " <= " + format_double(plateau_factor) +
                                                 " x cHiddenDataEM " + format_double(c) + at);
    }
  }
  return verdict;
}

}  // namespace umaxent
