#pragma once

// The radio-tower fugitive scenario: a small grid world whose occupant heads
// for a safe house while a tower on the map edge reports noisy position
// pings, occasionally missing one (more often from behind the mountain).

#include "umaxent/experiment.hpp"
#include "umaxent/irl.hpp"
#include "umaxent/mdp.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace umaxent {

struct GridCell {
  int row;
  int col;
};

class MapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text map, one row per line, top row first:
//   '.' open, '#' mountain (blocked), 'A' safe house 1 (the goal),
//   'B' safe house 2, 'T' tower (on an open cell).
// Lines starting with ';' are comments. States number the open cells in
// row-major order.
class GridMap {
 public:
  static GridMap parse(const std::string& text);
  static GridMap load(const std::string& path);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_states() const { return static_cast<int>(cells_.size()); }
  bool blocked(int row, int col) const;
  // -1 for blocked or out-of-bounds cells.
  int state_at(int row, int col) const;
  GridCell cell(int state) const { return cells_.at(static_cast<std::size_t>(state)); }
  int goal() const { return goal_; }
  int decoy() const { return decoy_; }
  GridCell tower() const { return tower_; }

  // Euclidean distance between cell centres.
  double distance(int a, int b) const;
  double tower_distance(int state) const;
  // The straight line from the tower's centre to the state's centre passes
  // through the interior of a blocked cell.
  bool occluded(int state) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<bool> blocked_;
  std::vector<int> state_of_;
  std::vector<GridCell> cells_;
  int goal_ = -1;
  int decoy_ = -1;
  GridCell tower_{-1, -1};
};

enum Move : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3 };
inline constexpr int kNumMoves = 4;

// Intended move with probability `success`, each other move's result with
// (1 - success) / 3; moves into mountains or off the map stay put. S0 is
// uniform and the reward is 1 in the goal state.
Mdp build_fugitive_mdp(const GridMap& map, double discount = 0.95, double success = 0.9);

struct NoiseSetting {
  std::string name;
  double sigma = 0.5;            // Gaussian spread in grid units at the tower
  double sigma_growth = 0.25;    // spread multiplier 1 + sigma_growth * distance
  double base_miss = 0.05;
  double miss_growth = 0.25;     // miss multiplier 1 + miss_growth * distance
  double mountain_multiplier = 8.0;

  static NoiseSetting low();
  static NoiseSetting high();
  void validate() const;
};

// Symbols 0..|S|-1 name states; symbol |S| is "no ping received".
int miss_symbol(const GridMap& map);

StepChannel build_tower_channel(const GridMap& map, const NoiseSetting& setting);

namespace fugitive {
inline constexpr const char* kTrue = "TRUE";
inline constexpr const char* kMl = "ML";
inline constexpr const char* kWoerr = "WOERR";
inline constexpr const char* kHiddenDataEm = "cHiddenDataEM";
inline constexpr const char* kUMaxCausalEnt = "uMaxCausalEntIRL";
}  // namespace fugitive

struct FugitiveConfig {
  GridMap map;
  std::vector<NoiseSetting> settings{NoiseSetting::low(), NoiseSetting::high()};
  std::vector<int> grid{1, 2, 4, 8, 16, 32, 64};
  int trials = 50;
  std::uint64_t seed = 1;
  int workers = 1;
  int horizon = 8;
  double expert_reward_scale = 10.0;
  IrlConfig irl = [] {
    IrlConfig c;
    c.l2 = 0.01;
    return c;
  }();

  void validate() const;
};

struct FugitiveRow {
  std::string setting;
  std::string algorithm;
  int n_trajectories = 0;
  int trial = 0;
  double ile = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
};

struct FugitivePoint {
  std::string setting;
  int n_trajectories = 0;
  std::string algorithm;
  double mean_ile = 0.0;
  double stddev_ile = 0.0;
  int trials = 0;
  int failures = 0;
};

using FugitiveSink = std::function<void(const FugitiveRow&)>;

// Expert behavior: the soft policy of the true reward scaled by
// expert_reward_scale. ILE compares greedy discounted policies: optimal for
// the true reward versus optimal for each learned reward.
std::vector<FugitivePoint> run_fugitive_experiment(const FugitiveConfig& config,
                                                   const FugitiveSink& sink = {});

// ILE of the discounted greedy policy for `learned_reward` against the
// optimal policy, both under the mdp's true reward.
double greedy_ile(const Mdp& mdp, const Eigen::MatrixXd& learned_reward);

std::string fugitive_csv_header();
std::string fugitive_csv_row(const FugitiveRow& row);
std::string fugitive_summary_header();
std::string fugitive_summary_row(const FugitivePoint& point);

// At the largest N of every setting: TRUE <= uMaxCausalEntIRL < each
// control; in the setting named "low", uMaxCausalEntIRL is also at most
// `plateau_factor` times cHiddenDataEM.
Verdict fugitive_verdict(const std::vector<FugitivePoint>& points, double plateau_factor = 0.5);

}  // namespace umaxent
