// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "umaxent/fugitive.hpp"
#include "umaxent/properties.hpp"
#include "umaxent/random_program.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace umaxent;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool passed = true;
  std::vector<std::string> notes;

  void add(const PropertyResult& r) {
    passed = passed && r.passed;
    notes.push_back(describe(r));
  }
  void add(bool ok, const std::string& note) {
    passed = passed && ok;
    notes.push_back(std::string(ok ? "PASS " : "FAIL ") + note);
  }
  void add(const Verdict& v) {
    passed = passed && v.passed;
    notes.insert(notes.end(), v.checks.begin(), v.checks.end());
  }
  void within(double elapsed, double limit) {
    std::ostringstream text;
    text << "runtime " << elapsed << " s (limit " << limit << " s)";
    add(elapsed < limit, text.str());
  }
};

int failures = 0;

void report(int number, const std::string& title, const Outcome& outcome) {
  std::cout << (outcome.passed ? "PASS" : "FAIL") << " criterion " << number << ": " << title << '\n';
  for (const auto& note : outcome.notes) std::cout << "    " << note << '\n';
  std::cout.flush();
  if (!outcome.passed) ++failures;
}

Outcome timed_property(PropertyResult (*check)(const PropertyOptions&, int), int instances,
                       double limit) {
  Outcome out;
  const auto start = Clock::now();
  out.add(check({}, instances));
  out.within(seconds_since(start), limit);
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Runs the CLI twice with the same flags and compares every CSV byte for byte.
void compare_cli_runs(Outcome& out, const std::string& name, const std::string& flags) {
  const fs::path root = fs::path(UMAXENT_SCRATCH) / name;
  fs::remove_all(root);
  for (const char* pass : {"a", "b"}) {
    const std::string command = std::string("\"") + UMAXENT_CLI + "\" " + flags + " --out \"" +
                                (root / pass).string() + "\" > \"" + (root.string() + "_" + pass) +
                                ".log\" 2>&1";
    fs::create_directories(root);
    const int status = std::system(command.c_str());
    if (status != 0) {
      out.add(false, name + ": run " + pass + " exited with status " + std::to_string(status));
      return;
    }
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path other = root / "b" / entry.path().filename();
    const bool same = fs::exists(other) && slurp(entry.path()) == slurp(other);
    out.add(same, name + ": " + entry.path().filename().string() +
                      (same ? " byte-identical" : " differs between identical runs"));
    ++compared;
  }
  if (compared == 0) out.add(false, name + ": no CSV written");
}

}  // namespace

int main() {
  report(1, "dual gradient matches central differences",
         timed_property(check_dual_gradient, 100, 10.0));
  report(2, "MaxEnt inversion recovers the generating distribution",
         timed_property(check_maxent_inversion, 50, 30.0));

  {
    Outcome out;
    out.add(check_identity_reduction({}, 50));
    out.add(check_latent_reduction({}, 50));
    report(3, "identity and partition channels reduce to MaxEnt and latent MaxEnt", out);
  }
  {
    Outcome out;
    out.add(check_em_monotone({}, 50));
    out.add(check_em_constraints({}, 50));
    report(4, "EM likelihood is non-decreasing and converged constraints hold", out);
  }
  {
    Outcome out;
    out.add(check_infinite_data({}, 100));
    report(5, "exact observation probabilities: the truth satisfies the constraints", out);
  }
  {
    Outcome out;
    const auto start = Clock::now();
    try {
      const auto points = run_figure1(Figure1Config{});
      for (const auto& p : points) {
        std::ostringstream text;
        text << "N=" << p.n_observations << ' ' << p.algorithm << " mean KLD " << p.mean_kld
             << " (sd " << p.stddev_kld << ", " << p.trials << " trials, " << p.failures << " failed)";
        out.notes.push_back(text.str());
      }
      out.add(figure1_verdict(points));
    } catch (const std::exception& e) {
      out.add(false, std::string("figure1 run threw: ") + e.what());
    }
    out.within(seconds_since(start), 15.0 * 60.0);
    report(6, "random-program KLD ordering at default scale", out);
  }
  report(7, "forward-backward matches path enumeration",
         timed_property(check_forward_backward, 200, 60.0));
  {
    Outcome out;
    const auto r = check_irl_self_consistency({}, 10000);
    out.add(r.counts);
    out.add(r.ile);
    report(8, "MaxCausalEnt IRL self-consistency on 10^4 trajectories", out);
  }
  {
    Outcome out;
    const auto start = Clock::now();
    try {
      FugitiveConfig config;
      config.map = GridMap::load(UMAXENT_DATA_DIR "/fugitive.map");
      const auto points = run_fugitive_experiment(config);
      for (const auto& p : points) {
        if (p.n_trajectories != config.grid.back()) continue;
        std::ostringstream text;
        text << p.setting << " N=" << p.n_trajectories << ' ' << p.algorithm << " mean ILE "
             << p.mean_ile << " (sd " << p.stddev_ile << ", " << p.trials << " trials, "
             << p.failures << " failed)";
        out.notes.push_back(text.str());
      }
      out.add(fugitive_verdict(points));
    } catch (const std::exception& e) {
      out.add(false, std::string("fugitive run threw: ") + e.what());
    }
    out.within(seconds_since(start), 30.0 * 60.0);
    report(9, "fugitive ILE ordering at default scale", out);
  }
  {
    Outcome out;
    compare_cli_runs(out, "figure1", "--experiment figure1 --seed 11 --trials 5 --workers 2");
    compare_cli_runs(out, "fugitive", "--experiment fugitive --seed 11 --trials 2 --grid 1,8,64 --workers 2");
    compare_cli_runs(out, "properties", "--experiment properties --seed 11");
    report(10, "experiment commands emit byte-identical CSV on repeat runs", out);
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << '\n';
  return failures == 0 ? 0 : 1;
}
