#pragma once

// Plumbing shared by the experiment harnesses: an ordered worker pool,
// CSV formatting and summary statistics.

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace umaxent {

// Runs produce(i) for i in [0, count) on `workers` threads and hands each
// result to emit(i, result) strictly in index order, as soon as the prefix
// is complete. Output is therefore independent of scheduling.
template <typename T>
void run_ordered(std::size_t count, int workers, const std::function<T(std::size_t)>& produce,
                 const std::function<void(std::size_t, T&)>& emit) {
  std::mutex mutex;
  std::map<std::size_t, T> pending;
  std::size_t next_claim = 0;
  std::size_t next_emit = 0;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      std::size_t index;
      {
        std::lock_guard lock(mutex);
        if (failure || next_claim >= count) return;
        index = next_claim++;
      }
      try {
        T value = produce(index);
        std::lock_guard lock(mutex);
        pending.emplace(index, std::move(value));
        while (!pending.empty() && pending.begin()->first == next_emit) {
          emit(next_emit, pending.begin()->second);
          pending.erase(pending.begin());
          ++next_emit;
        }
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int threads = workers < 1 ? 1 : workers;
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// Round-trippable and locale-independent rendering of a double.
std::string format_double(double value);

// Mean and sample standard deviation (n - 1 denominator; 0 for n < 2).
struct SampleSummary {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;

  double standard_error() const;
};
SampleSummary summarize(const std::vector<double>& values);

struct Verdict {
  bool passed = true;
  std::vector<std::string> checks;  // "PASS ..." / "FAIL ..." lines

  void check(bool ok, const std::string& text);
};

// Parses "10,100,1000" into ascending positive integers.
std::vector<int> parse_grid(const std::string& text);

}  // namespace umaxent
