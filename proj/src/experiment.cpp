#include "umaxent/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace umaxent {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double SampleSummary::standard_error() const {
  return count > 0 ? stddev / std::sqrt(static_cast<double>(count)) : 0.0;
}

SampleSummary summarize(const std::vector<double>& values) {
  SampleSummary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void Verdict::check(bool ok, const std::string& text) {
  checks.push_back(std::string(ok ? "PASS " : "FAIL ") + text);
  passed = passed && ok;
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) continue;
    int value = 0;
    const auto result = std::from_chars(item.data(), item.data() + item.size(), value);
    if (result.ec != std::errc() || result.ptr != item.data() + item.size() || value < 1) {
      throw std::invalid_argument("grid entry '" + item + "' is not a positive integer");
    }
    grid.push_back(value);
  }
  if (grid.empty()) throw std::invalid_argument("grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw std::invalid_argument("grid must be strictly ascending");
  }
  return grid;
}

}  // namespace umaxent
