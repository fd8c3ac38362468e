#include "umaxent/random.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace umaxent {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1342543de82ef95ULL + 1));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

int uniform_int(Rng& rng, int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return lo + static_cast<int>(x % span);
}

Eigen::Index sample_index(const Eigen::Ref<const Eigen::VectorXd>& weights, Rng& rng) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw std::invalid_argument("sample_index: weights must have positive mass");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& alphas, Rng& rng) {
  Eigen::VectorXd draw(alphas.size());
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw std::invalid_argument("sample_dirichlet: alphas must be positive");
    std::gamma_distribution<double> gamma(alphas[i], 1.0);
    draw[i] = std::max(gamma(rng), 1e-300);
  }
  return draw / draw.sum();
}

}  // namespace umaxent
