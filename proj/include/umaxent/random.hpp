#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace umaxent {

using Rng = std::mt19937_64;

// Deterministic child seed for stream `index` of `master`. Trial seeds are
// derived this way so results never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
double uniform01(Rng& rng);

double uniform_real(Rng& rng, double lo, double hi);

// Uniform integer in [lo, hi].
int uniform_int(Rng& rng, int lo, int hi);

// Inverse-CDF draw from an unnormalized nonnegative weight vector.
Eigen::Index sample_index(const Eigen::Ref<const Eigen::VectorXd>& weights, Rng& rng);

// Symmetric-plus-boost Dirichlet draw; alphas must be positive.
Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& alphas, Rng& rng);

}  // namespace umaxent
