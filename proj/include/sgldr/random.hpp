#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace sgldr {

using Rng = std::mt19937_64;

// Step tag used for the stream that draws a particle's initial position.
inline constexpr std::uint64_t kInitStreamStep = ~std::uint64_t{0};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Independent stream for (seed, step, particle). Streams for different particles
// never depend on the particle count, so resizing the ensemble leaves the other
// particles' draws untouched.
Rng particle_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t particle);

// Fills `out` with iid N(0, 1) draws from `rng`, in index order.
void fill_standard_normal(Rng& rng, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace sgldr
