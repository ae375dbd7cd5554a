#pragma once
// Reproducible random streams.
//
// Every parallel unit of work (a chunk of draws, a simulation replicate)
// gets its own engine keyed by (seed, stream, index). Output therefore
// depends on the seed and the fixed chunk size only, never on how many
// threads execute the chunks.

#include <cstdint>
#include <functional>
#include <random>

namespace mse {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20240101;
inline constexpr std::size_t kDrawChunkSize = 4096;

// Stream identifiers keep the stages of one pipeline independent.
enum class Stream : std::uint64_t {
    Dirichlet = 1,
    Rejection = 2,
    PopulationDraw = 3,
    Simulation = 4,
    StudyEstimator = 5,
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

Engine substream(std::uint64_t seed, Stream stream, std::uint64_t index);

// Runs body(chunk, begin, end) over [0, count) in chunks of chunk_size.
// threads == 0 picks the hardware concurrency.
void parallel_chunks(std::size_t count, std::size_t chunk_size, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

// Samplers used across the library, written against the engine directly.
double draw_gamma(Engine& rng, double shape, double scale);
std::int64_t draw_poisson(Engine& rng, double mean);
std::int64_t draw_binomial(Engine& rng, std::int64_t trials, double p);

// Number of failures before `size` successes, each trial failing with
// probability fail_prob; drawn as a Gamma-Poisson mixture.
std::int64_t draw_negative_binomial(Engine& rng, double size, double fail_prob);

}  // namespace mse
