#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace mgp {

using Rng = std::mt19937_64;

/// Independent stream for (seed, index). Same inputs, same stream.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

/// Number of worker threads, from MGP_WORKERS or hardware concurrency.
unsigned worker_count();

/// Fixed chunk size for Monte Carlo loops. Sample r always belongs to
/// chunk r / kChunkSize and draws from that chunk's stream, so results do
/// not depend on how many workers run.
inline constexpr std::size_t kChunkSize = 1u << 15;

/// Runs body(chunk_index, begin, end, rng) for every chunk of [0, n).
/// Chunks are handed out to `workers` threads; each chunk gets
/// make_stream(seed, chunk_index).
void for_each_chunk(std::size_t n, std::uint64_t seed, unsigned workers,
                    const std::function<void(std::size_t, std::size_t, std::size_t, Rng&)>& body);

/// Gamma(shape, rate) draw.
inline double draw_gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double draw_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace mgp
