#include "mgp/streams.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mgp {

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6d67u};
  return Rng(seq);
}

unsigned worker_count() {
  if (const char* env = std::getenv("MGP_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void for_each_chunk(std::size_t n, std::uint64_t seed, unsigned workers,
                    const std::function<void(std::size_t, std::size_t, std::size_t, Rng&)>& body) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  auto run_chunk = [&](std::size_t c) {
    Rng rng = make_stream(seed, c);
    const std::size_t begin = c * kChunkSize;
    body(c, begin, std::min(n, begin + kChunkSize), rng);
  };
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          run_chunk(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mgp
