#include "mse/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "mse/errors.hpp"

namespace mse {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Engine substream(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::uint64_t state = seed;
    const std::uint64_t a = splitmix64(state);
    state ^= static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL;
    const std::uint64_t b = splitmix64(state);
    state ^= index * 0x8cb92ba72f3d8dd7ULL;
    const std::uint64_t c = splitmix64(state);
    const std::uint64_t d = splitmix64(state);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
    return Engine(seq);
}

void parallel_chunks(std::size_t count, std::size_t chunk_size, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    if (chunk_size == 0) throw Error(ErrorCode::InvalidArgument, "chunk size must be positive");
    const std::size_t chunks = (count + chunk_size - 1) / chunk_size;
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        body(c, begin, std::min(count, begin + chunk_size));
    };
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
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
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double draw_gamma(Engine& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) return 0.0;
    std::gamma_distribution<double> dist(shape, scale);
    return dist(rng);
}

std::int64_t draw_poisson(Engine& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

std::int64_t draw_binomial(Engine& rng, std::int64_t trials, double p) {
    if (trials <= 0 || !(p > 0.0)) return 0;
    if (p >= 1.0) return trials;
    std::binomial_distribution<std::int64_t> dist(trials, p);
    return dist(rng);
}

std::int64_t draw_negative_binomial(Engine& rng, double size, double fail_prob) {
    if (!(fail_prob > 0.0)) return 0;
    if (!(fail_prob < 1.0)) throw Error(ErrorCode::InvalidArgument, "negative binomial needs p < 1");
    const double rate = draw_gamma(rng, size, fail_prob / (1.0 - fail_prob));
    return draw_poisson(rng, rate);
}

}  // namespace mse
