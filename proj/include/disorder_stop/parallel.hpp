#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace dstop {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream, path). Streams separate the
/// backward-induction steps and evaluation passes; paths are the MC index.
inline Rng path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return Rng(mix(mix(mix(seed) ^ stream) ^ path));
}

/// 0 means one worker per hardware thread.
inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Fixed partition of [0, n) into blocks; results indexed by block are
/// merged by the caller in block order, so output does not depend on the
/// number of workers.
inline constexpr std::size_t kBlockSize = 1024;

inline std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

template <class Fn>
void parallel_blocks(std::size_t n, unsigned threads, Fn&& fn) {
    const std::size_t blocks = block_count(n);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), blocks));
    auto run = [&](std::size_t b) {
        const std::size_t begin = b * kBlockSize;
        fn(b, begin, std::min(n, begin + kBlockSize));
    };
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) run(b);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < blocks; b += workers) run(b);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

/// Running sum / sum of squares for a mean and its standard error.
struct MeanAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double v) noexcept {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    void merge(const MeanAccumulator& o) noexcept {
        sum += o.sum;
        sum_sq += o.sum_sq;
        count += o.count;
    }
    double mean() const noexcept { return count ? sum / static_cast<double>(count) : 0.0; }
    double std_error() const noexcept {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        const double m = sum / n;
        const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
        return std::sqrt(var / n);
    }
};

}  // namespace dstop
