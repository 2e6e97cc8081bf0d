#include "spotvol/common.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace spotvol {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index) {
    std::uint64_t x = splitmix64(base);
    x = splitmix64(x ^ (0xA24BAED4963EE407ULL * (static_cast<std::uint64_t>(stream) + 1)));
    x = splitmix64(x ^ (0x9FB21C651E98DF25ULL * (index + 1)));
    return x;
}

unsigned thread_budget(unsigned requested) {
    unsigned n = requested;
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    if (const char* env = std::getenv("SPOTVOL_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0 && static_cast<unsigned>(cap) < n) {
            n = static_cast<unsigned>(cap);
        }
    }
    return n;
}

namespace {
thread_local bool inside_parallel_region = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned max_threads) {
    if (n == 0) return;
    unsigned workers = thread_budget(max_threads);
    if (workers > n) workers = static_cast<unsigned>(n);
    // Nested regions run serially so outer parallelism sets the thread count.
    if (workers <= 1 || inside_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            inside_parallel_region = true;
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void canonicalize_column_signs(Matrix& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            double v = vectors(r, c);
            if (v != 0.0) {
                if (v < 0.0) vectors.col(c) = -vectors.col(c);
                break;
            }
        }
    }
}

}  // namespace spotvol
