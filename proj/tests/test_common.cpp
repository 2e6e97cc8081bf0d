#include <atomic>
#include <cstdlib>
#include <set>
#include <vector>

#include "doctest.h"
#include "spotvol/common.hpp"

using namespace spotvol;

TEST_SUITE_BEGIN("common");

TEST_CASE("derived seeds are reproducible and separated by stream and index") {
    const std::uint64_t a = derive_seed(42, Stream::Noise, 7);
    CHECK(a == derive_seed(42, Stream::Noise, 7));
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {1ULL, 2ULL, 42ULL}) {
        for (Stream s : {Stream::Rho, Stream::Noise, Stream::Replication}) {
            for (std::uint64_t i = 0; i < 50; ++i) {
                seen.insert(derive_seed(base, s, i));
            }
        }
    }
    CHECK(seen.size() == 3 * 3 * 50);
}

TEST_CASE("splitmix64 matches its reference outputs") {
    // First three outputs of the published splitmix64 with state 1234567.
    std::uint64_t s = 1234567;
    const std::uint64_t expected[3] = {6457827717110365317ULL, 3203168211198807973ULL,
                                       9817491932198370423ULL};
    for (std::uint64_t e : expected) {
        const std::uint64_t v = splitmix64(s);
        s += 0x9E3779B97F4A7C15ULL;
        CHECK(v == e);
    }
}

TEST_CASE("parallel_for visits every index exactly once") {
    const std::size_t n = 1000;
    std::vector<std::atomic<int>> hits(n);
    for (auto& h : hits) h.store(0);
    parallel_for(n, [&](std::size_t i) { hits[i].fetch_add(1); }, 0);
    for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}

TEST_CASE("parallel_for propagates the first failure") {
    CHECK_THROWS_AS(
        parallel_for(64, [](std::size_t i) {
            if (i == 13) throw OutOfRange("boom");
        }, 4),
        OutOfRange);
}

TEST_CASE("nested parallel_for still covers all work") {
    std::atomic<long> total{0};
    parallel_for(8, [&](std::size_t) {
        parallel_for(8, [&](std::size_t) { total.fetch_add(1); }, 0);
    }, 0);
    CHECK(total.load() == 64);
}

TEST_CASE("sign canonicalization makes the first nonzero entry positive") {
    Matrix V(3, 2);
    V << 0.0, -2.0, -1.0, 0.5, 2.0, 1.0;
    canonicalize_column_signs(V);
    CHECK(V(1, 0) == 1.0);
    CHECK(V(2, 0) == -2.0);
    CHECK(V(0, 1) == 2.0);
}

TEST_CASE("thread budget honors the environment cap") {
    // Only observable when hardware has more than one core; the cap may only lower.
    CHECK(thread_budget(4) <= 4);
    CHECK(thread_budget(1) == 1);
}

TEST_SUITE_END();
