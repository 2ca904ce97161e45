#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "glfield/parallel.hpp"
#include "glfield/rng.hpp"

using glfield::Rng;

TEST_CASE("streams are pure functions of (key, counter)", "[rng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derive separates substreams", "[rng]") {
    std::set<std::uint64_t> keys;
    for (std::uint64_t tag = 0; tag < 1000; ++tag)
        keys.insert(Rng::derive(7, tag));
    REQUIRE(keys.size() == 1000);
    // order of tags matters
    REQUIRE(Rng::derive(7, {1, 2}) != Rng::derive(7, {2, 1}));
}

TEST_CASE("doubles land in the contracted ranges", "[rng]") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        double v = rng.next_open_double();
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
        REQUIRE(rng.next_exp() >= 0.0);
    }
}

TEST_CASE("next_below is in range and roughly uniform", "[rng]") {
    Rng rng(11);
    std::vector<int> hist(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        std::uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        ++hist[v];
    }
    for (int c : hist) // 5 sigma band around n/7 = 10000
        REQUIRE(std::abs(c - n / 7) < 5 * std::sqrt(10000.0 * 6.0 / 7.0));
}

TEST_CASE("unit exponential has the right first moments", "[rng]") {
    Rng rng(5);
    double s = 0, ss = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double e = rng.next_exp();
        s += e;
        ss += e * e;
    }
    REQUIRE(s / n == Catch::Approx(1.0).margin(0.01));
    REQUIRE(ss / n == Catch::Approx(2.0).margin(0.05));
}

TEST_CASE("parallel_for result is independent of the worker count", "[rng]") {
    auto run = [](std::size_t jobs) {
        std::vector<double> out(500);
        glfield::parallel_for(jobs, out.size(), [&](std::size_t i) {
            Rng rng(Rng::derive(99, i));
            out[i] = rng.next_double();
        });
        return out;
    };
    REQUIRE(run(1) == run(4));
    REQUIRE(run(2) == run(7));
}
