#include <catch2/catch.hpp>

#include <array>
#include <vector>

#include "iliad/rng.hpp"

using iliad::Rng;

TEST_CASE("identical seeds give identical sequences") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("named streams are independent of each other and the parent") {
    Rng root(7);
    Rng s1 = root.stream("task-sampling");
    Rng s2 = root.stream("policy-sampling");
    REQUIRE(s1.next_u64() != s2.next_u64());

    // drawing from one stream must not disturb another derived from the same root
    Rng r1(7), r2(7);
    Rng a = r1.stream("teacher-sampling");
    r2.stream("task-sampling").next_u64();
    Rng b = r2.stream("teacher-sampling");
    for (int i = 0; i < 10; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("indexed streams differ by index") {
    Rng root(11);
    REQUIRE(root.stream("seed", 0).next_u64() != root.stream("seed", 1).next_u64());
}

TEST_CASE("next_double stays in [0,1)") {
    Rng r(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("below is within range and roughly uniform") {
    Rng r(5);
    std::array<int, 7> hist{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) hist[r.below(7)]++;
    for (int c : hist) {
        REQUIRE(c > 0);
        // mean 10000, sd ~97; allow 6 sigma
        REQUIRE(std::abs(c - 10000) < 600);
    }
}

TEST_CASE("categorical respects weights") {
    Rng r(9);
    std::vector<double> w{0.2, 0.0, 0.8};
    int hits[3] = {0, 0, 0};
    const int n = 50000;
    for (int i = 0; i < n; ++i) hits[r.categorical(w)]++;
    REQUIRE(hits[1] == 0);
    REQUIRE(std::abs(hits[0] / double(n) - 0.2) < 0.01);
    REQUIRE(std::abs(hits[2] / double(n) - 0.8) < 0.01);
}
