#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace levelperc;

TEST_CASE("same seed and stream reproduce the sequence")
{
    Rng a(42, 3), b(42, 3);
    for (int i = 0; i < 100; ++i) {
        CHECK(a() == b());
    }
}

TEST_CASE("streams and seeds give different sequences")
{
    Rng a(42, 0), b(42, 1), c(43, 0);
    auto const x = a();
    CHECK(x != b());
    CHECK(x != c());
}

TEST_CASE("split is a pure function of the parent and the index")
{
    Rng parent(7, 2);
    CHECK(parent.split(5)() == Rng(7, 2).split(5)());
    CHECK(parent.split(5)() != parent.split(6)());
}

TEST_CASE("uniform draws stay in [0, 1) with mean near one half")
{
    Rng r(9);
    double sum = 0.0;
    int const n = 200000;
    for (int i = 0; i < n; ++i) {
        double const u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // SE of the mean is sqrt(1/12/n) ~ 6.5e-4
    CHECK(std::abs(sum / n - 0.5) < 4 * 6.5e-4);
}

TEST_CASE("uniform_open_low never returns zero")
{
    Rng r(11);
    for (int i = 0; i < 10000; ++i) {
        CHECK(r.uniform_open_low() > 0.0);
    }
}

TEST_CASE("derived seeds are distinct across a task grid")
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a) {
        for (std::uint64_t b = 0; b < 20; ++b) {
            for (std::uint64_t c = 0; c < 20; ++c) {
                seen.insert(derive_seed(1, {a, b, c}));
            }
        }
    }
    CHECK(seen.size() == 8000);
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}
