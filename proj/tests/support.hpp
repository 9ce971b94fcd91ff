#pragma once

#include "levelperc/point_process.hpp"
#include "levelperc/rng.hpp"

#include <cstdlib>
#include <filesystem>
#include <string>

namespace testing {

/// Scratch directory unique to `name`, emptied on creation.
inline std::filesystem::path scratch(std::string const& name)
{
    char const* base = std::getenv("LEVELPERC_TEST_TMP");
    std::filesystem::path dir = base ? base : std::filesystem::temp_directory_path() / "levelperc-tests";
    dir /= name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random fixture parameters for hand-rolled property tests.
struct Gen {
    levelperc::Rng rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return rng.uniform(lo, hi); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)); }
    std::uint64_t seed() { return rng(); }
};

} // namespace testing
