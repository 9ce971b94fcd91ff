#pragma once

#include "levelperc/field.hpp"

#include <algorithm>
#include <deque>
#include <optional>
#include <vector>

// Brute-force cluster oracles that share nothing with the library's union-find.
namespace testing {

using levelperc::FieldGrid;
using levelperc::GridGeometry;

inline std::vector<std::size_t> neighbors(GridGeometry const& g, std::size_t cell)
{
    std::vector<std::size_t> out;
    for (int k = 0; k < g.dimension; ++k) {
        int const z = g.coordinate(cell, k);
        if (z > 0) {
            out.push_back(cell - g.stride(k));
        }
        if (z + 1 < g.cells_per_axis()) {
            out.push_back(cell + g.stride(k));
        }
    }
    return out;
}

/// Clusters of `occ` by breadth-first search; returns the axis-0 spanning count.
inline std::size_t bfs_spanning(GridGeometry const& g, std::vector<std::uint8_t> const& occ)
{
    std::vector<std::uint8_t> seen(occ.size(), 0);
    std::size_t spanning = 0;
    int const last = g.cells_per_axis() - 1;
    for (std::size_t s = 0; s < occ.size(); ++s) {
        if (!occ[s] || seen[s]) {
            continue;
        }
        bool lo = false, hi = false;
        std::deque<std::size_t> q{s};
        seen[s] = 1;
        while (!q.empty()) {
            auto const c = q.front();
            q.pop_front();
            lo |= g.coordinate(c, 0) == 0;
            hi |= g.coordinate(c, 0) == last;
            for (auto nb : neighbors(g, c)) {
                if (occ[nb] && !seen[nb]) {
                    seen[nb] = 1;
                    q.push_back(nb);
                }
            }
        }
        spanning += lo && hi;
    }
    return spanning;
}

inline std::vector<std::uint8_t> at_least(FieldGrid const& g, double h)
{
    std::vector<std::uint8_t> occ(g.values.size());
    for (std::size_t c = 0; c < occ.size(); ++c) {
        occ[c] = g.values[c] >= h;
    }
    return occ;
}

/// Largest distinct value h with a spanning at-least cluster, by bisection.
inline std::optional<double> brute_crossing(FieldGrid const& g)
{
    std::vector<double> levels(g.values.begin(), g.values.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    auto spans = [&](std::size_t i) { return bfs_spanning(g.geometry, at_least(g, levels[i])) > 0; };
    if (levels.empty() || !spans(0)) {
        return std::nullopt;
    }
    std::size_t lo = 0, hi = levels.size() - 1; // spans(lo) holds
    while (lo < hi) {
        auto const mid = (lo + hi + 1) / 2;
        if (spans(mid)) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return levels[lo];
}

} // namespace testing
