#pragma once

#include "levelperc/field.hpp"
#include "levelperc/point_process.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace levelperc::detail {

/// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double x) noexcept
    {
        double const t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }
    double value() const noexcept { return sum + compensation; }
};

/// Euclidean distance, minimal image when `period` > 0.
inline double distance2(double const* a, double const* b, int d, double period) noexcept;

inline double distance(double const* a, double const* b, int d, double period) noexcept
{
    return std::sqrt(distance2(a, b, d, period));
}

/// Squared Euclidean distance, minimal image when `period` > 0.
inline double distance2(double const* a, double const* b, int d, double period) noexcept
{
    double acc = 0.0;
    for (int k = 0; k < d; ++k) {
        double dx = a[k] - b[k];
        if (period > 0.0) {
            dx -= period * std::nearbyint(dx / period);
        }
        acc += dx * dx;
    }
    return acc;
}

/// Uniform bucket grid with side about reach / kSubdivision. visit() calls
/// fn(distance, index) for each point within `reach` of y, in a fixed order
/// that depends only on the point set (not on the caller or thread).
class SpatialHash {
public:
    static constexpr int kSubdivision = 4;
    static constexpr int kMaxSpan = 2 * kSubdivision + 3;

    SpatialHash(PointSet const& points, double reach)
        : d_(points.window.dimension), reach_(reach), torus_(points.window.boundary == Boundary::torus)
    {
        if (d_ > kMaxDimension) {
            throw std::invalid_argument("dimension above the supported maximum");
        }
        double const half = torus_ ? points.window.half_width : points.window.sample_half_width();
        lo_ = -half;
        period_ = torus_ ? 2.0 * half : 0.0;
        std::size_t const n_points = points.size();
        double const span = 2.0 * half;
        double per_axis = (reach > 0.0 && span > 0.0) ? std::floor(span * kSubdivision / reach) : 1.0;
        // Cap the bucket count near the point count.
        double const cap = std::pow(4.0 * static_cast<double>(n_points) + 16.0, 1.0 / d_);
        per_axis = std::clamp(per_axis, 1.0, std::max(1.0, std::floor(cap)));
        nb_ = static_cast<int>(per_axis);
        side_ = span > 0.0 ? span / nb_ : 1.0;

        std::size_t total = 1;
        for (int k = 0; k < d_; ++k) {
            total *= static_cast<std::size_t>(nb_);
        }
        std::vector<std::size_t> bucket_of(n_points);
        start_.assign(total + 1, 0);
        for (std::size_t i = 0; i < n_points; ++i) {
            auto const p = points.point(i);
            std::size_t flat = 0;
            std::size_t mult = 1;
            for (int k = 0; k < d_; ++k) {
                flat += static_cast<std::size_t>(bin(p[k])) * mult;
                mult *= static_cast<std::size_t>(nb_);
            }
            bucket_of[i] = flat;
            ++start_[flat + 1];
        }
        for (std::size_t b = 0; b < total; ++b) {
            start_[b + 1] += start_[b];
        }
        coords_.resize(n_points * static_cast<std::size_t>(d_));
        index_.resize(n_points);
        std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < n_points; ++i) {
            auto const slot = fill[bucket_of[i]]++;
            auto const p = points.point(i);
            std::copy(p.begin(), p.end(), coords_.begin() + static_cast<std::ptrdiff_t>(slot * d_));
            index_[slot] = i;
        }
    }

    double period() const noexcept { return period_; }

    template <class Fn>
    void visit(double const* y, Fn&& fn) const
    {
        if (index_.empty()) {
            return;
        }
        std::array<std::array<int, kMaxSpan>, kMaxDimension> ids{};
        std::array<int, kMaxDimension> counts{};
        for (int k = 0; k < d_; ++k) {
            int const b_lo = static_cast<int>(std::floor((y[k] - reach_ - lo_) / side_));
            int const b_hi = static_cast<int>(std::floor((y[k] + reach_ - lo_) / side_));
            if (torus_) {
                if (b_hi - b_lo + 1 >= nb_) {
                    counts[k] = nb_;
                    for (int j = 0; j < nb_; ++j) {
                        ids[k][j] = j;
                    }
                } else {
                    counts[k] = b_hi - b_lo + 1;
                    for (int j = 0; j < counts[k]; ++j) {
                        ids[k][j] = ((b_lo + j) % nb_ + nb_) % nb_;
                    }
                }
            } else {
                int const lo = std::clamp(b_lo, 0, nb_ - 1);
                int const hi = std::clamp(b_hi, 0, nb_ - 1);
                counts[k] = hi - lo + 1;
                for (int j = 0; j < counts[k]; ++j) {
                    ids[k][j] = lo + j;
                }
            }
        }
        std::array<int, kMaxDimension> cursor{};
        auto const d = static_cast<std::size_t>(d_);
        double const reach2 = reach_ * reach_;
        while (true) {
            std::size_t flat = 0;
            std::size_t mult = 1;
            for (int k = 0; k < d_; ++k) {
                flat += static_cast<std::size_t>(ids[k][cursor[k]]) * mult;
                mult *= static_cast<std::size_t>(nb_);
            }
            for (std::size_t s = start_[flat]; s < start_[flat + 1]; ++s) {
                double const r2 = distance2(coords_.data() + s * d, y, d_, period_);
                if (r2 <= reach2 * (1.0 + 1e-15)) {
                    // sqrt(r2) is exactly distance(), so the cut matches brute force bit for bit.
                    double const r = std::sqrt(r2);
                    if (r <= reach_) {
                        fn(r, index_[s]);
                    }
                }
            }
            int k = 0;
            while (k < d_ && ++cursor[k] == counts[k]) {
                cursor[k] = 0;
                ++k;
            }
            if (k == d_) {
                break;
            }
        }
    }

private:
    int bin(double x) const noexcept
    {
        return static_cast<int>(std::clamp(std::floor((x - lo_) / side_), 0.0, static_cast<double>(nb_ - 1)));
    }

    int d_;
    double reach_;
    bool torus_;
    double lo_ = 0.0;
    double side_ = 1.0;
    double period_ = 0.0;
    int nb_ = 1;
    std::vector<std::size_t> start_;
    std::vector<double> coords_;
    std::vector<std::size_t> index_;
};

} // namespace levelperc::detail
