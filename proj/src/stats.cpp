#include "levelperc/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace levelperc {

Interval wilson_interval(std::size_t k, std::size_t n, double z)
{
    if (n == 0) {
        return {0.0, 1.0};
    }
    double const nn = static_cast<double>(n);
    double const p = static_cast<double>(k) / nn;
    double const z2 = z * z;
    double const denom = 1.0 + z2 / nn;
    double const center = (p + z2 / (2.0 * nn)) / denom;
    double const half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    // Clamp so the interval always contains p despite rounding at p = 0 or 1.
    return {std::min(p, std::max(0.0, center - half)), std::max(p, std::min(1.0, center + half))};
}

MeanError mean_and_std_error(std::span<const double> xs)
{
    if (xs.empty()) {
        return {};
    }
    double const n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    double const mean = sum / n;
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    double const var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

double quantile(std::vector<double> xs, double q)
{
    if (xs.empty()) {
        throw std::invalid_argument("quantile of empty data");
    }
    std::sort(xs.begin(), xs.end());
    double const pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
    auto const lo = static_cast<std::size_t>(std::floor(pos));
    auto const hi = std::min(lo + 1, xs.size() - 1);
    double const frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                               double min_expected)
{
    if (observed.size() != expected.size() || observed.empty()) {
        throw std::invalid_argument("chi_square_gof: size mismatch");
    }
    std::vector<double> obs, exp;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (exp[i] > 0.0) {
            r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
        }
    }
    r.degrees_of_freedom = obs.size() > 1 ? obs.size() - 1 : 0;
    if (r.degrees_of_freedom > 0) {
        boost::math::chi_squared dist(static_cast<double>(r.degrees_of_freedom));
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    }
    return r;
}

} // namespace levelperc
