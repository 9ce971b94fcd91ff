#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace levelperc {

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Wilson score interval for k successes in n trials at normal quantile z.
Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct MeanError {
    double mean = 0.0;
    double std_error = 0.0;
};

MeanError mean_and_std_error(std::span<const double> xs);

/// Linear-interpolation quantile (type 7) of unsorted data, q in [0, 1].
double quantile(std::vector<double> xs, double q);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t degrees_of_freedom = 0;
    double p_value = 1.0;
};

/// Pearson goodness of fit; bins with expected count below `min_expected`
/// are pooled into their neighbor.
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                               double min_expected = 5.0);

} // namespace levelperc
