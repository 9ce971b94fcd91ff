#pragma once

#include <functional>
#include <span>

namespace levelperc {

struct QuadratureOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-11;
    int max_subdivisions = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    bool converged = false;
};

/// Globally adaptive Gauss–Kronrod (7/15) integration on a finite interval.
/// `breakpoints` inside (a, b) seed the initial partition (jumps, kinks).
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints = {},
                           QuadratureOptions const& opts = {});

enum class TailStatus { converged, divergent, not_converged };

struct TailQuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    TailStatus status = TailStatus::not_converged;
};

/// Integrates f over [a, ∞) by summing finite pieces over doubling intervals.
/// Divergence is declared when the partial sum exceeds 1e12 or when the
/// pieces stop shrinking over several consecutive doublings.
TailQuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                           std::span<const double> breakpoints = {},
                                           QuadratureOptions const& opts = {});

} // namespace levelperc
