#include "levelperc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace levelperc {

namespace {

// Kronrod 15-point abscissae; odd indices are the Gauss 7-point nodes.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(Segment const& other) const { return error < other.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b)
{
    double const center = 0.5 * (a + b);
    double const half = 0.5 * (b - a);
    double const fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        double const dx = half * kXgk[j];
        double const fsum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * fsum;
        if (j % 2 == 1) {
            gauss += kWg[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    double err = std::abs(kronrod - gauss);
    // Guard against lucky agreement on very coarse segments.
    err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(kronrod));
    return {a, b, kronrod, err};
}

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, QuadratureOptions const& opts)
{
    if (!(b > a)) {
        return {0.0, 0.0, true};
    }
    std::vector<double> cuts{a};
    for (double p : breakpoints) {
        if (p > a && p < b) {
            cuts.push_back(p);
        }
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Segment> heap;
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto seg = gk15(f, cuts[i], cuts[i + 1]);
        total += seg.value;
        error += seg.error;
        heap.push(seg);
    }
    int subdivisions = 0;
    while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
        if (subdivisions >= opts.max_subdivisions || !std::isfinite(total)) {
            return {total, error, false};
        }
        auto worst = heap.top();
        heap.pop();
        double const mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            return {total, error, false};
        }
        auto left = gk15(f, worst.a, mid);
        auto right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    total = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    return {total, error, true};
}

TailQuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                           std::span<const double> breakpoints,
                                           QuadratureOptions const& opts)
{
    constexpr double kDivergenceCeiling = 1e12;
    constexpr int kStallRun = 8;
    constexpr int kMaxDoublings = 1000;

    double lo = a;
    double hi = std::max(2.0 * a, 1.0);
    double total = 0.0;
    double error = 0.0;
    double previous_piece = -1.0;
    int stall = 0;
    for (int k = 0; k < kMaxDoublings; ++k) {
        auto piece = integrate(f, lo, hi, breakpoints, opts);
        if (!piece.converged && piece.abs_error > 1e-6 * std::abs(piece.value)) {
            return {total, error, TailStatus::not_converged};
        }
        total += piece.value;
        error += piece.abs_error;
        if (!std::isfinite(total) || total > kDivergenceCeiling) {
            return {total, error, TailStatus::divergent};
        }
        double const mag = std::abs(piece.value);
        if (mag <= std::max(opts.abs_tol, 1e-15 * std::abs(total)) && hi > 1.0) {
            // Exhausted; another piece confirms we are not in a gap of a support.
            auto next = integrate(f, hi, 2.0 * hi, breakpoints, opts);
            if (std::abs(next.value) <= std::max(opts.abs_tol, 1e-15 * std::abs(total))) {
                return {total + next.value, error + next.abs_error, TailStatus::converged};
            }
        }
        if (previous_piece > 0.0 && mag >= previous_piece * (1.0 - 1e-9)) {
            if (++stall >= kStallRun) {
                return {total, error, TailStatus::divergent};
            }
        } else {
            stall = 0;
        }
        previous_piece = mag;
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) {
            break;
        }
    }
    return {total, error, TailStatus::not_converged};
}

} // namespace levelperc
