#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace levelperc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Kernel parameters were rejected at construction.
class InvalidKernel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The far-field integral of the kernel diverges, so the field is almost
/// surely infinite everywhere and no finite truncation exists.
class NonIntegrableKernel : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive quadrature could not settle the value (distinct from divergence).
class QuadratureFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace kernels {

/// l(r) = 1 for r <= radius, 0 beyond.
struct Indicator {
    double radius = 1.0;

    double operator()(double r) const noexcept { return r <= radius ? 1.0 : 0.0; }
};

/// l(r) = amplitude * exp(-r / scale), cut to zero beyond `cutoff`.
struct Exponential {
    double scale = 1.0;
    double amplitude = 1.0;
    double cutoff = kInfinity;

    double operator()(double r) const noexcept
    {
        return r <= cutoff ? amplitude * std::exp(-r / scale) : 0.0;
    }
};

/// l(r) = amplitude * (r / scale)^(-exponent), optionally capped at
/// `amplitude` for r < scale, cut to zero beyond `cutoff`.
struct PowerLaw {
    double exponent = 3.0;
    double scale = 1.0;
    double amplitude = 1.0;
    bool capped = true;
    double cutoff = kInfinity;

    double operator()(double r) const noexcept
    {
        if (r > cutoff) {
            return 0.0;
        }
        if (capped && r <= scale) {
            return amplitude;
        }
        if (r == 0.0) {
            return kInfinity;
        }
        return amplitude * std::pow(r / scale, -exponent);
    }
};

/// Piecewise-linear through (radii[i], values[i]); constant values[0] below
/// radii[0], zero beyond radii.back().
struct Tabulated {
    std::vector<double> radii;
    std::vector<double> values;

    double operator()(double r) const noexcept;
};

} // namespace kernels

enum class KernelKind { indicator, exponential, power_law, truncated_power_law, tabulated };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string const& name);

/// An attenuation function l: (0, ∞) → [0, ∞), non-increasing, positive on
/// its support. Immutable once constructed; construction validates.
class AttenuationSpec {
public:
    using Params = std::variant<kernels::Indicator, kernels::Exponential, kernels::PowerLaw,
                                kernels::Tabulated>;

    static AttenuationSpec indicator(double radius);
    static AttenuationSpec exponential(double scale, double cutoff = kInfinity,
                                       double amplitude = 1.0);
    static AttenuationSpec power_law(double exponent, double scale = 1.0, double amplitude = 1.0,
                                     bool capped = true);
    static AttenuationSpec truncated_power_law(double exponent, double cutoff, double scale = 1.0,
                                               double amplitude = 1.0, bool capped = true);
    static AttenuationSpec tabulated(std::vector<double> radii, std::vector<double> values);
    /// Two whitespace-separated columns (radius, value), '#' comments allowed.
    static AttenuationSpec from_table_file(std::filesystem::path const& path);

    KernelKind kind() const noexcept { return kind_; }
    Params const& params() const noexcept { return params_; }

    /// r_l = sup{r : l(r) > 0}; +∞ for unbounded support.
    double support_radius() const noexcept { return support_; }
    /// l(0) = lim_{r→0} l(r); +∞ for unbounded kernels.
    double at_zero() const noexcept { return at_zero_; }
    bool continuous() const noexcept;

    /// l(r) for r >= 0; returns at_zero() at r = 0.
    double operator()(double r) const noexcept
    {
        return std::visit([r](auto const& k) { return k(r); }, params_);
    }

    /// Invoke `fn` with the concrete kernel functor (for hot loops).
    template <class Fn>
    decltype(auto) visit(Fn&& fn) const
    {
        return std::visit(std::forward<Fn>(fn), params_);
    }

    /// Radii where the kernel or its derivative jumps.
    std::vector<double> breakpoints() const;

    std::string describe() const;

private:
    AttenuationSpec(KernelKind kind, Params params);

    KernelKind kind_;
    Params params_;
    double support_ = kInfinity;
    double at_zero_ = kInfinity;
};

inline double evaluate(AttenuationSpec const& spec, double r) noexcept { return spec(r); }

/// ∫_a^∞ r^(d-1) l(r) dr with an explicit divergence flag.
struct TailIntegral {
    double lower = 0.0;
    int dimension = 2;
    double value = 0.0;
    bool finite = true;
    double abs_error = 0.0;
};

/// Closed-form tail integral (every built-in family admits one).
TailIntegral tail_integral(AttenuationSpec const& spec, double a, int d);
/// Same integral by adaptive quadrature; throws QuadratureFailure when the
/// integral neither converges nor is detected as divergent.
TailIntegral tail_integral_quadrature(AttenuationSpec const& spec, double a, int d);

/// ∫_a^∞ r^p l(r) dr for integer p >= 0 (closed form). +∞ when divergent.
double moment_tail(AttenuationSpec const& spec, double a, int p);

bool is_integrable(AttenuationSpec const& spec, int d);

/// Surface area of the unit (d-1)-sphere.
double unit_sphere_area(int d);
/// Volume of the unit d-ball.
double unit_ball_volume(int d);

/// Auxiliary kernel l̃_α(r): l(0) within α√d/2, else l shifted inward by α√d/2.
double sup_kernel(AttenuationSpec const& spec, double alpha, int d, double r) noexcept;

/// Smallest radius R (integer grid search then bisection) with
/// λ · |S^(d-1)| · ∫_R^∞ r^(d-1) l(r) dr <= budget. Finite-support kernels
/// return the support radius (zero truncation error).
double truncation_radius(AttenuationSpec const& spec, int d, double intensity, double budget);

} // namespace levelperc
