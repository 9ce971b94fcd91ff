#pragma once

#include "levelperc/attenuation.hpp"
#include "levelperc/point_process.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace levelperc {

inline constexpr int kMaxDimension = 4;
/// Distances at or below this count as coincident with a point.
inline constexpr double kCoincidence = 1e-12;

enum class FieldMode { exact_center, sup_bound };

std::string to_string(FieldMode m);
FieldMode field_mode_from_string(std::string const& name);

/// α-lattice of closed boxes B(zα, α) covering [-L, L]^d. Cell centers sit at
/// zα for |z_i| <= m, so the origin is the center of a unique cell. Flat
/// indices run with axis 0 fastest.
struct GridGeometry {
    int dimension = 2;
    double half_width = 1.0;
    double alpha = 1.0;
    int half_cells = 0;

    static GridGeometry covering(int dimension, double half_width, double alpha);

    int cells_per_axis() const noexcept { return 2 * half_cells + 1; }
    std::size_t cell_count() const noexcept;
    std::size_t stride(int axis) const noexcept;
    int coordinate(std::size_t cell, int axis) const noexcept;
    double center(std::size_t cell, int axis) const noexcept
    {
        return (coordinate(cell, axis) - half_cells) * alpha;
    }
    std::size_t origin_cell() const noexcept;

    bool operator==(GridGeometry const&) const = default;
};

struct FieldGrid {
    GridGeometry geometry;
    FieldMode mode = FieldMode::exact_center;
    double tail_budget = 0.0;
    double truncation_radius = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> values; ///< +∞ marks cells sitting on an atom of an unbounded kernel
};

/// Ψ(y) = Σ_{|x-y| <= R} l(|x-y|), distances per the window's boundary mode.
double evaluate_point(PointSet const& points, AttenuationSpec const& spec,
                      std::span<const double> y, double radius);

/// Field on the α-lattice covering the points' observation window. In
/// sup-bound mode each value is Ψ̃ at the cell center, which bounds the field's
/// supremum over the cell. Parallel over cells (OpenMP), with a fixed
/// per-cell summation order, so results do not depend on the thread count.
FieldGrid field_on_grid(PointSet const& points, AttenuationSpec const& spec, double alpha,
                        double radius, FieldMode mode, double tail_budget = 0.0);

namespace reference {
/// Serial brute-force version of field_on_grid (every point, every cell).
FieldGrid field_on_grid(PointSet const& points, AttenuationSpec const& spec, double alpha,
                        double radius, FieldMode mode, double tail_budget = 0.0);
} // namespace reference

/// λ · |S^(d-1)| · ∫_0^∞ r^(d-1) l(r) dr; +∞ when the integral diverges.
double expected_field_value(AttenuationSpec const& spec, double intensity, int dimension);

struct CampbellCheck {
    std::string description;
    double parameter = 0.0; ///< MGF parameter s (unused for the mean)
    double analytic = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;
    bool heavy_tailed = false; ///< relative standard error above 10 %

    double z_score() const noexcept
    {
        return std_error > 0.0 ? (estimate - analytic) / std_error : 0.0;
    }
};

/// E[exp(s Σ_x g(|x|))] over a rate-λ Poisson process in the ball of radius
/// `domain_radius`, analytically (quadrature of the exponent) and by Monte
/// Carlo. Requires s · sup g <= 1.
CampbellCheck campbell_mgf(AttenuationSpec const& g, double s, double domain_radius,
                           double intensity, int dimension, std::size_t draws, std::uint64_t seed);

/// Monte Carlo mean of Ψ(o) against expected_field_value, truncating at the
/// radius that discards at most `budget` in expectation.
CampbellCheck campbell_mean(AttenuationSpec const& spec, double intensity, int dimension,
                            std::size_t replicates, std::uint64_t seed, double budget = 1e-6);

/// Ψ(o) restricted to points within each radius of `radii` (ascending), from
/// one Poisson realization generated shell by shell in radius. Memory stays
/// O(1) in the number of points, so very large radii are affordable.
std::vector<double> origin_field_by_radius(AttenuationSpec const& spec, double intensity,
                                           int dimension, std::span<const double> radii,
                                           std::uint64_t seed);

/// 1 for cells whose center is at least `distance` from every point.
std::vector<std::uint8_t> cells_far_from_points(GridGeometry const& geometry, PointSet const& points,
                                                double distance);

struct ContinuityReport {
    double max_gap = 0.0;
    std::vector<std::size_t> histogram; ///< 32 equal bins on [0, max_gap]
    std::size_t pairs = 0;
    std::size_t infinite_cells = 0;
};

/// Largest |Ψ(c1) - Ψ(c2)| over axis-adjacent cell pairs. Cells holding +∞,
/// or masked out by `include` (when given), are skipped.
ContinuityReport continuity_modulus(FieldGrid const& grid, std::span<const std::uint8_t> include = {});

struct XiFieldReport {
    double direct = 0.0;     ///< sum over lattice points within the radius
    double tail_bound = 0.0; ///< integral bound on the remainder
    double value = 0.0;      ///< direct + tail_bound
    double i_alpha = 0.0;    ///< ∫_{α/2}^∞ r^(d-1) l(r) dr
    double ratio = 0.0;      ///< value / (i_alpha / α^d)
    std::size_t contributing_boxes = 0;
};

/// Ψ̃ at the origin for the deterministic configuration with one point per
/// α-box outside the central box A_o (side α(4⌈√d⌉+1)), placed at the box's
/// point closest to the origin.
XiFieldReport deterministic_xi_field(AttenuationSpec const& spec, double alpha, int dimension,
                                     double radius);

struct GoodBoxReport {
    double fraction = 0.0;
    double expected = 0.0;
    double std_error = 0.0; ///< block bootstrap
    std::size_t boxes = 0;
};

/// Fraction of α-boxes B in the observation window whose concentric box
/// A_α(B) of side α(4⌈√d⌉+1) holds no point, versus exp(-λ |A_α|).
GoodBoxReport good_box_fraction(PointSet const& points, double alpha,
                                std::size_t bootstrap_samples = 200, std::uint64_t seed = 1);

void write_field_grid(std::ostream& out, FieldGrid const& grid);
FieldGrid read_field_grid(std::istream& in);
/// Plain (ASCII) graymap of a 2-d grid, or of the central axis-2 slice for
/// d >= 3; values mapped linearly from [lo, hi] onto 0..255.
void write_graymap(std::ostream& out, FieldGrid const& grid, double lo, double hi);

} // namespace levelperc
