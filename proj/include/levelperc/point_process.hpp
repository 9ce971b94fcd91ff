#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace levelperc {

enum class Boundary { hard, torus };

std::string to_string(Boundary b);
Boundary boundary_from_string(std::string const& name);

/// Observation box [-L, L]^d plus a sampling margin M: points are drawn in
/// [-L-M, L+M]^d. Torus windows wrap with period 2L and carry no margin.
struct Window {
    int dimension = 2;
    double half_width = 1.0;
    double margin = 0.0;
    Boundary boundary = Boundary::hard;

    /// Throws std::invalid_argument on a malformed window.
    void validate() const;
    double sample_half_width() const noexcept { return half_width + margin; }
    double sample_volume() const noexcept;
    double period() const noexcept { return 2.0 * half_width; }
};

/// A realized Poisson configuration, coordinates stored point-major.
struct PointSet {
    Window window;
    double intensity = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> coords;

    std::size_t size() const noexcept
    {
        return coords.size() / static_cast<std::size_t>(window.dimension);
    }
    std::span<const double> point(std::size_t i) const noexcept
    {
        auto const d = static_cast<std::size_t>(window.dimension);
        return {coords.data() + i * d, d};
    }
    void push_back(std::span<const double> p) { coords.insert(coords.end(), p.begin(), p.end()); }
};

/// Axis-aligned closed box.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    int dimension() const noexcept { return static_cast<int>(lo.size()); }
    double volume() const noexcept;
    bool contains(std::span<const double> p) const noexcept;
};

PointSet sample_poisson(Window const& window, double intensity, std::uint64_t seed);

/// Poisson configuration on `window` plus one independent uniform point in
/// the observation box [-L, L]^d. The Poisson part is identical to
/// sample_poisson(window, intensity, seed); the extra point is last.
PointSet sample_plus_one(Window const& window, double intensity, std::uint64_t seed);

// --- exact Poisson calculators -------------------------------------------

using LogPmf = std::function<double(std::size_t)>;

/// log P(X = k) for X ~ Poisson(λ).
LogPmf poisson_log_pmf(double intensity);

struct TailDominanceRow {
    std::size_t k;
    double lhs;    ///< P(X >= k | X >= 1)
    double rhs;    ///< P(X >= k - 1)
    double margin; ///< rhs - lhs
};

/// Both sides of P(X>=k | X>=1) <= P(X>=k-1) for k = 1..k_max, evaluated by
/// log-space accumulation. `log_pmf` defaults to Poisson(λ); tests inject
/// corrupted mass functions through it.
std::vector<TailDominanceRow> exact_tail_dominance(double intensity, std::size_t k_max,
                                                   LogPmf log_pmf = {});

/// d_TV(Poisson(λ), 1 + Poisson(λ)) as ½ Σ_k |p(k) - p(k-1)|, cross-checked
/// against the mode mass p(⌊λ⌋). Throws std::logic_error if they disagree.
double exact_tv_poisson_shift(double intensity);
double tv_poisson_shift_by_sum(double intensity);
double poisson_mode_mass(double intensity);

/// The closed form (λ^⌊λ⌋ + 1) / (⌊λ⌋ + 1)! · e^{-λ} that circulates for the
/// disagreement of an interval-based shift coupling. It falls below the exact
/// total variation (e.g. λ = 2), which no coupling can do; reported only.
double stated_shift_coupling_disagreement(double intensity);

struct CouplingReport {
    double intensity = 0.0;
    double exact_disagreement = 0.0;
    double empirical_disagreement = 0.0;
    std::size_t samples = 0;
    double z_score = 0.0;
    double mean_y0 = 0.0;
    double mean_y1 = 0.0;
    std::vector<std::size_t> histogram_y0;
    std::vector<std::size_t> histogram_y1;
};

/// Maximal coupling of Y0 ~ Poisson(λ) and Y1 ~ 1 + Poisson(λ): with
/// probability 1 - TV both equal a draw from the overlap min(p(k), p(k-1)),
/// otherwise each comes from its normalized residual.
CouplingReport couple_poisson_shift(double intensity, std::uint64_t seed, std::size_t samples);

struct TvBoundRow {
    int n;
    double tv;    ///< exact TV at λ = 4n²
    double bound; ///< 1/n
    bool holds;
};

std::vector<TvBoundRow> tv_bound_check(int n_max);

// --- conditioned and dominating samplers on cell partitions ---------------

/// Regions A_i given as unions of disjoint cells C_j.
struct CellPartition {
    std::vector<Box> cells;
    std::vector<std::vector<std::size_t>> regions;

    void validate() const;
    int dimension() const noexcept { return cells.empty() ? 0 : cells.front().dimension(); }
};

struct CellSample {
    PointSet points;
    std::vector<std::size_t> cell_counts;
    std::size_t attempts = 1;
};

class RejectionLimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact sample of a rate-λ Poisson process on ∪C_j conditioned on every
/// region containing at least one point (rejection sampling).
CellSample sample_conditioned_nonempty(CellPartition const& partition, double intensity,
                                       std::uint64_t seed, std::size_t max_attempts = 1'000'000);

/// Unconditioned rate-λ Poisson process on ∪C_j plus one uniform point per cell.
CellSample sample_dominating_sum(std::span<const Box> cells, double intensity, std::uint64_t seed);

// --- plain-text serialization (bit-exact) ---------------------------------

void write_point_set(std::ostream& out, PointSet const& points);
PointSet read_point_set(std::istream& in);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);
double parse_double(std::string const& text);

} // namespace levelperc
