#pragma once

#include "levelperc/attenuation.hpp"
#include "levelperc/field.hpp"
#include "levelperc/point_process.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace levelperc {

enum class Comparison { at_least, strictly_above };

std::string to_string(Comparison c);
Comparison comparison_from_string(std::string const& name);

struct LevelSetGrid {
    GridGeometry geometry;
    double level = 0.0;
    Comparison mode = Comparison::at_least;
    std::vector<std::uint8_t> occupied;

    std::size_t occupied_count() const noexcept;
};

/// Exact binary comparison against h; +∞ cells are occupied in both modes.
LevelSetGrid threshold(FieldGrid const& grid, double h, Comparison mode);

/// Face bits: 2k for the lower face of axis k, 2k+1 for the upper face.
using FaceMask = std::uint8_t;

struct ClusterInfo {
    std::size_t id = 0; ///< smallest cell index in the cluster
    std::size_t size = 0;
    FaceMask faces = 0;

    bool spans(int axis) const noexcept
    {
        return ((faces >> (2 * axis)) & 3u) == 3u;
    }
};

struct ClusterLabels {
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    GridGeometry geometry;
    std::vector<std::size_t> label;    ///< canonical cluster id per cell, kNone when empty
    std::vector<ClusterInfo> clusters; ///< sorted by id

    ClusterInfo const* cluster_of(std::size_t cell) const;
};

/// Edge-adjacency (2d neighbors) union-find labeling.
ClusterLabels label_clusters(LevelSetGrid const& levelset);

struct SpanningCounts {
    std::size_t count = 0; ///< clusters joining the two axis-0 faces
    std::array<std::size_t, kMaxDimension> per_axis{};
};

SpanningCounts spanning_count(ClusterLabels const& labels);

/// Largest h whose at-least level set has a cluster joining the axis-0 faces,
/// found by inserting cells in decreasing value. Empty when no h works.
std::optional<double> crossing_threshold(FieldGrid const& grid);

/// Everything one replicate contributes to a sweep, for all h at once.
struct LevelTrace {
    std::optional<double> h_cross;
    /// Largest h at which the origin cell's at-least cluster touches the
    /// window boundary; -∞ when never.
    double origin_bottleneck = 0.0;
    /// (v, c): after inserting every cell with value >= v, c clusters span
    /// axis 0. Only changes of c are stored, in decreasing v.
    std::vector<std::pair<double, std::size_t>> spanning_steps;

    bool origin_connected(double h, Comparison mode) const noexcept
    {
        return mode == Comparison::at_least ? origin_bottleneck >= h : origin_bottleneck > h;
    }
    std::size_t spanning_at(double h, Comparison mode) const noexcept;
};

LevelTrace trace_levels(FieldGrid const& grid);

struct SweepSettings {
    AttenuationSpec kernel = AttenuationSpec::exponential(1.0);
    double intensity = 1.0;
    int dimension = 2;
    std::vector<double> window_sizes{16.0};
    double alpha = 0.25;
    std::vector<double> levels; ///< ascending
    std::size_t replicates = 10;
    std::uint64_t seed = 1;
    double tail_budget = 1e-3;
    FieldMode field_mode = FieldMode::exact_center;

    void validate() const;
};

struct ReplicateRecord {
    double window = 0.0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    LevelTrace trace;
};

struct ThetaRow {
    double h = 0.0;
    Comparison mode = Comparison::at_least;
    double window = 0.0;
    std::size_t replicates = 0;
    std::size_t hits = 0;
    double theta = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double std_error = 0.0;
};

struct SweepResult {
    double intensity = 0.0;
    double alpha = 0.0;
    std::vector<double> window_sizes;
    std::vector<double> levels;
    std::vector<ReplicateRecord> records; ///< ordered by (window, replicate)
    std::vector<ThetaRow> theta;          ///< ordered by (window, h, mode)

    std::vector<ReplicateRecord const*> records_for(double window) const;
};

/// Seed of one replicate, a pure function of the task coordinates.
std::uint64_t replicate_seed(SweepSettings const& s, double window, std::size_t replicate);

/// Sample points, evaluate the field, and trace one replicate.
ReplicateRecord simulate_replicate(SweepSettings const& s, double window, std::size_t replicate);

/// Builds θ̂ rows (both modes, Wilson 95 % intervals) from finished records.
SweepResult aggregate_sweep(SweepSettings const& s, std::vector<ReplicateRecord> records);

/// Runs every (window, replicate) task, parallel over tasks.
SweepResult run_sweep(SweepSettings const& s);

struct HcEstimate {
    double window = 0.0;
    std::size_t replicates = 0;
    std::size_t spanning_replicates = 0; ///< replicates with a crossing threshold
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr() const noexcept { return q3 - q1; }
};

struct HcSummary {
    std::vector<HcEstimate> per_window;
    /// (max median - min median) / mean of medians
    double relative_spread = 0.0;
};

HcSummary estimate_hc(SweepResult const& sweep);

struct UniquenessRow {
    double window = 0.0;
    std::size_t replicates = 0;
    std::vector<std::size_t> histogram; ///< histogram[c] = replicates with c spanning clusters
    double fraction_multiple = 0.0;     ///< count >= 2
    double std_error = 0.0;
};

/// Distribution of axis-0 spanning cluster counts at level h (at-least).
std::vector<UniquenessRow> uniqueness_statistic(SweepResult const& sweep, double h);

/// Cells whose center lies within r of some point (same distance rule as the field).
LevelSetGrid boolean_occupied(PointSet const& points, double r, double alpha);

struct SandwichReport {
    std::size_t cells = 0;
    bool lower_checked = false; ///< requires h <= l(r)
    bool upper_checked = false; ///< requires h > 0 and finite support
    std::size_t lower_violations = 0;
    std::size_t upper_violations = 0;
    std::vector<std::size_t> violating_cells;
    std::string note;

    bool ok() const noexcept { return lower_violations == 0 && upper_violations == 0; }
};

/// Cellwise check of Boolean(r) ⊆ Ψ_{>=h} ⊆ Boolean(r_l) on one point set.
SandwichReport sandwich_check(PointSet const& points, AttenuationSpec const& spec, double alpha, double r,
                              double h);

void write_theta_table(std::ostream& out, SweepResult const& sweep);
void write_crossing_table(std::ostream& out, SweepResult const& sweep);
/// Plain PBM; 1 marks occupied. 2-d grids, or the central slice for d >= 3.
void write_bitmap(std::ostream& out, LevelSetGrid const& levelset);

} // namespace levelperc
