#include "levelperc/percolation.hpp"

#include "levelperc/rng.hpp"
#include "levelperc/stats.hpp"
#include "spatial_hash.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace levelperc {

std::string to_string(Comparison c) { return c == Comparison::strictly_above ? "strictly-above" : "at-least"; }

Comparison comparison_from_string(std::string const& name)
{
    if (name == "at-least") {
        return Comparison::at_least;
    }
    if (name == "strictly-above") {
        return Comparison::strictly_above;
    }
    throw std::invalid_argument("unknown comparison mode '" + name + "'");
}

std::size_t LevelSetGrid::occupied_count() const noexcept
{
    return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

LevelSetGrid threshold(FieldGrid const& grid, double h, Comparison mode)
{
    if (!std::isfinite(h)) {
        throw std::invalid_argument("threshold level must be finite");
    }
    LevelSetGrid out{grid.geometry, h, mode, std::vector<std::uint8_t>(grid.values.size(), 0)};
    for (std::size_t c = 0; c < grid.values.size(); ++c) {
        double const v = grid.values[c];
        out.occupied[c] = (mode == Comparison::at_least ? v >= h : v > h) ? 1 : 0;
    }
    return out;
}

namespace {

/// Union-find whose roots are always the smallest index of their set.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), faces_(n, 0) {}

    void make(std::size_t i, FaceMask faces)
    {
        parent_[i] = i;
        faces_[i] = faces;
    }
    std::size_t find(std::size_t i) noexcept
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    /// Returns the surviving root; `a` and `b` must be roots.
    std::size_t link(std::size_t a, std::size_t b) noexcept
    {
        if (b < a) {
            std::swap(a, b);
        }
        parent_[b] = a;
        faces_[a] |= faces_[b];
        return a;
    }
    FaceMask faces(std::size_t root) const noexcept { return faces_[root]; }

private:
    std::vector<std::size_t> parent_;
    std::vector<FaceMask> faces_;
};

class FaceLookup {
public:
    explicit FaceLookup(GridGeometry const& g) : g_(g), n_(g.cells_per_axis()) {}

    FaceMask operator()(std::size_t cell) const noexcept
    {
        FaceMask m = 0;
        auto const n = static_cast<std::size_t>(n_);
        for (int k = 0; k < g_.dimension; ++k) {
            auto const z = cell % n;
            cell /= n;
            if (z == 0) {
                m |= static_cast<FaceMask>(1u << (2 * k));
            }
            if (z + 1 == n) {
                m |= static_cast<FaceMask>(1u << (2 * k + 1));
            }
        }
        return m;
    }
    /// Calls fn(neighbor) for each edge neighbor of `cell`.
    template <class Fn>
    void neighbors(std::size_t cell, Fn&& fn) const
    {
        auto const n = static_cast<std::size_t>(n_);
        std::size_t rest = cell;
        std::size_t stride = 1;
        for (int k = 0; k < g_.dimension; ++k) {
            auto const z = rest % n;
            rest /= n;
            if (z > 0) {
                fn(cell - stride);
            }
            if (z + 1 < n) {
                fn(cell + stride);
            }
            stride *= n;
        }
    }

private:
    GridGeometry g_;
    int n_;
};

bool spans_axis0(FaceMask m) noexcept { return (m & 3u) == 3u; }

} // namespace

ClusterInfo const* ClusterLabels::cluster_of(std::size_t cell) const
{
    if (cell >= label.size() || label[cell] == kNone) {
        return nullptr;
    }
    auto it = std::lower_bound(clusters.begin(), clusters.end(), label[cell],
                               [](ClusterInfo const& c, std::size_t id) { return c.id < id; });
    return &*it;
}

ClusterLabels label_clusters(LevelSetGrid const& levelset)
{
    auto const cells = levelset.occupied.size();
    FaceLookup const faces(levelset.geometry);
    DisjointSets sets(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        if (!levelset.occupied[c]) {
            continue;
        }
        sets.make(c, faces(c));
        faces.neighbors(c, [&](std::size_t nb) {
            if (nb < c && levelset.occupied[nb]) {
                auto const a = sets.find(c);
                auto const b = sets.find(nb);
                if (a != b) {
                    sets.link(a, b);
                }
            }
        });
    }
    ClusterLabels out;
    out.geometry = levelset.geometry;
    out.label.assign(cells, ClusterLabels::kNone);
    std::vector<std::size_t> slot(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
        if (!levelset.occupied[c]) {
            continue;
        }
        auto const root = sets.find(c);
        out.label[c] = root;
        if (root == c) {
            slot[c] = out.clusters.size();
            out.clusters.push_back({c, 0, sets.faces(c)});
        }
        ++out.clusters[slot[root]].size;
    }
    return out;
}

SpanningCounts spanning_count(ClusterLabels const& labels)
{
    SpanningCounts out;
    for (auto const& c : labels.clusters) {
        for (int k = 0; k < labels.geometry.dimension; ++k) {
            if (c.spans(k)) {
                ++out.per_axis[k];
            }
        }
    }
    out.count = out.per_axis[0];
    return out;
}

std::size_t LevelTrace::spanning_at(double h, Comparison mode) const noexcept
{
    std::size_t count = 0;
    for (auto const& [v, c] : spanning_steps) {
        bool const included = mode == Comparison::at_least ? v >= h : v > h;
        if (!included) {
            break;
        }
        count = c;
    }
    return count;
}

LevelTrace trace_levels(FieldGrid const& grid)
{
    auto const& values = grid.values;
    std::vector<std::size_t> order;
    order.reserve(values.size());
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (!std::isnan(values[c])) {
            order.push_back(c);
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] > values[b] || (values[a] == values[b] && a < b);
    });

    FaceLookup const faces(grid.geometry);
    DisjointSets sets(values.size());
    std::vector<std::uint8_t> active(values.size(), 0);
    std::size_t const origin = grid.geometry.origin_cell();

    LevelTrace trace;
    trace.origin_bottleneck = -kInfinity;
    bool origin_done = false;
    std::size_t spanning = 0;
    std::size_t recorded = 0;

    for (std::size_t i = 0; i < order.size(); ++i) {
        std::size_t const c = order[i];
        double const v = values[c];
        sets.make(c, faces(c));
        active[c] = 1;
        spanning += spans_axis0(sets.faces(c));
        faces.neighbors(c, [&](std::size_t nb) {
            if (!active[nb]) {
                return;
            }
            auto const a = sets.find(c);
            auto const b = sets.find(nb);
            if (a == b) {
                return;
            }
            spanning -= spans_axis0(sets.faces(a)) + spans_axis0(sets.faces(b));
            auto const root = sets.link(a, b);
            spanning += spans_axis0(sets.faces(root));
        });
        if (spanning > 0 && !trace.h_cross) {
            trace.h_cross = v;
        }
        if (!origin_done && active[origin] && sets.faces(sets.find(origin)) != 0) {
            trace.origin_bottleneck = v;
            origin_done = true;
        }
        bool const group_end = i + 1 == order.size() || values[order[i + 1]] != v;
        if (group_end && spanning != recorded) {
            trace.spanning_steps.emplace_back(v, spanning);
            recorded = spanning;
        }
    }
    return trace;
}

std::optional<double> crossing_threshold(FieldGrid const& grid) { return trace_levels(grid).h_cross; }

void SweepSettings::validate() const
{
    if (!(intensity > 0.0) || !std::isfinite(intensity)) {
        throw std::invalid_argument("intensity must be positive and finite");
    }
    if (dimension < 1 || dimension > kMaxDimension) {
        throw std::invalid_argument("dimension must be in 1.." + std::to_string(kMaxDimension));
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be positive");
    }
    if (window_sizes.empty()) {
        throw std::invalid_argument("at least one window size is required");
    }
    for (double w : window_sizes) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("window sizes must be positive");
        }
    }
    if (replicates < 1) {
        throw std::invalid_argument("replicate count must be >= 1");
    }
    if (!std::is_sorted(levels.begin(), levels.end())) {
        throw std::invalid_argument("h grid must be sorted ascending");
    }
    for (double h : levels) {
        if (!std::isfinite(h)) {
            throw std::invalid_argument("h grid values must be finite");
        }
    }
    if (!(tail_budget > 0.0)) {
        throw std::invalid_argument("truncation budget must be positive");
    }
}

std::uint64_t replicate_seed(SweepSettings const& s, double window, std::size_t replicate)
{
    return derive_seed(s.seed, {std::bit_cast<std::uint64_t>(s.intensity), std::bit_cast<std::uint64_t>(window),
                                std::bit_cast<std::uint64_t>(s.alpha), static_cast<std::uint64_t>(replicate)});
}

ReplicateRecord simulate_replicate(SweepSettings const& s, double window, std::size_t replicate)
{
    double const radius = truncation_radius(s.kernel, s.dimension, s.intensity, s.tail_budget);
    double const shift = s.field_mode == FieldMode::sup_bound ? s.alpha * std::sqrt(double(s.dimension)) / 2.0 : 0.0;
    Window const w{s.dimension, window, radius + shift + s.alpha * std::sqrt(double(s.dimension)), Boundary::hard};
    ReplicateRecord rec;
    rec.window = window;
    rec.replicate = replicate;
    rec.seed = replicate_seed(s, window, replicate);
    auto const points = sample_poisson(w, s.intensity, rec.seed);
    auto const grid = field_on_grid(points, s.kernel, s.alpha, radius, s.field_mode, s.tail_budget);
    rec.trace = trace_levels(grid);
    return rec;
}

std::vector<ReplicateRecord const*> SweepResult::records_for(double window) const
{
    std::vector<ReplicateRecord const*> out;
    for (auto const& r : records) {
        if (r.window == window) {
            out.push_back(&r);
        }
    }
    return out;
}

SweepResult aggregate_sweep(SweepSettings const& s, std::vector<ReplicateRecord> records)
{
    auto window_rank = [&](double w) {
        return std::find(s.window_sizes.begin(), s.window_sizes.end(), w) - s.window_sizes.begin();
    };
    std::sort(records.begin(), records.end(), [&](ReplicateRecord const& a, ReplicateRecord const& b) {
        auto const ra = window_rank(a.window);
        auto const rb = window_rank(b.window);
        return ra != rb ? ra < rb : a.replicate < b.replicate;
    });
    SweepResult out;
    out.intensity = s.intensity;
    out.alpha = s.alpha;
    out.window_sizes = s.window_sizes;
    out.levels = s.levels;
    out.records = std::move(records);
    for (double w : s.window_sizes) {
        auto const recs = out.records_for(w);
        for (double h : s.levels) {
            for (auto mode : {Comparison::at_least, Comparison::strictly_above}) {
                ThetaRow row{h, mode, w, recs.size(), 0};
                for (auto const* r : recs) {
                    row.hits += r->trace.origin_connected(h, mode);
                }
                if (row.replicates > 0) {
                    double const n = static_cast<double>(row.replicates);
                    row.theta = static_cast<double>(row.hits) / n;
                    row.std_error = std::sqrt(row.theta * (1.0 - row.theta) / n);
                }
                auto const ci = wilson_interval(row.hits, row.replicates);
                row.ci_low = ci.low;
                row.ci_high = ci.high;
                out.theta.push_back(row);
            }
        }
    }
    return out;
}

SweepResult run_sweep(SweepSettings const& s)
{
    s.validate();
    // Surface non-integrable kernels before any work is scheduled.
    (void)truncation_radius(s.kernel, s.dimension, s.intensity, s.tail_budget);
    std::vector<ReplicateRecord> records(s.window_sizes.size() * s.replicates);
    auto const tasks = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < tasks; ++t) {
        auto const w = static_cast<std::size_t>(t) / s.replicates;
        auto const rep = static_cast<std::size_t>(t) % s.replicates;
        records[static_cast<std::size_t>(t)] = simulate_replicate(s, s.window_sizes[w], rep);
    }
    return aggregate_sweep(s, std::move(records));
}

HcSummary estimate_hc(SweepResult const& sweep)
{
    HcSummary out;
    for (double w : sweep.window_sizes) {
        HcEstimate e;
        e.window = w;
        std::vector<double> values;
        for (auto const* r : sweep.records_for(w)) {
            ++e.replicates;
            if (r->trace.h_cross) {
                values.push_back(*r->trace.h_cross);
            }
        }
        e.spanning_replicates = values.size();
        if (!values.empty()) {
            e.median = quantile(values, 0.5);
            e.q1 = quantile(values, 0.25);
            e.q3 = quantile(values, 0.75);
        }
        out.per_window.push_back(e);
    }
    if (!out.per_window.empty()) {
        double lo = kInfinity, hi = -kInfinity, sum = 0.0;
        for (auto const& e : out.per_window) {
            lo = std::min(lo, e.median);
            hi = std::max(hi, e.median);
            sum += e.median;
        }
        double const mean = sum / static_cast<double>(out.per_window.size());
        out.relative_spread = mean != 0.0 ? (hi - lo) / std::abs(mean) : 0.0;
    }
    return out;
}

std::vector<UniquenessRow> uniqueness_statistic(SweepResult const& sweep, double h)
{
    std::vector<UniquenessRow> out;
    for (double w : sweep.window_sizes) {
        UniquenessRow row;
        row.window = w;
        std::size_t multiple = 0;
        for (auto const* r : sweep.records_for(w)) {
            auto const c = r->trace.spanning_at(h, Comparison::at_least);
            if (row.histogram.size() <= c) {
                row.histogram.resize(c + 1, 0);
            }
            ++row.histogram[c];
            ++row.replicates;
            multiple += c >= 2;
        }
        if (row.replicates > 0) {
            double const n = static_cast<double>(row.replicates);
            row.fraction_multiple = static_cast<double>(multiple) / n;
            row.std_error = std::sqrt(row.fraction_multiple * (1.0 - row.fraction_multiple) / n);
        }
        out.push_back(std::move(row));
    }
    return out;
}

LevelSetGrid boolean_occupied(PointSet const& points, double r, double alpha)
{
    if (!(r > 0.0)) {
        throw std::invalid_argument("boolean_occupied: radius must be positive");
    }
    LevelSetGrid out;
    out.geometry = GridGeometry::covering(points.window.dimension, points.window.half_width, alpha);
    out.level = 1.0;
    out.occupied.assign(out.geometry.cell_count(), 0);
    detail::SpatialHash const hash(points, r);
    auto const cells = static_cast<std::ptrdiff_t>(out.occupied.size());
#pragma omp parallel for schedule(static) if (!omp_in_parallel() && cells > 1024)
    for (std::ptrdiff_t c = 0; c < cells; ++c) {
        double y[kMaxDimension];
        for (int k = 0; k < out.geometry.dimension; ++k) {
            y[k] = out.geometry.center(static_cast<std::size_t>(c), k);
        }
        bool hit = false;
        hash.visit(y, [&](double, std::size_t) { hit = true; });
        out.occupied[static_cast<std::size_t>(c)] = hit ? 1 : 0;
    }
    return out;
}

SandwichReport sandwich_check(PointSet const& points, AttenuationSpec const& spec, double alpha, double r,
                              double h)
{
    SandwichReport rep;
    double const support = spec.support_radius();
    bool const finite_support = std::isfinite(support);
    double radius = finite_support
                        ? support
                        : truncation_radius(spec, points.window.dimension, points.intensity, 1e-6);
    radius = std::max(radius, r);
    auto const field = field_on_grid(points, spec, alpha, radius, FieldMode::exact_center);
    auto const level = threshold(field, h, Comparison::at_least);
    rep.cells = level.occupied.size();

    rep.lower_checked = r > 0.0 && h <= spec(r);
    if (rep.lower_checked) {
        auto const inner = boolean_occupied(points, r, alpha);
        for (std::size_t c = 0; c < rep.cells; ++c) {
            if (inner.occupied[c] && !level.occupied[c]) {
                ++rep.lower_violations;
                rep.violating_cells.push_back(c);
            }
        }
    }
    rep.upper_checked = h > 0.0 && finite_support && support > 0.0;
    if (rep.upper_checked) {
        auto const outer = boolean_occupied(points, support, alpha);
        for (std::size_t c = 0; c < rep.cells; ++c) {
            if (level.occupied[c] && !outer.occupied[c]) {
                ++rep.upper_violations;
                rep.violating_cells.push_back(c);
            }
        }
    }
    if (!rep.lower_checked) {
        rep.note += "lower inclusion skipped: h exceeds l(r); ";
    }
    if (!rep.upper_checked) {
        rep.note += "upper inclusion skipped: needs h > 0 and finite support; ";
    }
    return rep;
}

void write_theta_table(std::ostream& out, SweepResult const& sweep)
{
    out << "h,mode,n,theta_hat,ci_low,ci_high\n";
    for (auto const& row : sweep.theta) {
        out << format_double(row.h) << ',' << to_string(row.mode) << ',' << format_double(row.window) << ','
            << format_double(row.theta) << ',' << format_double(row.ci_low) << ',' << format_double(row.ci_high)
            << '\n';
    }
}

void write_crossing_table(std::ostream& out, SweepResult const& sweep)
{
    out << "replicate,n,h_cross,spanning_count_at_h_list\n";
    for (auto const& r : sweep.records) {
        out << r.replicate << ',' << format_double(r.window) << ','
            << (r.trace.h_cross ? format_double(*r.trace.h_cross) : std::string("none")) << ',';
        for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
            out << (j ? ";" : "") << r.trace.spanning_at(sweep.levels[j], Comparison::at_least);
        }
        out << '\n';
    }
}

void write_bitmap(std::ostream& out, LevelSetGrid const& levelset)
{
    auto const& g = levelset.geometry;
    int const n = g.cells_per_axis();
    std::size_t slice = 0;
    for (int k = 2; k < g.dimension; ++k) {
        slice += static_cast<std::size_t>(g.half_cells) * g.stride(k);
    }
    int const rows = g.dimension >= 2 ? n : 1;
    out << "P1\n" << n << ' ' << rows << '\n';
    for (int row = rows - 1; row >= 0; --row) {
        for (int col = 0; col < n; ++col) {
            std::size_t const cell = slice + static_cast<std::size_t>(col) +
                                     (g.dimension >= 2 ? static_cast<std::size_t>(row) * g.stride(1) : 0);
            out << (levelset.occupied[cell] ? '1' : '0') << (col + 1 == n ? '\n' : ' ');
        }
    }
}

} // namespace levelperc
