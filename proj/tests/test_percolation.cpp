#include "oracles.hpp"
#include "support.hpp"

#include "levelperc/percolation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

using namespace levelperc;
using testing::at_least;
using testing::bfs_spanning;
using testing::brute_crossing;
using testing::neighbors;

namespace {

/// Square grid with n = 2m + 1 cells per axis holding arbitrary values.
FieldGrid make_grid(int d, int m, std::vector<double> values)
{
    FieldGrid g;
    g.geometry = GridGeometry::covering(d, m * 1.0, 1.0);
    REQUIRE(g.geometry.half_cells == m);
    REQUIRE(values.size() == g.geometry.cell_count());
    g.values = std::move(values);
    return g;
}

FieldGrid random_grid(testing::Gen& gen, int d, int m, int distinct)
{
    auto const n = GridGeometry::covering(d, m * 1.0, 1.0).cell_count();
    std::vector<double> v(n);
    for (auto& x : v) {
        // few distinct values so ties are common
        x = distinct > 0 ? gen.integer(0, distinct - 1) * 0.5 : gen.uniform(-1.0, 3.0);
    }
    return make_grid(d, m, std::move(v));
}

/// max over paths from `sources` to any cell with `target(cell)` of the path minimum.
template <class Target>
double widest_path(FieldGrid const& g, std::vector<std::size_t> const& sources, Target target)
{
    std::vector<double> best(g.values.size(), -INFINITY);
    std::priority_queue<std::pair<double, std::size_t>> pq;
    for (auto s : sources) {
        best[s] = g.values[s];
        pq.push({best[s], s});
    }
    while (!pq.empty()) {
        auto const [w, c] = pq.top();
        pq.pop();
        if (w < best[c]) {
            continue;
        }
        if (target(c)) {
            return w;
        }
        for (auto nb : neighbors(g.geometry, c)) {
            double const nw = std::min(w, g.values[nb]);
            if (nw > best[nb]) {
                best[nb] = nw;
                pq.push({nw, nb});
            }
        }
    }
    return -INFINITY;
}

PointSet points_at(double half_width, std::vector<double> coords)
{
    PointSet p;
    p.window = Window{2, half_width, 0.0, Boundary::hard};
    p.coords = std::move(coords);
    return p;
}

} // namespace

TEST_CASE("thresholding compares exactly and nests")
{
    auto const g = make_grid(1, 2, {0.0, 1.0, 1.0, 2.0, INFINITY});
    auto const ge = threshold(g, 1.0, Comparison::at_least);
    auto const gt = threshold(g, 1.0, Comparison::strictly_above);
    CHECK(ge.occupied == std::vector<std::uint8_t>{0, 1, 1, 1, 1});
    CHECK(gt.occupied == std::vector<std::uint8_t>{0, 0, 0, 1, 1});
    CHECK(threshold(g, 1e300, Comparison::strictly_above).occupied_count() == 1);
    CHECK_THROWS_AS(threshold(g, INFINITY, Comparison::at_least), std::invalid_argument);
    CHECK_THROWS_AS(threshold(g, NAN, Comparison::at_least), std::invalid_argument);

    testing::Gen gen(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto const r = random_grid(gen, 2, 4, 0);
        double const h1 = gen.uniform(-1.0, 3.0), h2 = h1 + gen.uniform(0.0, 1.0);
        auto const a = threshold(r, h1, Comparison::at_least);
        auto const b = threshold(r, h2, Comparison::at_least);
        auto const s = threshold(r, h1, Comparison::strictly_above);
        for (std::size_t c = 0; c < a.occupied.size(); ++c) {
            CHECK(b.occupied[c] <= a.occupied[c]);
            CHECK(s.occupied[c] <= a.occupied[c]);
        }
    }
}

TEST_CASE("labeling of small fixtures")
{
    // 3x3, axis 0 fastest: row y=0 is cells 0..2
    auto level = [](std::vector<std::uint8_t> occ) {
        LevelSetGrid l;
        l.geometry = GridGeometry::covering(2, 1.0, 1.0);
        l.occupied = std::move(occ);
        return l;
    };
    SUBCASE("full grid is one cluster spanning both axes")
    {
        auto const lab = label_clusters(level(std::vector<std::uint8_t>(9, 1)));
        REQUIRE(lab.clusters.size() == 1);
        CHECK(lab.clusters[0].size == 9);
        CHECK(lab.clusters[0].id == 0);
        CHECK(spanning_count(lab).count == 1);
        CHECK(spanning_count(lab).per_axis[1] == 1);
    }
    SUBCASE("checkerboard has only singletons")
    {
        auto const lab = label_clusters(level({1, 0, 1, 0, 1, 0, 1, 0, 1}));
        CHECK(lab.clusters.size() == 5);
        CHECK(spanning_count(lab).count == 0);
        for (auto const& c : lab.clusters) {
            CHECK(c.size == 1);
        }
    }
    SUBCASE("an L shape is one cluster labeled by its smallest cell")
    {
        auto const lab = label_clusters(level({0, 0, 1, 0, 0, 1, 1, 1, 1}));
        REQUIRE(lab.clusters.size() == 1);
        CHECK(lab.clusters[0].size == 5);
        CHECK(lab.clusters[0].id == 2);
        CHECK(lab.label[6] == 2);
        CHECK(lab.label[0] == ClusterLabels::kNone);
        CHECK(lab.cluster_of(0) == nullptr);
        CHECK(lab.cluster_of(8)->size == 5);
        CHECK(spanning_count(lab).count == 1);
    }
    SUBCASE("rows")
    {
        CHECK(spanning_count(label_clusters(level({0, 0, 0, 1, 1, 1, 0, 0, 0}))).count == 1);
        CHECK(spanning_count(label_clusters(level({1, 1, 1, 0, 0, 0, 1, 1, 1}))).count == 2);
        CHECK(spanning_count(label_clusters(level(std::vector<std::uint8_t>(9, 0)))).count == 0);
        // a column spans axis 1 only
        auto const col = spanning_count(label_clusters(level({0, 1, 0, 0, 1, 0, 0, 1, 0})));
        CHECK(col.count == 0);
        CHECK(col.per_axis[1] == 1);
    }
}

TEST_CASE("labeling agrees with breadth-first search in 1 to 4 dimensions")
{
    testing::Gen gen(11);
    for (int trial = 0; trial < 80; ++trial) {
        int const d = gen.integer(1, 4);
        int const m = d <= 2 ? gen.integer(0, 6) : gen.integer(0, 2);
        auto const g = random_grid(gen, d, m, 0);
        double const h = gen.uniform(-1.0, 3.0);
        auto const lab = label_clusters(threshold(g, h, Comparison::at_least));
        CHECK(spanning_count(lab).count == bfs_spanning(g.geometry, at_least(g, h)));
        std::size_t total = 0;
        for (auto const& c : lab.clusters) {
            total += c.size;
            CHECK(lab.label[c.id] == c.id);
        }
        CHECK(total == threshold(g, h, Comparison::at_least).occupied_count());
        // every edge between occupied cells stays inside one cluster
        for (std::size_t c = 0; c < g.values.size(); ++c) {
            if (lab.label[c] == ClusterLabels::kNone) {
                continue;
            }
            CHECK(lab.label[c] <= c);
            for (auto nb : neighbors(g.geometry, c)) {
                if (lab.label[nb] != ClusterLabels::kNone) {
                    CHECK(lab.label[nb] == lab.label[c]);
                }
            }
        }
    }
}

TEST_CASE("union-find crossing threshold equals bisection over distinct values")
{
    testing::Gen gen(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto const g = random_grid(gen, 2, 16, trial % 2 ? 0 : 7);
        auto const fast = crossing_threshold(g);
        auto const slow = brute_crossing(g);
        REQUIRE(fast.has_value() == slow.has_value());
        CHECK(*fast == *slow);
        // the same number is the bottleneck of the widest left-to-right path
        std::vector<std::size_t> left;
        for (std::size_t c = 0; c < g.values.size(); ++c) {
            if (g.geometry.coordinate(c, 0) == 0) {
                left.push_back(c);
            }
        }
        int const last = g.geometry.cells_per_axis() - 1;
        CHECK(*fast == widest_path(g, left, [&](std::size_t c) { return g.geometry.coordinate(c, 0) == last; }));
    }
}

TEST_CASE("crossing threshold of constant and gradient grids")
{
    CHECK(*crossing_threshold(make_grid(2, 3, std::vector<double>(49, 2.5))) == 2.5);
    // values increase with the axis-1 coordinate: the best row is the top one
    std::vector<double> v(121);
    auto const geo = GridGeometry::covering(2, 5.0, 1.0);
    for (std::size_t c = 0; c < v.size(); ++c) {
        v[c] = geo.coordinate(c, 1) + 0.01 * geo.coordinate(c, 0);
    }
    CHECK(*crossing_threshold(make_grid(2, 5, v)) == 10.0);
    // values increase along axis 0: the bottleneck is the left column
    for (std::size_t c = 0; c < v.size(); ++c) {
        v[c] = geo.coordinate(c, 0) + 0.01 * geo.coordinate(c, 1);
    }
    CHECK(*crossing_threshold(make_grid(2, 5, v)) == 0.1);
    CHECK_FALSE(crossing_threshold(FieldGrid{GridGeometry::covering(2, 1.0, 1.0)}).has_value());
}

TEST_CASE("one sweep reproduces per-level labeling in both modes")
{
    testing::Gen gen(21);
    for (int trial = 0; trial < 40; ++trial) {
        int const d = gen.integer(1, 3);
        int const m = d == 3 ? 2 : gen.integer(1, 8);
        auto g = random_grid(gen, d, m, trial % 2 ? 0 : 5);
        if (trial % 5 == 0) {
            g.values[gen.integer(0, int(g.values.size()) - 1)] = INFINITY;
        }
        auto const trace = trace_levels(g);
        std::set<double> hs(g.values.begin(), g.values.end());
        hs.insert(-5.0);
        hs.insert(1e9);
        for (double h : hs) {
            if (!std::isfinite(h)) {
                continue;
            }
            for (auto mode : {Comparison::at_least, Comparison::strictly_above}) {
                auto const lvl = threshold(g, h, mode);
                auto const lab = label_clusters(lvl);
                CHECK(trace.spanning_at(h, mode) == spanning_count(lab).count);
                bool touches = false;
                if (auto const* c = lab.cluster_of(g.geometry.origin_cell())) {
                    touches = c->faces != 0;
                }
                CHECK(trace.origin_connected(h, mode) == touches);
            }
        }
        // origin bottleneck is the widest path from the origin to the boundary
        int const last = g.geometry.cells_per_axis() - 1;
        auto on_boundary = [&](std::size_t c) {
            for (int k = 0; k < d; ++k) {
                int const z = g.geometry.coordinate(c, k);
                if (z == 0 || z == last) {
                    return true;
                }
            }
            return false;
        };
        CHECK(trace.origin_bottleneck == widest_path(g, {g.geometry.origin_cell()}, on_boundary));
    }
}

TEST_CASE("indicator field at level one is the Boolean model")
{
    testing::Gen gen(5);
    for (int trial = 0; trial < 40; ++trial) {
        double const r = gen.uniform(0.2, 1.5), alpha = gen.uniform(0.1, 0.5);
        auto const pts = sample_poisson(Window{2, gen.uniform(1.0, 4.0), r + 1.0}, gen.uniform(0.2, 2.0), gen.seed());
        auto const field = field_on_grid(pts, AttenuationSpec::indicator(r), alpha, r, FieldMode::exact_center);
        CHECK(threshold(field, 1.0, Comparison::at_least).occupied == boolean_occupied(pts, r, alpha).occupied);
    }
}

TEST_CASE("a single disc covers the lattice points of a circle")
{
    // centers 0.25 z with |z| <= 4: 49 integer points in the radius-4 disc
    auto const b = boolean_occupied(points_at(2.0, {0.0, 0.0}), 1.0, 0.25);
    CHECK(b.occupied_count() == 49);
    CHECK(boolean_occupied(points_at(2.0, {0.0, 0.0}), 0.5, 0.25).occupied_count() == 13);
    CHECK_THROWS_AS(boolean_occupied(points_at(2.0, {}), 0.0, 0.25), std::invalid_argument);
}

TEST_CASE("level sets sit between two Boolean models")
{
    testing::Gen gen(99);
    std::vector<AttenuationSpec> const kernels{
        AttenuationSpec::exponential(1.0, 2.0),
        AttenuationSpec::truncated_power_law(2.0, 2.5),
        AttenuationSpec::indicator(1.5),
    };
    for (int trial = 0; trial < 100; ++trial) {
        auto const& k = kernels[static_cast<std::size_t>(trial) % kernels.size()];
        double const r = 1.0, alpha = gen.uniform(0.1, 0.3);
        auto const pts = sample_poisson(Window{2, gen.uniform(2.0, 5.0), 3.0}, gen.uniform(0.3, 2.0), gen.seed());
        auto const rep = sandwich_check(pts, k, alpha, r, k(r));
        CHECK(rep.lower_checked);
        CHECK(rep.upper_checked);
        CHECK(rep.ok());
        CHECK(rep.violating_cells.empty());
    }
    auto const pts = sample_poisson(Window{2, 2.0, 3.0}, 1.0, 4);
    auto const skipped = sandwich_check(pts, AttenuationSpec::exponential(1.0, 2.0), 0.25, 1.0, 2.0);
    CHECK_FALSE(skipped.lower_checked);
    CHECK(skipped.upper_checked);
    CHECK(skipped.note.find("lower inclusion skipped") != std::string::npos);
    auto const unbounded = sandwich_check(pts, AttenuationSpec::exponential(1.0), 0.25, 1.0, std::exp(-1.0));
    CHECK_FALSE(unbounded.upper_checked);
    CHECK(unbounded.ok());
}

TEST_CASE("adding points never lowers the crossing threshold")
{
    testing::Gen gen(41);
    auto const k = AttenuationSpec::exponential(1.0, 4.0);
    for (int trial = 0; trial < 30; ++trial) {
        Window const w{2, gen.uniform(2.0, 5.0), 4.5};
        auto const seed = gen.seed();
        auto const base = sample_poisson(w, 0.5, seed);
        auto const plus = sample_plus_one(w, 0.5, seed);
        auto const hb = *crossing_threshold(field_on_grid(base, k, 0.25, 4.0, FieldMode::exact_center));
        auto const hp = *crossing_threshold(field_on_grid(plus, k, 0.25, 4.0, FieldMode::exact_center));
        CHECK(hp >= hb);
        // doubling the intensity by superposing an independent copy
        auto doubled = base;
        doubled.intensity = 1.0;
        auto const extra = sample_poisson(w, 0.5, gen.seed());
        doubled.coords.insert(doubled.coords.end(), extra.coords.begin(), extra.coords.end());
        CHECK(*crossing_threshold(field_on_grid(doubled, k, 0.25, 4.0, FieldMode::exact_center)) >= hb);
    }
}

TEST_CASE("percolation estimates from a small sweep")
{
    SweepSettings s;
    s.window_sizes = {3.0, 4.0};
    s.alpha = 0.5;
    s.levels = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 1e6};
    s.replicates = 25;
    s.seed = 17;
    auto const sweep = run_sweep(s);
    REQUIRE(sweep.records.size() == 50);
    REQUIRE(sweep.theta.size() == 2 * 7 * 2);
    for (double w : s.window_sizes) {
        double prev_ge = 2.0, prev_gt = 2.0;
        for (auto const& row : sweep.theta) {
            if (row.window != w) {
                continue;
            }
            CHECK(row.ci_low <= row.theta);
            CHECK(row.theta <= row.ci_high);
            double& prev = row.mode == Comparison::at_least ? prev_ge : prev_gt;
            CHECK(row.theta <= prev);
            prev = row.theta;
            if (row.h == 0.0 && row.mode == Comparison::at_least) {
                CHECK(row.theta == 1.0);
            }
            if (row.h == 1e6) {
                CHECK(row.theta == 0.0);
            }
        }
    }
    // strict level sets are subsets, so their estimate is never larger
    for (std::size_t i = 0; i + 1 < sweep.theta.size(); i += 2) {
        CHECK(sweep.theta[i].mode == Comparison::at_least);
        CHECK(sweep.theta[i + 1].theta <= sweep.theta[i].theta);
    }
    for (auto const& row : uniqueness_statistic(sweep, 0.0)) {
        REQUIRE(row.histogram.size() == 2);
        CHECK(row.histogram[1] == 25);
        CHECK(row.fraction_multiple == 0.0);
    }
    auto const hc = estimate_hc(sweep);
    REQUIRE(hc.per_window.size() == 2);
    for (auto const& e : hc.per_window) {
        CHECK(e.spanning_replicates == 25);
        CHECK(e.q1 <= e.median);
        CHECK(e.median <= e.q3);
    }
    // replicates are pure functions of their coordinates
    auto const again = simulate_replicate(s, 4.0, 7);
    auto const recs = sweep.records_for(4.0);
    CHECK(again.seed == recs[7]->seed);
    CHECK(again.trace.h_cross == recs[7]->trace.h_cross);
    CHECK(again.trace.spanning_steps == recs[7]->trace.spanning_steps);
    CHECK(replicate_seed(s, 4.0, 7) != replicate_seed(s, 3.0, 7));

    std::ostringstream theta, cross;
    write_theta_table(theta, sweep);
    write_crossing_table(cross, sweep);
    CHECK(theta.str().rfind("h,mode,n,theta_hat,ci_low,ci_high\n", 0) == 0);
    CHECK(cross.str().rfind("replicate,n,h_cross,spanning_count_at_h_list\n", 0) == 0);
    auto const table = theta.str();
    CHECK(std::count(table.begin(), table.end(), '\n') == 29);
}

TEST_CASE("sweep settings validation")
{
    SweepSettings s;
    s.levels = {1.0, 2.0};
    CHECK_NOTHROW(s.validate());
    auto bad = s;
    bad.intensity = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.levels = {2.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.window_sizes.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.kernel = AttenuationSpec::power_law(2.0);
    CHECK_THROWS_AS(run_sweep(bad), NonIntegrableKernel);
    CHECK(comparison_from_string(to_string(Comparison::strictly_above)) == Comparison::strictly_above);
    CHECK_THROWS(comparison_from_string("above"));
}

TEST_CASE("bitmap output")
{
    LevelSetGrid l;
    l.geometry = GridGeometry::covering(2, 1.0, 1.0);
    l.occupied = {1, 0, 0, 0, 0, 0, 0, 0, 1};
    std::ostringstream out;
    write_bitmap(out, l);
    CHECK(out.str() == "P1\n3 3\n0 0 1\n0 0 0\n1 0 0\n");
}
