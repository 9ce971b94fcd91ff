#include "levelperc/point_process.hpp"

#include "levelperc/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace levelperc {

std::string to_string(Boundary b) { return b == Boundary::torus ? "torus" : "hard"; }

Boundary boundary_from_string(std::string const& name)
{
    if (name == "hard") {
        return Boundary::hard;
    }
    if (name == "torus") {
        return Boundary::torus;
    }
    throw std::invalid_argument("unknown boundary mode '" + name + "' (expected hard or torus)");
}

void Window::validate() const
{
    if (dimension < 1) {
        throw std::invalid_argument("window dimension must be >= 1");
    }
    if (!(half_width >= 0.0) || !std::isfinite(half_width)) {
        throw std::invalid_argument("window half-width must be finite and >= 0");
    }
    if (!(margin >= 0.0) || !std::isfinite(margin)) {
        throw std::invalid_argument("window margin must be finite and >= 0");
    }
    if (boundary == Boundary::torus && margin != 0.0) {
        throw std::invalid_argument("torus windows carry no margin");
    }
}

double Window::sample_volume() const noexcept
{
    return std::pow(2.0 * sample_half_width(), dimension);
}

double Box::volume() const noexcept
{
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        v *= std::max(0.0, hi[i] - lo[i]);
    }
    return v;
}

bool Box::contains(std::span<const double> p) const noexcept
{
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (p[i] < lo[i] || p[i] > hi[i]) {
            return false;
        }
    }
    return true;
}

namespace {

std::size_t poisson_count(Rng& rng, double mean)
{
    if (!(mean > 0.0)) {
        return 0;
    }
    std::poisson_distribution<std::int64_t> dist(mean);
    return static_cast<std::size_t>(dist(rng));
}

void fill_uniform(Rng& rng, PointSet& out, std::size_t count, double half)
{
    auto const d = static_cast<std::size_t>(out.window.dimension);
    out.coords.reserve(out.coords.size() + count * d);
    for (std::size_t i = 0; i < count * d; ++i) {
        out.coords.push_back(rng.uniform(-half, half));
    }
}

constexpr std::size_t kFactorialTable = 256;

std::array<double, kFactorialTable> make_log_factorials()
{
    std::array<double, kFactorialTable> t{};
    t[0] = 0.0;
    for (std::size_t k = 1; k < kFactorialTable; ++k) {
        t[k] = t[k - 1] + std::log(static_cast<double>(k));
    }
    return t;
}

double log_factorial(std::size_t k)
{
    static const auto table = make_log_factorials();
    if (k < kFactorialTable) {
        return table[k];
    }
    double const n = static_cast<double>(k);
    double const inv = 1.0 / n;
    double const inv2 = inv * inv;
    return n * std::log(n) - n + 0.5 * std::log(2.0 * std::numbers::pi * n) +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b)
{
    if (a == -kInf) {
        return b;
    }
    if (b == -kInf) {
        return a;
    }
    double const m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

std::size_t summation_limit(double intensity, std::size_t at_least)
{
    auto const lim = static_cast<std::size_t>(intensity + 40.0 * std::sqrt(intensity) + 60.0);
    return std::max(lim, at_least + 60);
}

void require_intensity(double intensity)
{
    if (!(intensity > 0.0) || !std::isfinite(intensity)) {
        throw std::invalid_argument("intensity must be positive and finite");
    }
}

} // namespace

PointSet sample_poisson(Window const& window, double intensity, std::uint64_t seed)
{
    window.validate();
    require_intensity(intensity);
    PointSet out{window, intensity, seed, {}};
    Rng rng(seed);
    auto const count = poisson_count(rng, intensity * window.sample_volume());
    fill_uniform(rng, out, count, window.sample_half_width());
    return out;
}

PointSet sample_plus_one(Window const& window, double intensity, std::uint64_t seed)
{
    if (!(window.half_width > 0.0)) {
        throw std::invalid_argument("sample_plus_one needs a box of positive volume");
    }
    auto out = sample_poisson(window, intensity, seed);
    Rng extra = Rng(seed).split(1);
    for (int i = 0; i < window.dimension; ++i) {
        out.coords.push_back(extra.uniform(-window.half_width, window.half_width));
    }
    return out;
}

// ---------------------------------------------------------------------------

LogPmf poisson_log_pmf(double intensity)
{
    require_intensity(intensity);
    double const log_lambda = std::log(intensity);
    return [intensity, log_lambda](std::size_t k) {
        return static_cast<double>(k) * log_lambda - intensity - log_factorial(k);
    };
}

std::vector<TailDominanceRow> exact_tail_dominance(double intensity, std::size_t k_max, LogPmf log_pmf)
{
    require_intensity(intensity);
    if (k_max < 1) {
        throw std::invalid_argument("exact_tail_dominance needs k_max >= 1");
    }
    if (!log_pmf) {
        log_pmf = poisson_log_pmf(intensity);
    }
    std::size_t const limit = summation_limit(intensity, k_max);
    // log P(X >= k) for k = 0..k_max by backward accumulation.
    std::vector<double> log_tail(k_max + 1, -kInf);
    double acc = -kInf;
    for (std::size_t j = limit + 1; j-- > 0;) {
        acc = log_sum_exp(acc, log_pmf(j));
        if (j <= k_max) {
            log_tail[j] = acc;
        }
    }
    std::vector<TailDominanceRow> rows;
    rows.reserve(k_max);
    for (std::size_t k = 1; k <= k_max; ++k) {
        double const lhs = std::exp(log_tail[k] - log_tail[1]);
        double const rhs = std::exp(log_tail[k - 1]);
        rows.push_back({k, lhs, rhs, rhs - lhs});
    }
    return rows;
}

double tv_poisson_shift_by_sum(double intensity)
{
    require_intensity(intensity);
    auto const log_p = poisson_log_pmf(intensity);
    std::size_t const limit = summation_limit(intensity, 0);
    double sum = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k <= limit + 1; ++k) {
        double const cur = std::exp(log_p(k));
        sum += std::abs(cur - prev);
        prev = cur;
    }
    sum += prev;
    return 0.5 * sum;
}

double poisson_mode_mass(double intensity)
{
    require_intensity(intensity);
    return std::exp(poisson_log_pmf(intensity)(static_cast<std::size_t>(std::floor(intensity))));
}

double exact_tv_poisson_shift(double intensity)
{
    double const by_sum = tv_poisson_shift_by_sum(intensity);
    double const by_mode = poisson_mode_mass(intensity);
    if (std::abs(by_sum - by_mode) > 1e-12) {
        throw std::logic_error("shift TV: summation and mode mass disagree");
    }
    return by_sum;
}

double stated_shift_coupling_disagreement(double intensity)
{
    require_intensity(intensity);
    auto const m = static_cast<std::size_t>(std::floor(intensity));
    double const log_num = std::log(std::pow(intensity, static_cast<double>(m)) + 1.0);
    return std::exp(log_num - log_factorial(m + 1) - intensity);
}

namespace {

std::size_t sample_from_cumulative(std::vector<double> const& cumulative, double u)
{
    double const target = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) {
        --it;
    }
    return static_cast<std::size_t>(it - cumulative.begin());
}

} // namespace

CouplingReport couple_poisson_shift(double intensity, std::uint64_t seed, std::size_t samples)
{
    require_intensity(intensity);
    if (samples < 1) {
        throw std::invalid_argument("couple_poisson_shift needs at least one sample");
    }
    auto const log_p = poisson_log_pmf(intensity);
    std::size_t const limit = summation_limit(intensity, 0) + 1;
    std::vector<double> p(limit + 1);
    for (std::size_t k = 0; k <= limit; ++k) {
        p[k] = std::exp(log_p(k));
    }
    auto shifted = [&p](std::size_t k) { return k == 0 ? 0.0 : p[k - 1]; };

    std::vector<double> overlap(limit + 1), resid0(limit + 1), resid1(limit + 1);
    double acc_o = 0.0, acc_0 = 0.0, acc_1 = 0.0;
    for (std::size_t k = 0; k <= limit; ++k) {
        double const q = std::min(p[k], shifted(k));
        acc_o += q;
        acc_0 += p[k] - q;
        acc_1 += shifted(k) - q;
        overlap[k] = acc_o;
        resid0[k] = acc_0;
        resid1[k] = acc_1;
    }
    double const tv = exact_tv_poisson_shift(intensity);

    CouplingReport report;
    report.intensity = intensity;
    report.exact_disagreement = tv;
    report.samples = samples;
    report.histogram_y0.assign(limit + 2, 0);
    report.histogram_y1.assign(limit + 2, 0);

    Rng rng(seed);
    std::size_t disagreements = 0;
    double sum0 = 0.0, sum1 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        std::size_t y0, y1;
        if (rng.uniform() >= tv) {
            y0 = y1 = sample_from_cumulative(overlap, rng.uniform());
        } else {
            y0 = sample_from_cumulative(resid0, rng.uniform());
            y1 = sample_from_cumulative(resid1, rng.uniform());
        }
        disagreements += (y0 != y1);
        ++report.histogram_y0[y0];
        ++report.histogram_y1[y1];
        sum0 += static_cast<double>(y0);
        sum1 += static_cast<double>(y1);
    }
    auto const n = static_cast<double>(samples);
    report.empirical_disagreement = static_cast<double>(disagreements) / n;
    report.mean_y0 = sum0 / n;
    report.mean_y1 = sum1 / n;
    double const se = std::sqrt(tv * (1.0 - tv) / n);
    report.z_score = se > 0.0 ? (report.empirical_disagreement - tv) / se : 0.0;
    return report;
}

std::vector<TvBoundRow> tv_bound_check(int n_max)
{
    if (n_max < 1) {
        throw std::invalid_argument("tv_bound_check needs n_max >= 1");
    }
    std::vector<TvBoundRow> rows;
    for (int n = 1; n <= n_max; ++n) {
        double const tv = exact_tv_poisson_shift(4.0 * n * n);
        double const bound = 1.0 / n;
        rows.push_back({n, tv, bound, tv <= bound});
    }
    return rows;
}

// ---------------------------------------------------------------------------

void CellPartition::validate() const
{
    if (cells.empty()) {
        throw std::invalid_argument("cell partition is empty");
    }
    int const d = cells.front().dimension();
    for (auto const& c : cells) {
        if (c.dimension() != d || c.hi.size() != c.lo.size()) {
            throw std::invalid_argument("cells must share one dimension");
        }
        if (!(c.volume() > 0.0)) {
            throw std::invalid_argument("cells must have positive volume");
        }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
            bool overlap = true;
            for (int k = 0; k < d; ++k) {
                overlap = overlap && cells[i].lo[k] < cells[j].hi[k] && cells[j].lo[k] < cells[i].hi[k];
            }
            if (overlap) {
                throw std::invalid_argument("cells must be disjoint");
            }
        }
    }
    for (auto const& r : regions) {
        if (r.empty()) {
            throw std::invalid_argument("regions must contain at least one cell");
        }
        for (auto idx : r) {
            if (idx >= cells.size()) {
                throw std::invalid_argument("region references an unknown cell");
            }
        }
    }
}

namespace {

Window bounding_window(std::span<const Box> cells)
{
    double half = 0.0;
    for (auto const& c : cells) {
        for (std::size_t k = 0; k < c.lo.size(); ++k) {
            half = std::max({half, std::abs(c.lo[k]), std::abs(c.hi[k])});
        }
    }
    return {cells.front().dimension(), half, 0.0, Boundary::hard};
}

void uniform_in_box(Rng& rng, Box const& box, std::vector<double>& out)
{
    for (std::size_t k = 0; k < box.lo.size(); ++k) {
        out.push_back(rng.uniform(box.lo[k], box.hi[k]));
    }
}

} // namespace

CellSample sample_conditioned_nonempty(CellPartition const& partition, double intensity,
                                       std::uint64_t seed, std::size_t max_attempts)
{
    partition.validate();
    require_intensity(intensity);
    Rng rng(seed);
    std::vector<std::size_t> counts(partition.cells.size());
    for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
        for (std::size_t j = 0; j < counts.size(); ++j) {
            counts[j] = poisson_count(rng, intensity * partition.cells[j].volume());
        }
        bool const accepted = std::all_of(partition.regions.begin(), partition.regions.end(),
                                          [&counts](auto const& region) {
                                              return std::any_of(region.begin(), region.end(),
                                                                 [&counts](auto c) { return counts[c] > 0; });
                                          });
        if (!accepted) {
            continue;
        }
        CellSample out;
        out.points = PointSet{bounding_window(partition.cells), intensity, seed, {}};
        out.cell_counts = counts;
        out.attempts = attempt;
        for (std::size_t j = 0; j < counts.size(); ++j) {
            for (std::size_t i = 0; i < counts[j]; ++i) {
                uniform_in_box(rng, partition.cells[j], out.points.coords);
            }
        }
        return out;
    }
    throw RejectionLimitExceeded("conditioned sampler gave up after " + std::to_string(max_attempts) +
                                 " attempts; acceptance probability is too small for rejection");
}

CellSample sample_dominating_sum(std::span<const Box> cells, double intensity, std::uint64_t seed)
{
    CellPartition check{{cells.begin(), cells.end()}, {}};
    check.validate();
    require_intensity(intensity);
    Rng rng(seed);
    CellSample out;
    out.points = PointSet{bounding_window(cells), intensity, seed, {}};
    out.cell_counts.resize(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
        auto const n = poisson_count(rng, intensity * cells[j].volume()) + 1;
        out.cell_counts[j] = n;
        for (std::size_t i = 0; i < n; ++i) {
            uniform_in_box(rng, cells[j], out.points.coords);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string format_double(double x)
{
    std::array<char, 64> buf{};
    auto const res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return {buf.data(), res.ptr};
}

double parse_double(std::string const& text)
{
    double v = 0.0;
    auto const* first = text.data();
    auto const* last = text.data() + text.size();
    if (first != last && *first == '+') {
        ++first;
    }
    auto const res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    return v;
}

void write_point_set(std::ostream& out, PointSet const& points)
{
    auto const& w = points.window;
    out << "# levelperc point set v1\n"
        << "dimension " << w.dimension << '\n'
        << "half_width " << format_double(w.half_width) << '\n'
        << "margin " << format_double(w.margin) << '\n'
        << "boundary " << to_string(w.boundary) << '\n'
        << "intensity " << format_double(points.intensity) << '\n'
        << "seed " << points.seed << '\n'
        << "count " << points.size() << '\n';
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto const p = points.point(i);
        for (std::size_t k = 0; k < p.size(); ++k) {
            out << (k ? " " : "") << format_double(p[k]);
        }
        out << '\n';
    }
}

PointSet read_point_set(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "# levelperc point set v1") {
        throw std::invalid_argument("not a levelperc point set file");
    }
    auto expect = [&in](std::string const& key) {
        std::string k, v;
        if (!(in >> k >> v) || k != key) {
            throw std::invalid_argument("point set header: expected '" + key + "'");
        }
        return v;
    };
    PointSet ps;
    ps.window.dimension = std::stoi(expect("dimension"));
    ps.window.half_width = parse_double(expect("half_width"));
    ps.window.margin = parse_double(expect("margin"));
    ps.window.boundary = boundary_from_string(expect("boundary"));
    ps.intensity = parse_double(expect("intensity"));
    ps.seed = std::stoull(expect("seed"));
    auto const count = std::stoull(expect("count"));
    ps.window.validate();
    auto const total = count * static_cast<std::size_t>(ps.window.dimension);
    ps.coords.reserve(total);
    std::string token;
    for (std::size_t i = 0; i < total; ++i) {
        if (!(in >> token)) {
            throw std::invalid_argument("point set truncated");
        }
        ps.coords.push_back(parse_double(token));
    }
    return ps;
}

} // namespace levelperc
