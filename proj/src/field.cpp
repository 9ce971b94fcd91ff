#include "levelperc/field.hpp"

#include "levelperc/quadrature.hpp"
#include "levelperc/rng.hpp"
#include "spatial_hash.hpp"

#include <omp.h>

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace levelperc {

using detail::CompensatedSum;

std::string to_string(FieldMode m) { return m == FieldMode::sup_bound ? "sup-bound" : "exact-center"; }

FieldMode field_mode_from_string(std::string const& name)
{
    if (name == "exact-center") {
        return FieldMode::exact_center;
    }
    if (name == "sup-bound") {
        return FieldMode::sup_bound;
    }
    throw std::invalid_argument("unknown field mode '" + name + "'");
}

GridGeometry GridGeometry::covering(int dimension, double half_width, double alpha)
{
    if (dimension < 1 || dimension > kMaxDimension) {
        throw std::invalid_argument("grid dimension must be in 1.." + std::to_string(kMaxDimension));
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("lattice spacing must be positive and finite");
    }
    if (!(half_width >= 0.0) || !std::isfinite(half_width)) {
        throw std::invalid_argument("window half-width must be finite and >= 0");
    }
    int const m = static_cast<int>(std::max(0.0, std::ceil(half_width / alpha - 0.5 - 1e-12)));
    return {dimension, half_width, alpha, m};
}

std::size_t GridGeometry::cell_count() const noexcept
{
    std::size_t n = 1;
    for (int k = 0; k < dimension; ++k) {
        n *= static_cast<std::size_t>(cells_per_axis());
    }
    return n;
}

std::size_t GridGeometry::stride(int axis) const noexcept
{
    std::size_t s = 1;
    for (int k = 0; k < axis; ++k) {
        s *= static_cast<std::size_t>(cells_per_axis());
    }
    return s;
}

int GridGeometry::coordinate(std::size_t cell, int axis) const noexcept
{
    return static_cast<int>((cell / stride(axis)) % static_cast<std::size_t>(cells_per_axis()));
}

std::size_t GridGeometry::origin_cell() const noexcept
{
    std::size_t flat = 0;
    for (int k = 0; k < dimension; ++k) {
        flat += static_cast<std::size_t>(half_cells) * stride(k);
    }
    return flat;
}

namespace {

double window_period(Window const& w) { return w.boundary == Boundary::torus ? w.period() : 0.0; }

void check_radius(AttenuationSpec const& spec, int d, double radius)
{
    if (!std::isfinite(radius) || radius < 0.0) {
        if (!is_integrable(spec, d)) {
            throw NonIntegrableKernel("kernel " + spec.describe() +
                                      " is not integrable at infinity; a finite truncation radius is required");
        }
        throw std::invalid_argument("truncation radius must be finite and >= 0");
    }
}

void cell_center(GridGeometry const& g, std::size_t cell, double* out)
{
    auto const n = static_cast<std::size_t>(g.cells_per_axis());
    for (int k = 0; k < g.dimension; ++k) {
        out[k] = (static_cast<int>(cell % n) - g.half_cells) * g.alpha;
        cell /= n;
    }
}

/// Per-term contribution at distance r; sets `infinite` on atoms of unbounded kernels.
template <class Kernel>
struct TermRule {
    Kernel const& kernel;
    double at_zero;
    double shift; // 0 for exact-center, α√d/2 for sup-bound

    double operator()(double r, bool& infinite) const noexcept
    {
        double v;
        if (shift > 0.0) {
            v = r <= shift ? at_zero : kernel(r - shift);
        } else {
            v = (r <= kCoincidence && std::isinf(at_zero)) ? at_zero : kernel(r);
        }
        if (std::isinf(v)) {
            infinite = true;
            return 0.0;
        }
        return v;
    }
};

FieldGrid make_grid(PointSet const& points, double alpha, double radius, FieldMode mode, double budget)
{
    FieldGrid grid;
    grid.geometry = GridGeometry::covering(points.window.dimension, points.window.half_width, alpha);
    grid.mode = mode;
    grid.tail_budget = budget;
    grid.truncation_radius = radius;
    grid.seed = points.seed;
    grid.values.assign(grid.geometry.cell_count(), 0.0);
    return grid;
}

double sup_shift(FieldMode mode, double alpha, int d)
{
    return mode == FieldMode::sup_bound ? alpha * std::sqrt(static_cast<double>(d)) / 2.0 : 0.0;
}

} // namespace

double evaluate_point(PointSet const& points, AttenuationSpec const& spec, std::span<const double> y,
                      double radius)
{
    int const d = points.window.dimension;
    if (static_cast<int>(y.size()) != d) {
        throw std::invalid_argument("evaluate_point: coordinate dimension mismatch");
    }
    check_radius(spec, d, radius);
    double const period = window_period(points.window);
    return spec.visit([&](auto const& kernel) {
        TermRule<std::decay_t<decltype(kernel)>> rule{kernel, spec.at_zero(), 0.0};
        CompensatedSum acc;
        bool infinite = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double const r = detail::distance(points.point(i).data(), y.data(), d, period);
            if (r <= radius) {
                acc.add(rule(r, infinite));
            }
        }
        return infinite ? kInfinity : acc.value();
    });
}

FieldGrid field_on_grid(PointSet const& points, AttenuationSpec const& spec, double alpha, double radius,
                        FieldMode mode, double tail_budget)
{
    int const d = points.window.dimension;
    check_radius(spec, d, radius);
    FieldGrid grid = make_grid(points, alpha, radius, mode, tail_budget);
    double const shift = sup_shift(mode, alpha, d);
    detail::SpatialHash const hash(points, radius + shift);
    auto const cells = static_cast<std::ptrdiff_t>(grid.values.size());

    spec.visit([&](auto const& kernel) {
        TermRule<std::decay_t<decltype(kernel)>> const rule{kernel, spec.at_zero(), shift};
#pragma omp parallel for schedule(static) if (!omp_in_parallel() && cells > 1024)
        for (std::ptrdiff_t c = 0; c < cells; ++c) {
            double y[kMaxDimension];
            cell_center(grid.geometry, static_cast<std::size_t>(c), y);
            CompensatedSum acc;
            bool infinite = false;
            hash.visit(y, [&](double r, std::size_t) { acc.add(rule(r, infinite)); });
            grid.values[static_cast<std::size_t>(c)] = infinite ? kInfinity : acc.value();
        }
    });
    return grid;
}

FieldGrid reference::field_on_grid(PointSet const& points, AttenuationSpec const& spec, double alpha,
                                   double radius, FieldMode mode, double tail_budget)
{
    int const d = points.window.dimension;
    check_radius(spec, d, radius);
    FieldGrid grid = make_grid(points, alpha, radius, mode, tail_budget);
    double const shift = sup_shift(mode, alpha, d);
    double const reach = radius + shift;
    double const period = window_period(points.window);
    for (std::size_t c = 0; c < grid.values.size(); ++c) {
        double y[kMaxDimension];
        cell_center(grid.geometry, c, y);
        CompensatedSum acc;
        bool infinite = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double const r = detail::distance(points.point(i).data(), y, d, period);
            if (r > reach) {
                continue;
            }
            double v = mode == FieldMode::sup_bound ? sup_kernel(spec, alpha, d, r)
                       : (r <= kCoincidence && std::isinf(spec.at_zero())) ? spec.at_zero()
                                                                           : spec(r);
            if (std::isinf(v)) {
                infinite = true;
            } else {
                acc.add(v);
            }
        }
        grid.values[c] = infinite ? kInfinity : acc.value();
    }
    return grid;
}

double expected_field_value(AttenuationSpec const& spec, double intensity, int dimension)
{
    double const integral = moment_tail(spec, 0.0, dimension - 1);
    return std::isfinite(integral) ? intensity * unit_sphere_area(dimension) * integral : kInfinity;
}

namespace {

std::size_t draw_count(Rng& rng, double mean)
{
    if (!(mean > 0.0)) {
        return 0;
    }
    std::poisson_distribution<std::int64_t> dist(mean);
    return static_cast<std::size_t>(dist(rng));
}

void mean_and_error(std::vector<double> const& samples, double& mean, double& se)
{
    auto const n = static_cast<double>(samples.size());
    CompensatedSum s;
    for (double v : samples) {
        s.add(v);
    }
    mean = s.value() / n;
    CompensatedSum sq;
    for (double v : samples) {
        sq.add((v - mean) * (v - mean));
    }
    double const var = samples.size() > 1 ? sq.value() / (n - 1.0) : 0.0;
    se = std::sqrt(var / n);
}

} // namespace

CampbellCheck campbell_mgf(AttenuationSpec const& g, double s, double domain_radius, double intensity,
                           int dimension, std::size_t draws, std::uint64_t seed)
{
    if (!(domain_radius > 0.0) || !(intensity > 0.0) || draws < 1) {
        throw std::invalid_argument("campbell_mgf: need radius > 0, intensity > 0, draws >= 1");
    }
    if (s * g.at_zero() > 1.0) {
        throw std::invalid_argument("campbell_mgf: s * sup g must not exceed 1");
    }
    auto integrand = [&](double r) {
        return std::pow(r, dimension - 1) * std::expm1(s * g(r));
    };
    auto const quad = integrate(integrand, 0.0, domain_radius, g.breakpoints());
    if (!quad.converged) {
        throw QuadratureFailure("campbell_mgf: exponent quadrature failed");
    }

    CampbellCheck out;
    out.description = "E exp(s sum g), g = " + g.describe() + ", ball radius " + format_double(domain_radius);
    out.parameter = s;
    out.analytic = std::exp(intensity * unit_sphere_area(dimension) * quad.value);
    out.replicates = draws;

    std::vector<double> samples(draws);
    double const box_volume = std::pow(2.0 * domain_radius, dimension);
    auto const n = static_cast<std::ptrdiff_t>(draws);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        Rng rng(seed, static_cast<std::uint64_t>(j));
        auto const count = draw_count(rng, intensity * box_volume);
        CompensatedSum acc;
        for (std::size_t i = 0; i < count; ++i) {
            double r2 = 0.0;
            for (int k = 0; k < dimension; ++k) {
                double const x = rng.uniform(-domain_radius, domain_radius);
                r2 += x * x;
            }
            double const r = std::sqrt(r2);
            if (r <= domain_radius) {
                acc.add(g(r));
            }
        }
        samples[static_cast<std::size_t>(j)] = std::exp(s * acc.value());
    }
    mean_and_error(samples, out.estimate, out.std_error);
    out.heavy_tailed = out.estimate > 0.0 && out.std_error / out.estimate > 0.10;
    return out;
}

CampbellCheck campbell_mean(AttenuationSpec const& spec, double intensity, int dimension,
                            std::size_t replicates, std::uint64_t seed, double budget)
{
    if (replicates < 1) {
        throw std::invalid_argument("campbell_mean needs at least one replicate");
    }
    double const radius = truncation_radius(spec, dimension, intensity, budget);
    CampbellCheck out;
    out.description = "E psi(o), kernel " + spec.describe();
    out.analytic = expected_field_value(spec, intensity, dimension);
    out.replicates = replicates;
    std::vector<double> samples(replicates);
    std::vector<double> const origin(static_cast<std::size_t>(dimension), 0.0);
    Window const window{dimension, radius, 0.0, Boundary::hard};
    auto const n = static_cast<std::ptrdiff_t>(replicates);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        auto const pts = sample_poisson(window, intensity, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        samples[static_cast<std::size_t>(r)] = evaluate_point(pts, spec, origin, radius);
    }
    mean_and_error(samples, out.estimate, out.std_error);
    out.heavy_tailed = out.estimate > 0.0 && out.std_error / out.estimate > 0.10;
    return out;
}

std::vector<double> origin_field_by_radius(AttenuationSpec const& spec, double intensity, int dimension,
                                           std::span<const double> radii, std::uint64_t seed)
{
    if (!(intensity > 0.0) || dimension < 1) {
        throw std::invalid_argument("origin_field_by_radius: bad intensity or dimension");
    }
    Rng rng(seed);
    double const ball = unit_ball_volume(dimension);
    double const inv_d = 1.0 / dimension;
    std::vector<double> out;
    out.reserve(radii.size());
    CompensatedSum acc;
    bool infinite = false;
    double inner = 0.0;
    for (double outer : radii) {
        if (!(outer >= inner)) {
            throw std::invalid_argument("origin_field_by_radius: radii must ascend");
        }
        double const inner_d = std::pow(inner, dimension);
        double const span_d = std::pow(outer, dimension) - inner_d;
        auto const count = draw_count(rng, intensity * ball * span_d);
        for (std::size_t i = 0; i < count; ++i) {
            double const r = std::pow(inner_d + rng.uniform() * span_d, inv_d);
            double const v = spec(r);
            if (std::isinf(v)) {
                infinite = true;
            } else {
                acc.add(v);
            }
        }
        out.push_back(infinite ? kInfinity : acc.value());
        inner = outer;
    }
    return out;
}

std::vector<std::uint8_t> cells_far_from_points(GridGeometry const& geometry, PointSet const& points,
                                                double distance)
{
    std::vector<std::uint8_t> mask(geometry.cell_count(), 1);
    detail::SpatialHash const hash(points, distance);
    auto const cells = static_cast<std::ptrdiff_t>(mask.size());
#pragma omp parallel for schedule(static) if (!omp_in_parallel() && cells > 1024)
    for (std::ptrdiff_t c = 0; c < cells; ++c) {
        double y[kMaxDimension];
        cell_center(geometry, static_cast<std::size_t>(c), y);
        bool far = true;
        hash.visit(y, [&](double r, std::size_t) { far = far && !(r < distance); });
        mask[static_cast<std::size_t>(c)] = far ? 1 : 0;
    }
    return mask;
}

ContinuityReport continuity_modulus(FieldGrid const& grid, std::span<const std::uint8_t> include)
{
    if (grid.mode != FieldMode::exact_center) {
        throw std::invalid_argument("continuity_modulus expects an exact-center grid");
    }
    auto const& g = grid.geometry;
    if (!include.empty() && include.size() != grid.values.size()) {
        throw std::invalid_argument("continuity_modulus: mask size mismatch");
    }
    auto usable = [&](std::size_t c) {
        return std::isfinite(grid.values[c]) && (include.empty() || include[c] != 0);
    };
    ContinuityReport report;
    std::vector<double> gaps;
    int const n = g.cells_per_axis();
    for (std::size_t c = 0; c < grid.values.size(); ++c) {
        if (std::isinf(grid.values[c])) {
            ++report.infinite_cells;
        }
        if (!usable(c)) {
            continue;
        }
        for (int k = 0; k < g.dimension; ++k) {
            if (g.coordinate(c, k) + 1 >= n) {
                continue;
            }
            std::size_t const nb = c + g.stride(k);
            if (!usable(nb)) {
                continue;
            }
            gaps.push_back(std::abs(grid.values[c] - grid.values[nb]));
        }
    }
    report.pairs = gaps.size();
    report.histogram.assign(32, 0);
    if (!gaps.empty()) {
        report.max_gap = *std::max_element(gaps.begin(), gaps.end());
        for (double v : gaps) {
            auto bin = report.max_gap > 0.0 ? static_cast<std::size_t>(v / report.max_gap * 32.0) : 0;
            ++report.histogram[std::min<std::size_t>(bin, 31)];
        }
    }
    return report;
}

XiFieldReport deterministic_xi_field(AttenuationSpec const& spec, double alpha, int dimension, double radius)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("deterministic_xi_field: need 0 < alpha < 1");
    }
    if (dimension < 1 || dimension > kMaxDimension) {
        throw std::invalid_argument("deterministic_xi_field: unsupported dimension");
    }
    double const sqrt_d = std::sqrt(static_cast<double>(dimension));
    int const c = static_cast<int>(std::ceil(sqrt_d - 1e-12));
    int const excluded = 2 * c + 1; // boxes with every |z_i| <= 2c+1 meet A_o
    double const sigma = 1.5 * alpha * sqrt_d;
    double const shift = alpha * sqrt_d / 2.0;
    double reach = std::max(radius, sigma);
    bool const finite_support = std::isfinite(spec.support_radius());
    if (finite_support) {
        reach = std::max(reach, spec.support_radius() + shift);
    }
    int const zmax = static_cast<int>(std::ceil(reach / alpha)) + 1;

    XiFieldReport out;
    CompensatedSum direct;
    std::array<int, kMaxDimension> z{};
    z.fill(-zmax);
    while (true) {
        int maxabs = 0;
        double r2 = 0.0;
        for (int k = 0; k < dimension; ++k) {
            maxabs = std::max(maxabs, std::abs(z[k]));
            // closest point of [zα - α/2, zα + α/2] to 0
            double const lo = (z[k] - 0.5) * alpha;
            double const hi = (z[k] + 0.5) * alpha;
            double const x = lo > 0.0 ? lo : (hi < 0.0 ? hi : 0.0);
            r2 += x * x;
        }
        double const r = std::sqrt(r2);
        if (maxabs > excluded && r <= reach) {
            double const v = sup_kernel(spec, alpha, dimension, r);
            if (v > 0.0) {
                direct.add(v);
                ++out.contributing_boxes;
            }
        }
        int k = 0;
        while (k < dimension && ++z[k] > zmax) {
            z[k] = -zmax;
            ++k;
        }
        if (k == dimension) {
            break;
        }
    }
    out.direct = direct.value();
    // Σ over boxes beyond `reach` <= (|S|/α^d) Σ_j C(d-1, j) σ^(d-1-j) ∫_{reach-σ}^∞ u^j l(u) du
    double tail = 0.0;
    for (int j = 0; j <= dimension - 1; ++j) {
        double coeff = 1.0;
        for (int i = 0; i < j; ++i) {
            coeff = coeff * (dimension - 1 - i) / (i + 1);
        }
        tail += coeff * std::pow(sigma, dimension - 1 - j) * moment_tail(spec, reach - sigma, j);
    }
    // Beyond support + shift every l̃ term vanishes exactly.
    out.tail_bound = finite_support ? 0.0 : unit_sphere_area(dimension) / std::pow(alpha, dimension) * tail;
    out.value = out.direct + out.tail_bound;
    out.i_alpha = tail_integral(spec, alpha / 2.0, dimension).value;
    out.ratio = out.value / (out.i_alpha / std::pow(alpha, dimension));
    return out;
}

GoodBoxReport good_box_fraction(PointSet const& points, double alpha, std::size_t bootstrap_samples,
                                std::uint64_t seed)
{
    int const d = points.window.dimension;
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("good_box_fraction: alpha must be positive");
    }
    if (d > kMaxDimension) {
        throw std::invalid_argument("good_box_fraction: unsupported dimension");
    }
    int const c = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)) - 1e-12));
    int const reach = 2 * c; // A_α(B) covers boxes within ±2c per axis
    double const side = (4 * c + 1) * alpha;

    // Boxes z with |z_i| <= zs lie entirely in the sampling box.
    double const sample_half = points.window.sample_half_width();
    int const zs = static_cast<int>(std::floor(sample_half / alpha - 0.5 + 1e-12));
    int const zobs = static_cast<int>(std::floor(points.window.half_width / alpha - 0.5 + 1e-12));
    int const zeval = std::min(zs - reach, zobs);

    GoodBoxReport out;
    out.expected = std::exp(-points.intensity * std::pow(side, d));
    if (zeval < 0) {
        throw std::invalid_argument("good_box_fraction: window too small for the enlarged boxes");
    }

    int const n = 2 * zs + 1;
    std::vector<std::size_t> stride(static_cast<std::size_t>(d) + 1, 1);
    for (int k = 0; k < d; ++k) {
        stride[k + 1] = stride[k] * static_cast<std::size_t>(n);
    }
    std::vector<double> counts(stride[d], 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto const p = points.point(i);
        std::size_t flat = 0;
        bool inside = true;
        for (int k = 0; k < d; ++k) {
            long const z = std::lround(p[k] / alpha);
            if (std::abs(z) > zs) {
                inside = false;
                break;
            }
            flat += static_cast<std::size_t>(z + zs) * stride[k];
        }
        if (inside) {
            counts[flat] += 1.0;
        }
    }
    // Separable box sums of radius `reach` along each axis.
    std::vector<double> scratch(counts.size());
    for (int k = 0; k < d; ++k) {
        for (std::size_t cell = 0; cell < counts.size(); ++cell) {
            int const zk = static_cast<int>((cell / stride[k]) % static_cast<std::size_t>(n));
            double s = 0.0;
            for (int off = -reach; off <= reach; ++off) {
                int const zz = zk + off;
                if (zz >= 0 && zz < n) {
                    s += counts[cell + static_cast<std::size_t>(zz - zk) * stride[k]];
                }
            }
            scratch[cell] = s;
        }
        counts.swap(scratch);
    }

    int const block = 2 * (4 * c + 1);
    int const blocks_per_axis = (2 * zeval + 1 + block - 1) / block;
    std::size_t n_blocks = 1;
    for (int k = 0; k < d; ++k) {
        n_blocks *= static_cast<std::size_t>(blocks_per_axis);
    }
    std::vector<double> block_good(n_blocks, 0.0), block_total(n_blocks, 0.0);
    std::array<int, kMaxDimension> z{};
    z.fill(-zeval);
    std::size_t good = 0, total = 0;
    while (true) {
        std::size_t flat = 0, bflat = 0, bmult = 1;
        for (int k = 0; k < d; ++k) {
            flat += static_cast<std::size_t>(z[k] + zs) * stride[k];
            bflat += static_cast<std::size_t>((z[k] + zeval) / block) * bmult;
            bmult *= static_cast<std::size_t>(blocks_per_axis);
        }
        bool const is_good = counts[flat] == 0.0;
        good += is_good;
        ++total;
        block_good[bflat] += is_good;
        block_total[bflat] += 1.0;
        int k = 0;
        while (k < d && ++z[k] > zeval) {
            z[k] = -zeval;
            ++k;
        }
        if (k == d) {
            break;
        }
    }
    out.boxes = total;
    out.fraction = static_cast<double>(good) / static_cast<double>(total);

    Rng rng(seed);
    std::vector<double> replicate(bootstrap_samples);
    for (auto& rep : replicate) {
        double g = 0.0, t = 0.0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            auto const pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_blocks));
            g += block_good[pick];
            t += block_total[pick];
        }
        rep = t > 0.0 ? g / t : 0.0;
    }
    if (bootstrap_samples > 1) {
        double mean = 0.0, se = 0.0;
        mean_and_error(replicate, mean, se);
        out.std_error = se * std::sqrt(static_cast<double>(bootstrap_samples));
    }
    return out;
}

void write_field_grid(std::ostream& out, FieldGrid const& grid)
{
    auto const& g = grid.geometry;
    out << "# levelperc field grid v1\n"
        << "dimension " << g.dimension << '\n'
        << "half_width " << format_double(g.half_width) << '\n'
        << "alpha " << format_double(g.alpha) << '\n'
        << "cells_per_axis " << g.cells_per_axis() << '\n'
        << "mode " << to_string(grid.mode) << '\n'
        << "epsilon " << format_double(grid.tail_budget) << '\n'
        << "truncation_radius " << format_double(grid.truncation_radius) << '\n'
        << "seed " << grid.seed << '\n'
        << "values\n";
    auto const n = static_cast<std::size_t>(g.cells_per_axis());
    for (std::size_t c = 0; c < grid.values.size(); ++c) {
        out << format_double(grid.values[c]) << ((c + 1) % n == 0 ? '\n' : ' ');
    }
}

FieldGrid read_field_grid(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "# levelperc field grid v1") {
        throw std::invalid_argument("not a levelperc field grid file");
    }
    auto expect = [&in](std::string const& key) {
        std::string k, v;
        if (!(in >> k >> v) || k != key) {
            throw std::invalid_argument("field grid header: expected '" + key + "'");
        }
        return v;
    };
    int const d = std::stoi(expect("dimension"));
    double const half = parse_double(expect("half_width"));
    double const alpha = parse_double(expect("alpha"));
    int const n = std::stoi(expect("cells_per_axis"));
    FieldGrid grid;
    grid.geometry = GridGeometry::covering(d, half, alpha);
    if (grid.geometry.cells_per_axis() != n) {
        throw std::invalid_argument("field grid header: inconsistent cell count");
    }
    grid.mode = field_mode_from_string(expect("mode"));
    grid.tail_budget = parse_double(expect("epsilon"));
    grid.truncation_radius = parse_double(expect("truncation_radius"));
    grid.seed = std::stoull(expect("seed"));
    std::string tag;
    if (!(in >> tag) || tag != "values") {
        throw std::invalid_argument("field grid: missing values section");
    }
    grid.values.resize(grid.geometry.cell_count());
    std::string token;
    for (auto& v : grid.values) {
        if (!(in >> token)) {
            throw std::invalid_argument("field grid truncated");
        }
        v = parse_double(token);
    }
    return grid;
}

void write_graymap(std::ostream& out, FieldGrid const& grid, double lo, double hi)
{
    auto const& g = grid.geometry;
    int const n = g.cells_per_axis();
    std::size_t slice = 0;
    for (int k = 2; k < g.dimension; ++k) {
        slice += static_cast<std::size_t>(g.half_cells) * g.stride(k);
    }
    int const rows = g.dimension >= 2 ? n : 1;
    out << "P2\n" << n << ' ' << rows << "\n255\n";
    for (int row = rows - 1; row >= 0; --row) {
        for (int col = 0; col < n; ++col) {
            std::size_t const cell = slice + static_cast<std::size_t>(col) +
                                     (g.dimension >= 2 ? static_cast<std::size_t>(row) * g.stride(1) : 0);
            double const v = grid.values[cell];
            int level;
            if (std::isinf(v)) {
                level = 255;
            } else if (!(hi > lo)) {
                level = 0;
            } else {
                level = static_cast<int>(std::lround(std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * 255.0));
            }
            out << level << (col + 1 == n ? '\n' : ' ');
        }
    }
}

} // namespace levelperc
