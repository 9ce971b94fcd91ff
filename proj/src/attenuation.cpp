#include "levelperc/attenuation.hpp"

#include "levelperc/quadrature.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>

namespace levelperc {

namespace kernels {

double Tabulated::operator()(double r) const noexcept
{
    if (r <= radii.front()) {
        return values.front();
    }
    if (r > radii.back()) {
        return 0.0;
    }
    auto const it = std::upper_bound(radii.begin(), radii.end(), r);
    auto const hi = static_cast<std::size_t>(it - radii.begin());
    if (hi >= radii.size()) {
        return values.back();
    }
    auto const lo = hi - 1;
    double const t = (r - radii[lo]) / (radii[hi] - radii[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
}

} // namespace kernels

std::string to_string(KernelKind kind)
{
    switch (kind) {
    case KernelKind::indicator: return "indicator";
    case KernelKind::exponential: return "exponential";
    case KernelKind::power_law: return "power-law";
    case KernelKind::truncated_power_law: return "truncated-power-law";
    case KernelKind::tabulated: return "tabulated";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(std::string const& name)
{
    for (auto k : {KernelKind::indicator, KernelKind::exponential, KernelKind::power_law,
                   KernelKind::truncated_power_law, KernelKind::tabulated}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidKernel("unknown kernel kind '" + name + "'");
}

namespace {

void require(bool ok, std::string const& what)
{
    if (!ok) {
        throw InvalidKernel(what);
    }
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace

AttenuationSpec::AttenuationSpec(KernelKind kind, Params params)
    : kind_(kind), params_(std::move(params))
{
    std::visit(
        [this](auto const& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, kernels::Indicator>) {
                support_ = k.radius;
                at_zero_ = 1.0;
            } else if constexpr (std::is_same_v<K, kernels::Exponential>) {
                support_ = k.cutoff;
                at_zero_ = k.amplitude;
            } else if constexpr (std::is_same_v<K, kernels::PowerLaw>) {
                support_ = k.cutoff;
                at_zero_ = k.capped ? k.amplitude : kInfinity;
            } else {
                support_ = k.radii.back();
                at_zero_ = k.values.front();
            }
        },
        params_);
}

AttenuationSpec AttenuationSpec::indicator(double radius)
{
    require(positive_finite(radius), "indicator radius must be positive and finite");
    return {KernelKind::indicator, kernels::Indicator{radius}};
}

AttenuationSpec AttenuationSpec::exponential(double scale, double cutoff, double amplitude)
{
    require(positive_finite(scale), "exponential scale must be positive and finite");
    require(positive_finite(amplitude), "exponential amplitude must be positive and finite");
    require(cutoff > 0.0, "exponential cutoff must be positive");
    return {KernelKind::exponential, kernels::Exponential{scale, amplitude, cutoff}};
}

AttenuationSpec AttenuationSpec::power_law(double exponent, double scale, double amplitude, bool capped)
{
    require(positive_finite(exponent), "power-law exponent must be positive and finite");
    require(positive_finite(scale), "power-law scale must be positive and finite");
    require(positive_finite(amplitude), "power-law amplitude must be positive and finite");
    return {KernelKind::power_law, kernels::PowerLaw{exponent, scale, amplitude, capped, kInfinity}};
}

AttenuationSpec AttenuationSpec::truncated_power_law(double exponent, double cutoff, double scale,
                                                     double amplitude, bool capped)
{
    require(positive_finite(exponent), "power-law exponent must be positive and finite");
    require(positive_finite(scale), "power-law scale must be positive and finite");
    require(positive_finite(amplitude), "power-law amplitude must be positive and finite");
    require(positive_finite(cutoff), "truncated power-law needs a positive finite cutoff");
    return {KernelKind::truncated_power_law,
            kernels::PowerLaw{exponent, scale, amplitude, capped, cutoff}};
}

AttenuationSpec AttenuationSpec::tabulated(std::vector<double> radii, std::vector<double> values)
{
    require(radii.size() >= 2, "table needs at least two rows");
    require(radii.size() == values.size(), "table columns differ in length");
    require(std::isfinite(radii.front()) && radii.front() >= 0.0, "table radii must be >= 0");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        require(positive_finite(values[i]), "table values must be positive and finite");
        require(std::isfinite(radii[i]), "table radii must be finite");
        if (i > 0) {
            require(radii[i] > radii[i - 1], "table radii must be strictly increasing");
            require(values[i] <= values[i - 1], "table values must be non-increasing");
        }
    }
    return {KernelKind::tabulated, kernels::Tabulated{std::move(radii), std::move(values)}};
}

AttenuationSpec AttenuationSpec::from_table_file(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidKernel("cannot open kernel table '" + path.string() + "'");
    }
    std::vector<double> radii, values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        double r, v;
        if (!(fields >> r)) {
            continue;
        }
        std::string rest;
        if (!(fields >> v) || (fields >> rest)) {
            throw InvalidKernel(path.string() + ":" + std::to_string(lineno) +
                                ": expected two columns");
        }
        radii.push_back(r);
        values.push_back(v);
    }
    return tabulated(std::move(radii), std::move(values));
}

bool AttenuationSpec::continuous() const noexcept
{
    return std::visit(
        [](auto const& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, kernels::Indicator> ||
                          std::is_same_v<K, kernels::Tabulated>) {
                return false;
            } else {
                return std::isinf(k.cutoff);
            }
        },
        params_);
}

std::vector<double> AttenuationSpec::breakpoints() const
{
    return std::visit(
        [](auto const& k) -> std::vector<double> {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, kernels::Indicator>) {
                return {k.radius};
            } else if constexpr (std::is_same_v<K, kernels::Exponential>) {
                return std::isfinite(k.cutoff) ? std::vector<double>{k.cutoff} : std::vector<double>{};
            } else if constexpr (std::is_same_v<K, kernels::PowerLaw>) {
                std::vector<double> out;
                if (k.capped) {
                    out.push_back(k.scale);
                }
                if (std::isfinite(k.cutoff)) {
                    out.push_back(k.cutoff);
                }
                return out;
            } else {
                return k.radii;
            }
        },
        params_);
}

std::string AttenuationSpec::describe() const
{
    std::ostringstream os;
    os << to_string(kind_) << '(';
    std::visit(
        [&os](auto const& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, kernels::Indicator>) {
                os << "radius=" << k.radius;
            } else if constexpr (std::is_same_v<K, kernels::Exponential>) {
                os << "scale=" << k.scale << ", amplitude=" << k.amplitude;
                if (std::isfinite(k.cutoff)) {
                    os << ", cutoff=" << k.cutoff;
                }
            } else if constexpr (std::is_same_v<K, kernels::PowerLaw>) {
                os << "exponent=" << k.exponent << ", scale=" << k.scale
                   << ", amplitude=" << k.amplitude << ", capped=" << (k.capped ? "true" : "false");
                if (std::isfinite(k.cutoff)) {
                    os << ", cutoff=" << k.cutoff;
                }
            } else {
                os << k.radii.size() << " rows, support=" << k.radii.back();
            }
        },
        params_);
    os << ')';
    return os.str();
}

namespace {

// Γ(n, x) for integer n >= 1.
double upper_gamma_int(int n, double x)
{
    if (std::isinf(x)) {
        return 0.0;
    }
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < n; ++k) {
        term *= x / k;
        sum += term;
    }
    double factorial = 1.0;
    for (int k = 2; k < n; ++k) {
        factorial *= k;
    }
    return factorial * std::exp(-x) * sum;
}

// ∫_{u1}^{u2} r^q dr, 0 <= u1 <= u2 <= ∞, possibly +∞.
double power_integral(double u1, double u2, double q)
{
    if (!(u2 > u1)) {
        return 0.0;
    }
    double const e = q + 1.0;
    if (e == 0.0) {
        if (u1 == 0.0 || std::isinf(u2)) {
            return kInfinity;
        }
        return std::log(u2 / u1);
    }
    double upper, lower;
    if (std::isinf(u2)) {
        if (e > 0.0) {
            return kInfinity;
        }
        upper = 0.0;
    } else {
        upper = std::pow(u2, e);
    }
    if (u1 == 0.0) {
        if (e < 0.0) {
            return kInfinity;
        }
        lower = 0.0;
    } else {
        lower = std::pow(u1, e);
    }
    return (upper - lower) / e;
}

} // namespace

double moment_tail(AttenuationSpec const& spec, double a, int p)
{
    if (a < 0.0 || p < 0) {
        throw std::invalid_argument("moment_tail: need a >= 0 and p >= 0");
    }
    return spec.visit([a, p](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kernels::Indicator>) {
            return power_integral(a, k.radius, p);
        } else if constexpr (std::is_same_v<K, kernels::Exponential>) {
            if (a >= k.cutoff) {
                return 0.0;
            }
            double const s = k.scale;
            return k.amplitude * std::pow(s, p + 1) *
                   (upper_gamma_int(p + 1, a / s) - upper_gamma_int(p + 1, k.cutoff / s));
        } else if constexpr (std::is_same_v<K, kernels::PowerLaw>) {
            double total = 0.0;
            double const flat_end = k.capped ? std::min(k.scale, k.cutoff) : 0.0;
            if (a < flat_end) {
                total += k.amplitude * power_integral(a, flat_end, p);
            }
            double const lo = std::max(a, flat_end);
            if (lo < k.cutoff) {
                total += k.amplitude * std::pow(k.scale, k.exponent) *
                         power_integral(lo, k.cutoff, p - k.exponent);
            }
            return total;
        } else {
            double total = 0.0;
            auto const& r = k.radii;
            auto const& v = k.values;
            if (a < r.front()) {
                total += v.front() * power_integral(a, r.front(), p);
            }
            for (std::size_t i = 0; i + 1 < r.size(); ++i) {
                double const lo = std::max(a, r[i]);
                double const hi = r[i + 1];
                if (lo >= hi) {
                    continue;
                }
                double const slope = (v[i + 1] - v[i]) / (r[i + 1] - r[i]);
                double const intercept = v[i] - slope * r[i];
                total += intercept * power_integral(lo, hi, p) + slope * power_integral(lo, hi, p + 1);
            }
            return std::max(total, 0.0);
        }
    });
}

TailIntegral tail_integral(AttenuationSpec const& spec, double a, int d)
{
    if (d < 1 || a < 0.0) {
        throw std::invalid_argument("tail_integral: need a >= 0 and d >= 1");
    }
    double const v = moment_tail(spec, a, d - 1);
    TailIntegral out{a, d, v, std::isfinite(v), 0.0};
    if (out.finite) {
        out.abs_error = 1e-13 * std::abs(v) + 1e-300;
    }
    return out;
}

TailIntegral tail_integral_quadrature(AttenuationSpec const& spec, double a, int d)
{
    if (d < 1 || a < 0.0) {
        throw std::invalid_argument("tail_integral_quadrature: need a >= 0 and d >= 1");
    }
    auto integrand = [&spec, d](double r) { return std::pow(r, d - 1) * spec(r); };
    auto const breaks = spec.breakpoints();
    QuadratureOptions opts;
    opts.abs_tol = 1e-15;
    opts.rel_tol = 1e-12;
    double const support = spec.support_radius();
    if (std::isfinite(support)) {
        if (a >= support) {
            return {a, d, 0.0, true, 0.0};
        }
        auto res = integrate(integrand, a, support, breaks, opts);
        if (!res.converged) {
            if (res.value > 1e12 || !std::isfinite(res.value)) {
                return {a, d, kInfinity, false, 0.0};
            }
            throw QuadratureFailure("quadrature did not converge on [" + std::to_string(a) + ", " +
                                    std::to_string(support) + "]");
        }
        return {a, d, res.value, true, res.abs_error};
    }
    auto res = integrate_to_infinity(integrand, a, breaks, opts);
    switch (res.status) {
    case TailStatus::converged: return {a, d, res.value, true, res.abs_error};
    case TailStatus::divergent: return {a, d, kInfinity, false, 0.0};
    case TailStatus::not_converged: break;
    }
    throw QuadratureFailure("tail quadrature neither converged nor diverged for " + spec.describe());
}

bool is_integrable(AttenuationSpec const& spec, int d)
{
    if (std::isfinite(spec.support_radius())) {
        return true;
    }
    if (auto const* pl = std::get_if<kernels::PowerLaw>(&spec.params())) {
        return pl->exponent > d;
    }
    return tail_integral(spec, 1.0, d).finite;
}

double unit_sphere_area(int d)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double unit_ball_volume(int d)
{
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double sup_kernel(AttenuationSpec const& spec, double alpha, int d, double r) noexcept
{
    double const shift = alpha * std::sqrt(static_cast<double>(d)) / 2.0;
    return r <= shift ? spec.at_zero() : spec(r - shift);
}

double truncation_radius(AttenuationSpec const& spec, int d, double intensity, double budget)
{
    if (!(budget > 0.0) || !(intensity > 0.0)) {
        throw std::invalid_argument("truncation_radius: need intensity > 0 and budget > 0");
    }
    if (std::isfinite(spec.support_radius())) {
        return spec.support_radius();
    }
    if (!is_integrable(spec, d)) {
        throw NonIntegrableKernel("kernel " + spec.describe() + " has a divergent far-field integral " +
                                  "∫_1^∞ r^(d-1) l(r) dr in d=" + std::to_string(d) +
                                  "; the field is almost surely infinite and cannot be truncated");
    }
    double const scale = intensity * unit_sphere_area(d);
    auto discarded = [&](double R) { return scale * moment_tail(spec, R, d - 1); };

    if (discarded(0.0) <= budget) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (discarded(hi) > budget) {
        lo = hi;
        hi = hi < 64.0 ? hi + 1.0 : 2.0 * hi;
        if (!std::isfinite(hi)) {
            throw NonIntegrableKernel("truncation radius search escaped to infinity");
        }
    }
    while (hi - lo > 1e-12 * hi) {
        double const mid = 0.5 * (lo + hi);
        if (discarded(mid) <= budget) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

} // namespace levelperc
