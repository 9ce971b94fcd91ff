#include "levelperc/cli.hpp"

#include "levelperc/experiments.hpp"
#include "levelperc/field.hpp"
#include "levelperc/keyvalue.hpp"
#include "levelperc/percolation.hpp"
#include "levelperc/point_process.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>

namespace levelperc {

namespace {

struct CliConfig {
    std::string subcommand;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int threads = 0;
    bool quiet = false;
    std::string level = "quick";
};

class VerificationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

KeyValueFile load_config(CliConfig const& c, bool required)
{
    if (c.config_path.empty()) {
        if (required) {
            throw ConfigError(c.subcommand + " needs --config <file>");
        }
        return {};
    }
    return KeyValueFile::load(c.config_path);
}

std::filesystem::path base_dir(CliConfig const& c)
{
    return c.config_path.empty() ? std::filesystem::path{} : std::filesystem::path(c.config_path).parent_path();
}

/// --out, then the config's output_dir, then LEVELPERC_OUT, then a fixed default.
void apply_overrides(CliConfig const& c, KeyValueFile& cfg)
{
    if (c.seed) {
        cfg.set("seed", std::to_string(*c.seed));
    }
    if (!c.out_dir.empty()) {
        cfg.set("output_dir", c.out_dir);
    } else if (!cfg.has("output_dir")) {
        char const* env = std::getenv("LEVELPERC_OUT");
        cfg.set("output_dir", env && *env ? env : "levelperc-out");
    }
}

void write_text(std::filesystem::path const& p, auto&& writer)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot write " + p.string());
    }
    writer(f);
    if (!f.flush()) {
        throw std::runtime_error("write failed for " + p.string());
    }
}

Window window_from(KeyValueFile const& cfg, double default_margin)
{
    Window w;
    w.dimension = static_cast<int>(cfg.get_uint("dimension", 2));
    w.half_width = cfg.get_double("half_width", 8.0);
    w.boundary = boundary_from_string(cfg.get_string("boundary", "hard"));
    w.margin = w.boundary == Boundary::torus ? 0.0 : cfg.get_double("margin", default_margin);
    w.validate();
    return w;
}

double intensity_from(KeyValueFile const& cfg)
{
    double const lambda = cfg.get_double("intensity", 1.0);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("intensity must be > 0 (got " + cfg.get_string("intensity", "") + ")");
    }
    return lambda;
}

int cmd_sample_points(CliConfig const& c, std::ostream& out)
{
    auto cfg = load_config(c, true);
    cfg.require_known({"dimension", "intensity", "half_width", "margin", "boundary", "seed", "output_dir"});
    apply_overrides(c, cfg);
    auto const window = window_from(cfg, 0.0);
    auto const points = sample_poisson(window, intensity_from(cfg), cfg.get_uint("seed", 1));
    std::filesystem::path const dir = cfg.get("output_dir");
    std::filesystem::create_directories(dir);
    write_text(dir / "points.txt", [&](std::ostream& f) { write_point_set(f, points); });
    if (!c.quiet) {
        out << "sampled " << points.size() << " point(s) -> " << (dir / "points.txt").string() << '\n';
    }
    return exit_ok;
}

int cmd_render_field(CliConfig const& c, std::ostream& out)
{
    auto cfg = load_config(c, true);
    auto allowed = kernel_keys();
    allowed.insert({"dimension", "intensity", "half_width", "margin", "boundary", "alpha", "epsilon", "field_mode",
                    "level", "seed", "output_dir"});
    cfg.require_known(allowed);
    apply_overrides(c, cfg);
    auto const kernel = kernel_from_config(cfg, base_dir(c));
    double const lambda = intensity_from(cfg);
    int const d = static_cast<int>(cfg.get_uint("dimension", 2));
    double const alpha = cfg.get_double("alpha", 0.25);
    double const eps = cfg.get_double("epsilon", 1e-3);
    auto const mode = field_mode_from_string(cfg.get_string("field_mode", "exact-center"));
    double const radius = truncation_radius(kernel, d, lambda, eps);
    double const shift = mode == FieldMode::sup_bound ? alpha * std::sqrt(double(d)) / 2.0 : 0.0;
    auto const window = window_from(cfg, radius + shift + alpha * std::sqrt(double(d)));
    auto const points = sample_poisson(window, lambda, cfg.get_uint("seed", 1));
    auto const grid = field_on_grid(points, kernel, alpha, radius, mode, eps);

    double lo = kInfinity, hi = -kInfinity;
    for (double v : grid.values) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    double const h = cfg.get_double("level", std::isfinite(hi) ? 0.5 * (lo + hi) : 1.0);
    auto const level = threshold(grid, h, Comparison::at_least);

    std::filesystem::path const dir = cfg.get("output_dir");
    std::filesystem::create_directories(dir);
    write_text(dir / "field.txt", [&](std::ostream& f) { write_field_grid(f, grid); });
    write_text(dir / "field.pgm", [&](std::ostream& f) { write_graymap(f, grid, lo, hi); });
    write_text(dir / "levelset.pbm", [&](std::ostream& f) { write_bitmap(f, level); });
    if (!c.quiet) {
        out << "field: " << grid.values.size() << " cells, " << points.size() << " points, R=" << radius
            << ", range [" << lo << ", " << hi << "]\n"
            << "level set at h=" << h << ": " << level.occupied_count() << " occupied cells\n"
            << "wrote field.txt, field.pgm, levelset.pbm to " << dir.string() << '\n';
    }
    return exit_ok;
}

ExperimentPlan plan_from(CliConfig const& c)
{
    auto cfg = load_config(c, true);
    apply_overrides(c, cfg);
    return ExperimentPlan::from_config(cfg, base_dir(c));
}

RunOptions run_options(CliConfig const& c, std::ostream& out)
{
    RunOptions opt;
    opt.threads = c.threads;
    if (!c.quiet) {
        opt.log = [&out](std::string const& msg) { out << msg << '\n'; };
    }
    return opt;
}

int cmd_sweep(CliConfig const& c, std::ostream& out)
{
    auto const plan = plan_from(c);
    auto const manifest = run_plan(plan, run_options(c, out));
    if (!c.quiet) {
        for (auto const& f : manifest.outputs) {
            out << (plan.output_dir / f).string() << '\n';
        }
    }
    return exit_ok;
}

int cmd_estimate_hc(CliConfig const& c, std::ostream& out)
{
    auto const plan = plan_from(c);
    if (!is_integrable(plan.kernel, plan.dimension)) {
        throw NonIntegrableKernel("kernel " + plan.kernel.describe() +
                                  " fails the integrability criterion: the integral of r^(d-1) l(r) over "
                                  "[1, inf) diverges in d=" + std::to_string(plan.dimension) +
                                  ", so the field is almost surely infinite everywhere and h_c is undefined");
    }
    auto const manifest = run_plan(plan, run_options(c, out));
    out << "lambda,alpha,n,replicates,median,q1,q3,iqr\n";
    for (double lambda : plan.intensities) {
        for (double alpha : plan.alphas) {
            auto const summary = estimate_hc(load_sweep(plan, manifest, lambda, alpha));
            for (auto const& e : summary.per_window) {
                out << format_double(lambda) << ',' << format_double(alpha) << ',' << format_double(e.window) << ','
                    << e.replicates << ',' << format_double(e.median) << ',' << format_double(e.q1) << ','
                    << format_double(e.q3) << ',' << format_double(e.iqr()) << '\n';
            }
            out << "# relative spread of medians across window sizes: " << format_double(summary.relative_spread)
                << '\n';
        }
    }
    return exit_ok;
}

int cmd_verify(CliConfig const& c, std::ostream& out)
{
    auto cfg = load_config(c, false);
    cfg.require_known({"level", "seed"});
    VerifyOptions opt;
    opt.seed = c.seed ? *c.seed : cfg.get_uint("seed", opt.seed);
    std::string const level_name = cfg.has("level") && c.level == "quick" ? cfg.get("level") : c.level;
    VerifyLevel level;
    if (level_name == "quick") {
        level = VerifyLevel::quick;
    } else if (level_name == "full") {
        level = VerifyLevel::full;
    } else {
        throw ConfigError("verify level must be quick or full (got '" + level_name + "')");
    }
    auto const report = verify_lemmas(level, opt);
    for (auto const& item : report.items) {
        out << (item.passed ? "PASS " : "FAIL ") << item.name << "  margin=" << item.margin;
        if (!c.quiet) {
            out << "  " << item.detail;
        }
        out << '\n';
    }
    out << "NOTE " << report.discrepancy_note << '\n';
    if (!report.passed()) {
        throw VerificationFailed("verification failed");
    }
    return exit_ok;
}

} // namespace

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Level-set percolation of Poisson attenuation fields"};
    app.set_version_flag("--version", software_version());
    app.require_subcommand(1);
    CliConfig c;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config_path, "key = value configuration file");
        sub->add_option("--seed", seed, "seed override (wins over the config file)");
        sub->add_option("--out", c.out_dir, "output directory");
        sub->add_option("--threads", c.threads, "cap on worker threads")->check(CLI::NonNegativeNumber);
        sub->add_flag("--quiet", c.quiet, "suppress progress output");
        return sub;
    };
    auto* render = add_common(app.add_subcommand("render-field", "evaluate the field; write grid, graymap, bitmap"));
    auto* sweep = add_common(app.add_subcommand("sweep", "theta-hat and crossing tables for a plan"));
    auto* hc = add_common(app.add_subcommand("estimate-hc", "median crossing threshold per window size"));
    auto* verify = add_common(app.add_subcommand("verify", "exact and Monte Carlo lemma checks"));
    verify->add_option("--level", c.level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    auto* sample = add_common(app.add_subcommand("sample-points", "sample a Poisson point set"));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (CLI::CallForHelp const&) {
        out << app.help();
        return exit_ok;
    } catch (CLI::CallForVersion const&) {
        out << software_version() << '\n';
        return exit_ok;
    } catch (CLI::ParseError const& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    }
    for (auto* sub : {render, sweep, hc, verify, sample}) {
        if (sub->parsed()) {
            c.subcommand = sub->get_name();
            if (sub->count("--seed") > 0) {
                c.seed = seed;
            }
        }
    }
    if (c.threads > 0) {
        omp_set_num_threads(c.threads);
    }

    try {
        if (c.subcommand == "render-field") {
            return cmd_render_field(c, out);
        }
        if (c.subcommand == "sweep") {
            return cmd_sweep(c, out);
        }
        if (c.subcommand == "estimate-hc") {
            return cmd_estimate_hc(c, out);
        }
        if (c.subcommand == "verify") {
            return cmd_verify(c, out);
        }
        return cmd_sample_points(c, out);
    } catch (VerificationFailed const& e) {
        err << "error: " << e.what() << '\n';
        return exit_verification;
    } catch (NonIntegrableKernel const& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (InvalidKernel const& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (std::invalid_argument const& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (std::exception const& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

} // namespace levelperc
