#include "levelperc/experiments.hpp"

#include "levelperc/rng.hpp"
#include "levelperc/stats.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace levelperc {

std::string software_version() { return LEVELPERC_VERSION; }

std::uint64_t fnv1a(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

// --- plan ------------------------------------------------------------------

std::set<std::string> const& ExperimentPlan::config_keys()
{
    static std::set<std::string> const keys = [] {
        std::set<std::string> k = kernel_keys();
        k.insert({"dimension", "intensity", "window_sizes", "alpha", "levels", "auto_levels", "replicates", "seed",
                  "epsilon", "field_mode", "output_dir"});
        return k;
    }();
    return keys;
}

ExperimentPlan ExperimentPlan::from_config(KeyValueFile const& cfg, std::filesystem::path const& base_dir)
{
    cfg.require_known(config_keys());
    ExperimentPlan plan;
    for (auto const& [k, v] : cfg.entries()) {
        if (k.starts_with("kernel.")) {
            plan.kernel_config.set(k, v);
        }
    }
    plan.kernel = kernel_from_config(cfg, base_dir);
    plan.dimension = static_cast<int>(cfg.get_uint("dimension", 2));
    plan.intensities = cfg.get_list("intensity", plan.intensities);
    plan.window_sizes = cfg.get_list("window_sizes", plan.window_sizes);
    plan.alphas = cfg.get_list("alpha", plan.alphas);
    plan.levels = cfg.get_list("levels", {});
    plan.auto_levels = cfg.get_uint("auto_levels", plan.auto_levels);
    plan.replicates = cfg.get_uint("replicates", plan.replicates);
    plan.seed = cfg.get_uint("seed", plan.seed);
    plan.tail_budget = cfg.get_double("epsilon", plan.tail_budget);
    plan.field_mode = field_mode_from_string(cfg.get_string("field_mode", to_string(plan.field_mode)));
    if (auto out = cfg.find("output_dir")) {
        plan.output_dir = *out;
    }
    try {
        plan.validate();
    } catch (std::invalid_argument const& e) {
        throw ConfigError(e.what());
    }
    return plan;
}

KeyValueFile ExperimentPlan::to_config() const
{
    KeyValueFile cfg;
    if (kernel_config.entries().empty()) {
        kernel_to_config(kernel, cfg);
    } else {
        for (auto const& [k, v] : kernel_config.entries()) {
            cfg.set(k, v);
        }
    }
    cfg.set("dimension", std::to_string(dimension));
    cfg.set("intensity", format_list(intensities));
    cfg.set("window_sizes", format_list(window_sizes));
    cfg.set("alpha", format_list(alphas));
    if (!levels.empty()) {
        cfg.set("levels", format_list(levels));
    }
    cfg.set("auto_levels", std::to_string(auto_levels));
    cfg.set("replicates", std::to_string(replicates));
    cfg.set("seed", std::to_string(seed));
    cfg.set("epsilon", format_double(tail_budget));
    cfg.set("field_mode", to_string(field_mode));
    cfg.set("output_dir", output_dir.string());
    return cfg;
}

void ExperimentPlan::validate() const
{
    if (intensities.empty() || alphas.empty() || window_sizes.empty()) {
        throw std::invalid_argument("plan needs at least one intensity, alpha and window size");
    }
    for (double l : intensities) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw std::invalid_argument("intensity must be > 0 (got " + format_double(l) + ")");
        }
    }
    if (auto_levels < 1) {
        throw std::invalid_argument("auto_levels must be >= 1");
    }
    for (double l : intensities) {
        for (double a : alphas) {
            sweep_settings(l, a).validate();
        }
    }
}

std::uint64_t ExperimentPlan::hash() const
{
    auto cfg = to_config();
    cfg.erase("output_dir");
    std::ostringstream os;
    cfg.write(os);
    return fnv1a(os.str());
}

SweepSettings ExperimentPlan::sweep_settings(double intensity, double alpha) const
{
    SweepSettings s;
    s.kernel = kernel;
    s.intensity = intensity;
    s.dimension = dimension;
    s.window_sizes = window_sizes;
    s.alpha = alpha;
    s.levels = levels;
    s.replicates = replicates;
    s.seed = seed;
    s.tail_budget = tail_budget;
    s.field_mode = field_mode;
    return s;
}

std::vector<double> automatic_levels(SweepSettings const& s, std::size_t count)
{
    double const radius = truncation_radius(s.kernel, s.dimension, s.intensity, s.tail_budget);
    double const window = s.window_sizes.front();
    Window const w{s.dimension, window, radius + 2.0 * s.alpha * std::sqrt(double(s.dimension)), Boundary::hard};
    std::uint64_t const pilot_seed =
        derive_seed(s.seed, {0x70696c6f74ULL, std::bit_cast<std::uint64_t>(s.intensity),
                             std::bit_cast<std::uint64_t>(s.alpha), std::bit_cast<std::uint64_t>(window)});
    auto const points = sample_poisson(w, s.intensity, pilot_seed);
    auto const grid = field_on_grid(points, s.kernel, s.alpha, radius, s.field_mode, s.tail_budget);
    std::vector<double> finite;
    for (double v : grid.values) {
        if (std::isfinite(v)) {
            finite.push_back(v);
        }
    }
    std::vector<double> out;
    if (finite.empty()) {
        return out;
    }
    std::sort(finite.begin(), finite.end());
    for (std::size_t j = 0; j < count; ++j) {
        double const q = (static_cast<double>(j) + 0.5) / static_cast<double>(count);
        out.push_back(quantile(finite, q));
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// --- traces and manifest ---------------------------------------------------

void write_trace(std::ostream& out, ReplicateRecord const& r)
{
    out << "# levelperc replicate v1\n"
        << "window " << format_double(r.window) << '\n'
        << "replicate " << r.replicate << '\n'
        << "seed " << r.seed << '\n'
        << "h_cross " << (r.trace.h_cross ? format_double(*r.trace.h_cross) : std::string("none")) << '\n'
        << "origin_bottleneck " << format_double(r.trace.origin_bottleneck) << '\n'
        << "steps " << r.trace.spanning_steps.size() << '\n';
    for (auto const& [v, c] : r.trace.spanning_steps) {
        out << format_double(v) << ' ' << c << '\n';
    }
}

ReplicateRecord read_trace(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "# levelperc replicate v1") {
        throw std::runtime_error("not a levelperc replicate file");
    }
    auto field = [&in](std::string const& key) {
        std::string k, v;
        if (!(in >> k >> v) || k != key) {
            throw std::runtime_error("replicate file: expected '" + key + "'");
        }
        return v;
    };
    ReplicateRecord r;
    r.window = parse_double(field("window"));
    r.replicate = std::stoull(field("replicate"));
    r.seed = std::stoull(field("seed"));
    auto const hc = field("h_cross");
    if (hc != "none") {
        r.trace.h_cross = parse_double(hc);
    }
    r.trace.origin_bottleneck = parse_double(field("origin_bottleneck"));
    auto const steps = std::stoull(field("steps"));
    for (std::size_t i = 0; i < steps; ++i) {
        std::string v;
        std::size_t c = 0;
        if (!(in >> v >> c)) {
            throw std::runtime_error("replicate file truncated");
        }
        r.trace.spanning_steps.emplace_back(parse_double(v), c);
    }
    return r;
}

namespace {

std::string status_name(TaskStatus s)
{
    switch (s) {
    case TaskStatus::done:
        return "done";
    case TaskStatus::failed:
        return "failed";
    default:
        return "pending";
    }
}

TaskStatus status_from(std::string const& s)
{
    if (s == "done") {
        return TaskStatus::done;
    }
    if (s == "failed") {
        return TaskStatus::failed;
    }
    return TaskStatus::pending;
}

std::string task_key(std::size_t index)
{
    std::ostringstream os;
    os << "task." << std::setw(5) << std::setfill('0') << index;
    return os.str();
}

std::string read_file(std::filesystem::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + p.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file_atomic(std::filesystem::path const& p, std::string const& bytes)
{
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << bytes;
        if (!out.flush()) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, p);
}

std::string pair_tag(double intensity, double alpha)
{
    return "lambda-" + format_double(intensity) + "_alpha-" + format_double(alpha);
}

} // namespace

void RunManifest::write(std::ostream& out) const
{
    KeyValueFile kv;
    kv.set("plan_hash", plan_hash);
    kv.set("version", version);
    kv.set("tasks", std::to_string(tasks.size()));
    for (auto const& t : tasks) {
        std::ostringstream os;
        os << status_name(t.status) << " lambda=" << format_double(t.intensity) << " n=" << format_double(t.window)
           << " alpha=" << format_double(t.alpha) << " replicate=" << t.replicate << " seed=" << t.seed
           << " file=" << t.file << " checksum=" << (t.checksum.empty() ? "-" : t.checksum);
        kv.set(task_key(t.index), os.str());
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        std::ostringstream key;
        key << "output." << std::setw(3) << std::setfill('0') << i;
        kv.set(key.str(), outputs[i]);
    }
    out << "# levelperc run manifest\n";
    kv.write(out);
}

RunManifest RunManifest::read(std::istream& in)
{
    auto const kv = KeyValueFile::parse(in, "manifest");
    RunManifest m;
    m.plan_hash = kv.get("plan_hash");
    m.version = kv.get("version");
    for (auto const& [k, v] : kv.entries()) {
        if (k.starts_with("task.")) {
            TaskEntry t;
            t.index = std::stoull(k.substr(5));
            std::istringstream is(v);
            std::string token;
            is >> token;
            t.status = status_from(token);
            while (is >> token) {
                auto const eq = token.find('=');
                auto const key = token.substr(0, eq);
                auto const val = token.substr(eq + 1);
                if (key == "lambda") {
                    t.intensity = parse_double(val);
                } else if (key == "n") {
                    t.window = parse_double(val);
                } else if (key == "alpha") {
                    t.alpha = parse_double(val);
                } else if (key == "replicate") {
                    t.replicate = std::stoull(val);
                } else if (key == "seed") {
                    t.seed = std::stoull(val);
                } else if (key == "file") {
                    t.file = val;
                } else if (key == "checksum") {
                    t.checksum = val == "-" ? "" : val;
                }
            }
            m.tasks.push_back(t);
        } else if (k.starts_with("output.")) {
            m.outputs.push_back(v);
        }
    }
    return m;
}

void write_hc_table(std::ostream& out, HcSummary const& summary)
{
    out << "n,replicates,spanning_replicates,median,q1,q3,iqr,relative_spread\n";
    for (auto const& e : summary.per_window) {
        out << format_double(e.window) << ',' << e.replicates << ',' << e.spanning_replicates << ','
            << format_double(e.median) << ',' << format_double(e.q1) << ',' << format_double(e.q3) << ','
            << format_double(e.iqr()) << ',' << format_double(summary.relative_spread) << '\n';
    }
}

namespace {

std::vector<TaskEntry> enumerate_tasks(ExperimentPlan const& plan)
{
    std::vector<TaskEntry> tasks;
    for (double lambda : plan.intensities) {
        for (double alpha : plan.alphas) {
            auto const s = plan.sweep_settings(lambda, alpha);
            for (double window : plan.window_sizes) {
                for (std::size_t rep = 0; rep < plan.replicates; ++rep) {
                    TaskEntry t;
                    t.index = tasks.size();
                    t.intensity = lambda;
                    t.window = window;
                    t.alpha = alpha;
                    t.replicate = rep;
                    t.seed = replicate_seed(s, window, rep);
                    std::ostringstream name;
                    name << "tasks/task-" << std::setw(5) << std::setfill('0') << t.index << ".txt";
                    t.file = name.str();
                    tasks.push_back(t);
                }
            }
        }
    }
    return tasks;
}

bool task_output_valid(std::filesystem::path const& dir, TaskEntry const& t)
{
    std::error_code ec;
    if (t.status != TaskStatus::done || t.checksum.empty() || !std::filesystem::exists(dir / t.file, ec)) {
        return false;
    }
    return hex64(fnv1a(read_file(dir / t.file))) == t.checksum;
}

} // namespace

SweepResult load_sweep(ExperimentPlan const& plan, RunManifest const& manifest, double intensity, double alpha)
{
    auto s = plan.sweep_settings(intensity, alpha);
    if (s.levels.empty()) {
        s.levels = automatic_levels(s, plan.auto_levels);
    }
    std::vector<ReplicateRecord> records;
    for (auto const& t : manifest.tasks) {
        if (t.intensity != intensity || t.alpha != alpha) {
            continue;
        }
        if (!task_output_valid(plan.output_dir, t)) {
            throw std::runtime_error("task " + std::to_string(t.index) + " has no valid output in " +
                                     plan.output_dir.string());
        }
        std::istringstream in(read_file(plan.output_dir / t.file));
        records.push_back(read_trace(in));
    }
    return aggregate_sweep(s, std::move(records));
}

RunManifest run_plan(ExperimentPlan const& plan, RunOptions const& options)
{
    plan.validate();
    for (double lambda : plan.intensities) {
        (void)truncation_radius(plan.kernel, plan.dimension, lambda, plan.tail_budget);
    }
    auto log = [&](std::string const& msg) {
        if (options.log) {
            options.log(msg);
        }
    };
    auto const& dir = plan.output_dir;
    std::filesystem::create_directories(dir / "tasks");

    RunManifest manifest;
    manifest.plan_hash = hex64(plan.hash());
    manifest.version = software_version();
    manifest.tasks = enumerate_tasks(plan);

    auto const manifest_path = dir / "manifest.txt";
    if (std::filesystem::exists(manifest_path)) {
        std::istringstream in(read_file(manifest_path));
        auto const previous = RunManifest::read(in);
        if (previous.plan_hash == manifest.plan_hash) {
            for (auto const& old : previous.tasks) {
                if (old.index < manifest.tasks.size() && old.seed == manifest.tasks[old.index].seed &&
                    task_output_valid(dir, old)) {
                    manifest.tasks[old.index].status = TaskStatus::done;
                    manifest.tasks[old.index].checksum = old.checksum;
                }
            }
        } else {
            log("manifest belongs to a different plan; starting over");
        }
    }
    {
        std::ostringstream os;
        plan.to_config().write(os);
        write_file_atomic(dir / "plan.txt", os.str());
    }
    auto save_manifest = [&] {
        std::ostringstream os;
        manifest.write(os);
        write_file_atomic(manifest_path, os.str());
    };
    save_manifest();

    std::vector<std::size_t> pending;
    for (auto const& t : manifest.tasks) {
        if (t.status != TaskStatus::done) {
            pending.push_back(t.index);
        }
    }
    manifest.skipped = manifest.tasks.size() - pending.size();
    log(std::to_string(pending.size()) + " task(s) to run, " + std::to_string(manifest.skipped) + " reused");

    std::map<std::pair<double, double>, SweepSettings> settings;
    for (double lambda : plan.intensities) {
        for (double alpha : plan.alphas) {
            settings.emplace(std::pair{lambda, alpha}, plan.sweep_settings(lambda, alpha));
        }
    }

    int const threads = options.threads > 0 ? options.threads : omp_get_max_threads();
    auto const n_pending = static_cast<std::ptrdiff_t>(pending.size());
    std::string first_error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < n_pending; ++i) {
        auto& task = manifest.tasks[pending[static_cast<std::size_t>(i)]];
        try {
            auto const& s = settings.at({task.intensity, task.alpha});
            auto const record = simulate_replicate(s, task.window, task.replicate);
            std::ostringstream os;
            write_trace(os, record);
            auto const bytes = os.str();
            write_file_atomic(dir / task.file, bytes);
#pragma omp critical(levelperc_manifest)
            {
                task.status = TaskStatus::done;
                task.checksum = hex64(fnv1a(bytes));
                ++manifest.executed;
                save_manifest();
            }
        } catch (std::exception const& e) {
#pragma omp critical(levelperc_manifest)
            {
                task.status = TaskStatus::failed;
                if (first_error.empty()) {
                    first_error = "task " + std::to_string(task.index) + ": " + e.what();
                }
                save_manifest();
            }
        }
    }
    if (!first_error.empty()) {
        throw std::runtime_error(first_error + " (re-run to resume)");
    }

    for (double lambda : plan.intensities) {
        for (double alpha : plan.alphas) {
            auto const sweep = load_sweep(plan, manifest, lambda, alpha);
            auto const tag = pair_tag(lambda, alpha);
            std::ostringstream theta, crossings, hc;
            write_theta_table(theta, sweep);
            write_crossing_table(crossings, sweep);
            write_hc_table(hc, estimate_hc(sweep));
            for (auto const& [name, text] : {std::pair{"theta_" + tag + ".csv", theta.str()},
                                             std::pair{"crossings_" + tag + ".csv", crossings.str()},
                                             std::pair{"hc_" + tag + ".csv", hc.str()}}) {
                write_file_atomic(dir / name, text);
                manifest.outputs.push_back(name);
            }
        }
    }
    save_manifest();
    log("wrote " + std::to_string(manifest.outputs.size()) + " table(s) to " + dir.string());
    return manifest;
}

// --- lemma battery -----------------------------------------------------------

bool VerifyReport::passed() const noexcept
{
    return std::all_of(items.begin(), items.end(), [](VerifyItem const& i) { return i.passed; });
}

CellPartition three_cell_fixture()
{
    CellPartition p;
    for (int j = 0; j < 3; ++j) {
        p.cells.push_back(Box{{double(j), 0.0}, {double(j + 1), 1.0}});
    }
    p.regions = {{0, 1}, {1, 2}};
    return p;
}

std::vector<OrthantRow> orthant_domination(CellPartition const& partition, double intensity,
                                           std::size_t samples, std::uint64_t seed, std::size_t max_threshold)
{
    partition.validate();
    auto const cells = partition.cells.size();
    auto const n = static_cast<std::ptrdiff_t>(samples);
    std::vector<std::vector<std::size_t>> cond(samples), dom(samples);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto const u = static_cast<std::uint64_t>(i);
        cond[static_cast<std::size_t>(i)] =
            sample_conditioned_nonempty(partition, intensity, derive_seed(seed, {0, u})).cell_counts;
        dom[static_cast<std::size_t>(i)] =
            sample_dominating_sum(partition.cells, intensity, derive_seed(seed, {1, u})).cell_counts;
    }
    std::vector<OrthantRow> rows;
    std::vector<std::size_t> t(cells, 0);
    double const nn = static_cast<double>(samples);
    while (true) {
        auto frac = [&](std::vector<std::vector<std::size_t>> const& draws) {
            std::size_t hits = 0;
            for (auto const& c : draws) {
                bool ok = true;
                for (std::size_t j = 0; j < cells && ok; ++j) {
                    ok = c[j] >= t[j];
                }
                hits += ok;
            }
            return static_cast<double>(hits) / nn;
        };
        OrthantRow row{t, frac(cond), frac(dom), 0.0};
        row.joint_se = std::sqrt(row.conditioned * (1 - row.conditioned) / nn +
                                 row.dominating * (1 - row.dominating) / nn);
        rows.push_back(std::move(row));
        std::size_t k = 0;
        while (k < cells && ++t[k] > max_threshold) {
            t[k] = 0;
            ++k;
        }
        if (k == cells) {
            break;
        }
    }
    return rows;
}

namespace {

VerifyItem tail_dominance_item(VerifyOptions const& opt)
{
    VerifyItem item{"conditioned-tail-dominance", true, kInfinity, ""};
    for (double lambda : {0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0}) {
        LogPmf pmf = opt.pmf_override ? opt.pmf_override(lambda) : LogPmf{};
        for (auto const& row : exact_tail_dominance(lambda, 60, pmf)) {
            // lhs - rhs <= 1e-12 is the pass rule; margin reports the slack.
            double const slack = row.margin + 1e-12;
            if (slack < item.margin) {
                item.margin = slack;
                std::ostringstream os;
                os << "worst at lambda=" << lambda << " k=" << row.k << ": P(X>=k|X>=1)=" << row.lhs
                   << " P(X>=k-1)=" << row.rhs;
                item.detail = os.str();
            }
        }
    }
    item.passed = item.margin >= 0.0;
    return item;
}

VerifyItem tv_exact_item()
{
    VerifyItem item{"shift-tv-exact", true, kInfinity, ""};
    std::ostringstream os;
    for (auto [lambda, expected] : {std::pair{1.0, std::exp(-1.0)}, std::pair{2.0, 2.0 * std::exp(-2.0)},
                                    std::pair{0.5, std::exp(-0.5)}, std::pair{7.5, std::exp(7 * std::log(7.5) - 7.5 - std::lgamma(8.0))}}) {
        double tv = 0.0;
        try {
            tv = exact_tv_poisson_shift(lambda);
        } catch (std::logic_error const& e) {
            item.passed = false;
            os << e.what() << "; ";
            continue;
        }
        double const err = std::abs(tv - expected);
        item.margin = std::min(item.margin, 1e-12 - err);
        os << "lambda=" << lambda << " tv=" << tv << "; ";
    }
    item.passed = item.passed && item.margin >= 0.0;
    item.detail = os.str();
    return item;
}

VerifyItem tv_bound_item()
{
    VerifyItem item{"shift-tv-bound", true, kInfinity, ""};
    auto const rows = tv_bound_check(100);
    for (auto const& r : rows) {
        item.passed = item.passed && r.holds;
        if (r.bound - r.tv < item.margin) {
            item.margin = r.bound - r.tv;
            std::ostringstream os;
            os << "tightest at n=" << r.n << ": TV=" << r.tv << " vs 1/n=" << r.bound << " (lambda=4n^2, n<=100)";
            item.detail = os.str();
        }
    }
    return item;
}

VerifyItem tail_integral_item()
{
    VerifyItem item{"tail-integral-consistency", true, kInfinity, ""};
    std::vector<AttenuationSpec> const kernels{
        AttenuationSpec::indicator(1.0),
        AttenuationSpec::exponential(1.0),
        AttenuationSpec::exponential(0.5, 2.0, 3.0),
        AttenuationSpec::power_law(3.5),
        AttenuationSpec::power_law(4.0, 1.0, 1.0, false),
        AttenuationSpec::truncated_power_law(2.0, 5.0),
        AttenuationSpec::tabulated({0.5, 1.0, 3.0}, {2.0, 1.0, 0.25}),
    };
    double worst = 0.0;
    for (auto const& k : kernels) {
        for (int d : {2, 3}) {
            for (double a : {0.5, 1.0, 2.0}) {
                auto const closed = tail_integral(k, a, d);
                auto const quad = tail_integral_quadrature(k, a, d);
                double const rel = std::abs(closed.value - quad.value) / std::max(1e-300, std::abs(closed.value));
                double const err = closed.value == 0.0 ? std::abs(quad.value) : rel;
                if (err > worst) {
                    worst = err;
                    item.detail = "worst " + k.describe() + " d=" + std::to_string(d) + " a=" + format_double(a);
                }
            }
        }
    }
    item.margin = 1e-6 - worst;
    item.passed = item.margin >= 0.0;
    return item;
}

VerifyItem z_item(std::string name, double z, double limit, std::string detail)
{
    return {std::move(name), std::abs(z) <= limit, limit - std::abs(z), std::move(detail)};
}

} // namespace

VerifyReport verify_lemmas(VerifyLevel level, VerifyOptions const& options)
{
    VerifyReport report;
    report.items.push_back(tail_dominance_item(options));
    report.items.push_back(tv_exact_item());
    report.items.push_back(tv_bound_item());
    report.items.push_back(tail_integral_item());

    {
        double const stated = stated_shift_coupling_disagreement(2.0);
        double const exact = exact_tv_poisson_shift(2.0);
        double const intermediate = std::exp(5.0 * std::log(4.0) - 4.0 - std::lgamma(6.0));
        std::ostringstream os;
        os << std::setprecision(5)
           << "Known discrepancy: the published closed form for the disagreement probability of the "
              "Poisson shift coupling, (lambda^floor(lambda) + 1)/(floor(lambda) + 1)! * e^-lambda, gives "
           << stated << " at lambda=2, below the exact total variation " << exact
           << ", and no coupling can disagree less often than the total variation. The interval "
              "construction behind it double-covers (1-p(floor(lambda)), 1-p(floor(lambda)+1)] and leaves "
              "a gap. The maximal coupling is used instead; only the downstream bound TV <= 1/n at "
              "lambda=4n^2 is certified. The intermediate expression (4n^2)^(4n^2+1)/(4n^2+1)! * e^(-4n^2) "
              "is likewise below the exact TV at n=1 ("
           << intermediate << " vs " << exact_tv_poisson_shift(4.0) << ").";
        report.discrepancy_note = os.str();
    }

    if (level == VerifyLevel::full) {
        std::uint64_t const seed = options.seed;
        {
            auto const c = couple_poisson_shift(1.0, derive_seed(seed, {1}), 100000);
            std::ostringstream os;
            os << "disagreement " << c.empirical_disagreement << " vs exact TV " << c.exact_disagreement << " over "
               << c.samples << " draws";
            report.items.push_back(z_item("shift-coupling", c.z_score, 4.0, os.str()));
        }
        {
            auto const rows = orthant_domination(three_cell_fixture(), 1.0, 100000, derive_seed(seed, {2}));
            VerifyItem item{"cell-domination", true, kInfinity, ""};
            for (auto const& r : rows) {
                double const slack = 3.0 * r.joint_se - (r.conditioned - r.dominating);
                if (slack < item.margin) {
                    item.margin = slack;
                    std::ostringstream os;
                    os << "tightest orthant (" << r.thresholds[0] << ',' << r.thresholds[1] << ','
                       << r.thresholds[2] << "): conditioned " << r.conditioned << " vs dominating "
                       << r.dominating;
                    item.detail = os.str();
                }
            }
            item.passed = item.margin >= 0.0;
            report.items.push_back(item);
        }
        {
            auto const c = campbell_mean(AttenuationSpec::exponential(1.0), 1.0, 2, 10000, derive_seed(seed, {3}));
            std::ostringstream os;
            os << "mean " << c.estimate << " +- " << c.std_error << " vs " << c.analytic;
            report.items.push_back(z_item("campbell-mean", c.z_score(), 4.0, os.str()));
        }
        {
            double const rho = 1.0 / std::sqrt(std::numbers::pi);
            auto const c = campbell_mgf(AttenuationSpec::indicator(rho), std::numbers::ln2, rho, 1.0, 2, 100000,
                                        derive_seed(seed, {4}));
            std::ostringstream os;
            os << "E exp(s sum g) " << c.estimate << " +- " << c.std_error << " vs " << c.analytic;
            report.items.push_back(z_item("campbell-mgf", c.z_score(), 4.0, os.str()));
        }
    }
    return report;
}

} // namespace levelperc
