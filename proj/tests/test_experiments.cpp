#include "support.hpp"

#include "levelperc/experiments.hpp"
#include "levelperc/stats.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

using namespace levelperc;
namespace fs = std::filesystem;

namespace {

KeyValueFile parse(std::string const& text)
{
    std::istringstream in(text);
    return KeyValueFile::parse(in, "test");
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentPlan tiny_plan(fs::path const& dir)
{
    auto plan = ExperimentPlan::from_config(parse("kernel.kind = exponential\n"
                                                  "kernel.scale = 1\n"
                                                  "intensity = 1, 2\n"
                                                  "window_sizes = 2, 3\n"
                                                  "alpha = 0.5\n"
                                                  "auto_levels = 8\n"
                                                  "replicates = 4\n"
                                                  "seed = 12\n"));
    plan.output_dir = dir;
    return plan;
}

} // namespace

TEST_CASE("key-value files")
{
    auto const kv = parse("# comment\n a = 1.5 \nlist = 1, 2,3\nflag = yes\n\nname = x y\n");
    CHECK(kv.get_double("a") == 1.5);
    CHECK(kv.get_list("list", {}) == std::vector<double>{1, 2, 3});
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_string("name", "") == "x y");
    CHECK(kv.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS_AS(kv.get("missing"), ConfigError);
    CHECK_THROWS_AS(kv.get_uint("a", 0), ConfigError);
    CHECK_THROWS_AS(parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(kv.require_known({"a", "list"}), ConfigError);
    std::ostringstream out;
    kv.write(out);
    CHECK(parse(out.str()) == kv);
}

TEST_CASE("plans round-trip through their config form")
{
    auto plan = ExperimentPlan::from_config(parse("kernel.kind = truncated-power-law\nkernel.exponent = 3\n"
                                                  "kernel.cutoff = 4\nintensity = 0.5, 1\nlevels = 0.5, 1, 2\n"
                                                  "replicates = 7\nfield_mode = sup-bound\n"));
    CHECK(plan.kernel.kind() == KernelKind::truncated_power_law);
    CHECK(plan.kernel.support_radius() == 4.0);
    CHECK(plan.intensities == std::vector<double>{0.5, 1.0});
    CHECK(plan.field_mode == FieldMode::sup_bound);
    auto const again = ExperimentPlan::from_config(plan.to_config());
    CHECK(again.to_config() == plan.to_config());
    CHECK(again.hash() == plan.hash());

    auto moved = again;
    moved.output_dir = "elsewhere";
    CHECK(moved.hash() == plan.hash());
    moved.seed += 1;
    CHECK(moved.hash() != plan.hash());

    CHECK_THROWS_AS(ExperimentPlan::from_config(parse("kernel.kind = exponential\nbogus = 1\n")), ConfigError);
    CHECK_THROWS_AS(ExperimentPlan::from_config(parse("kernel.kind = exponential\nkernel.radius = 1\n")),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentPlan::from_config(parse("kernel.kind = exponential\nintensity = 0\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentPlan::from_config(parse("kernel.kind = exponential\nlevels = 2, 1\n")),
                    std::invalid_argument);
}

TEST_CASE("automatic levels are ascending quantiles of a pilot field")
{
    SweepSettings s;
    s.window_sizes = {3.0};
    s.alpha = 0.5;
    auto const levels = automatic_levels(s, 16);
    REQUIRE(!levels.empty());
    CHECK(levels.size() <= 16);
    CHECK(std::is_sorted(levels.begin(), levels.end()));
    CHECK(std::adjacent_find(levels.begin(), levels.end()) == levels.end());
    CHECK(levels == automatic_levels(s, 16));
}

TEST_CASE("replicate traces round-trip exactly")
{
    ReplicateRecord r{4.0, 3, 99, {0.1 + 0.2, -1.0 / 3.0, {{2.5, 1}, {0.75, 2}, {0.25, 1}}}};
    std::ostringstream out;
    write_trace(out, r);
    std::istringstream in(out.str());
    auto const back = read_trace(in);
    CHECK(back.window == r.window);
    CHECK(back.replicate == 3);
    CHECK(back.seed == 99);
    CHECK(back.trace.h_cross == r.trace.h_cross);
    CHECK(back.trace.origin_bottleneck == r.trace.origin_bottleneck);
    CHECK(back.trace.spanning_steps == r.trace.spanning_steps);

    r.trace.h_cross.reset();
    r.trace.origin_bottleneck = -INFINITY;
    std::ostringstream none;
    write_trace(none, r);
    std::istringstream in2(none.str());
    auto const b2 = read_trace(in2);
    CHECK_FALSE(b2.trace.h_cross.has_value());
    CHECK(b2.trace.origin_bottleneck == -INFINITY);
    std::istringstream junk("hello\n");
    CHECK_THROWS(read_trace(junk));
}

TEST_CASE("runs resume, skip finished work, and do not depend on the thread count")
{
    auto const dir1 = testing::scratch("run1");
    auto const dir2 = testing::scratch("run2");
    auto const plan1 = tiny_plan(dir1);
    auto const plan2 = tiny_plan(dir2);

    auto const first = run_plan(plan1, {1, {}});
    CHECK(first.tasks.size() == 16);
    CHECK(first.executed == 16);
    CHECK(first.outputs.size() == 6);
    auto const second = run_plan(plan2, {2, {}});
    for (auto const& name : first.outputs) {
        CAPTURE(name);
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    }

    auto const rerun = run_plan(plan1, {2, {}});
    CHECK(rerun.executed == 0);
    CHECK(rerun.skipped == 16);

    // a damaged task file fails its checksum and is recomputed
    auto const victim = dir1 / first.tasks[5].file;
    auto const original = slurp(victim);
    std::ofstream(victim, std::ios::trunc) << "# levelperc replicate v1\nwindow 0\n";
    auto const repaired = run_plan(plan1, {1, {}});
    CHECK(repaired.executed == 1);
    CHECK(slurp(victim) == original);
    for (auto const& name : first.outputs) {
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    }

    std::ifstream m(dir1 / "manifest.txt");
    auto const manifest = RunManifest::read(m);
    CHECK(manifest.plan_hash == hex64(plan1.hash()));
    CHECK(manifest.tasks.size() == 16);
    for (auto const& t : manifest.tasks) {
        CHECK(t.status == TaskStatus::done);
    }
    CHECK(manifest.outputs == first.outputs);

    auto const sweep = load_sweep(plan1, manifest, 2.0, 0.5);
    CHECK(sweep.records.size() == 8);

    // a changed plan invalidates every task
    auto changed = plan1;
    changed.seed = 13;
    CHECK(run_plan(changed, {1, {}}).executed == 16);
}

TEST_CASE("non-integrable kernels are refused before any task runs")
{
    auto const dir = testing::scratch("divergent");
    auto plan = tiny_plan(dir / "out");
    plan.kernel = AttenuationSpec::power_law(2.0);
    CHECK_THROWS_AS(run_plan(plan), NonIntegrableKernel);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("quick lemma battery passes fast and reports the coupling formula discrepancy")
{
    auto const t0 = std::chrono::steady_clock::now();
    auto const report = verify_lemmas(VerifyLevel::quick);
    auto const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 10.0);
    CHECK(report.passed());
    CHECK(report.items.size() == 4);
    for (auto const& item : report.items) {
        CAPTURE(item.name);
        CHECK(item.margin > 0.0);
    }
    CHECK(report.discrepancy_note.find("0.27067") != std::string::npos);
}

TEST_CASE("a corrupted mass function fails the battery")
{
    VerifyOptions opt;
    opt.pmf_override = [](double) -> LogPmf {
        return [](std::size_t k) { return k == 0 ? std::log(0.9) : (k == 5 ? std::log(0.1) : -INFINITY); };
    };
    auto const report = verify_lemmas(VerifyLevel::quick, opt);
    CHECK_FALSE(report.passed());
    CHECK_FALSE(report.items.front().passed);
}

TEST_CASE("upper orthant domination on the three-cell fixture")
{
    auto const rows = orthant_domination(three_cell_fixture(), 1.0, 20000, 7, 2);
    CHECK(rows.size() == 27);
    for (auto const& r : rows) {
        CHECK(r.conditioned <= r.dominating + 3.0 * r.joint_se);
    }
    // all thresholds zero: both probabilities are one
    CHECK(rows.front().conditioned == 1.0);
    CHECK(rows.front().dominating == 1.0);
}

TEST_CASE("interval and quantile helpers")
{
    auto const w = wilson_interval(0, 10);
    CHECK(w.low == 0.0);
    CHECK(w.high == doctest::Approx(0.2775).epsilon(1e-3));
    auto const half = wilson_interval(50, 100);
    CHECK(half.low == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(half.high == doctest::Approx(0.5962).epsilon(1e-3));
    CHECK(wilson_interval(10, 10).high == 1.0);

    // coverage of the Wilson interval over random p, by exact binomial sums
    testing::Gen gen(1);
    for (int trial = 0; trial < 20; ++trial) {
        double const p = gen.uniform(0.05, 0.95);
        std::size_t const n = static_cast<std::size_t>(gen.integer(30, 200));
        double cover = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            auto const ci = wilson_interval(k, n);
            if (ci.low <= p && p <= ci.high) {
                cover += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(double(n - k) + 1.0) +
                                  double(k) * std::log(p) + double(n - k) * std::log1p(-p));
            }
        }
        CHECK(cover > 0.90);
    }

    CHECK(quantile({3, 1, 2, 4}, 0.5) == 2.5);
    CHECK(quantile({3, 1, 2, 4}, 0.0) == 1.0);
    CHECK(quantile({3, 1, 2, 4}, 1.0) == 4.0);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == 2.0);
    CHECK(quantile({5}, 0.3) == 5.0);

    std::vector<double> const xs{1, 2, 3, 4};
    auto const me = mean_and_std_error(xs);
    CHECK(me.mean == 2.5);
    CHECK(me.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("chi-square goodness of fit")
{
    std::vector<double> const obs{10, 20, 30}, exp{20, 20, 20};
    auto const r = chi_square_gof(obs, exp);
    CHECK(r.statistic == doctest::Approx(10.0));
    CHECK(r.degrees_of_freedom == 2);
    CHECK(r.p_value == doctest::Approx(std::exp(-5.0)));
    // small bins are pooled
    std::vector<double> const o2{50, 45, 3, 2}, e2{50, 44, 4, 2};
    CHECK(chi_square_gof(o2, e2).degrees_of_freedom == 2);
}

TEST_CASE("hashes and version")
{
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(255) == "00000000000000ff");
    CHECK(!software_version().empty());
}
