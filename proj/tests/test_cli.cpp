#include "support.hpp"

#include "levelperc/cli.hpp"
#include "levelperc/percolation.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

using namespace levelperc;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    int const code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path write_config(fs::path const& dir, std::string const& name, std::string const& text)
{
    auto const p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(fs::path const& p)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_CASE("help and bad invocations")
{
    auto const help = run({"--help"});
    CHECK(help.code == exit_ok);
    CHECK(help.out.find("render-field") != std::string::npos);
    CHECK(run({}).code == exit_validation);
    CHECK(run({"no-such-command"}).code == exit_validation);
    CHECK(run({"sweep"}).code == exit_validation); // --config is required
    CHECK(run({"verify", "--level", "medium"}).code == exit_validation);
    CHECK(run({"sweep", "--config", "/nonexistent/plan.txt"}).code == exit_validation);
}

TEST_CASE("verify prints one line per check and the discrepancy note")
{
    auto const r = run({"verify", "--level", "quick", "--quiet"});
    CHECK(r.code == exit_ok);
    std::istringstream in(r.out);
    std::string line;
    int pass = 0;
    bool note = false;
    while (std::getline(in, line)) {
        pass += line.rfind("PASS ", 0) == 0;
        CHECK(line.rfind("FAIL ", 0) != 0);
        note |= line.rfind("NOTE ", 0) == 0;
    }
    CHECK(pass == 4);
    CHECK(note);
}

TEST_CASE("render-field validates its config")
{
    auto const dir = testing::scratch("cli-validate");
    auto const zero = write_config(dir, "zero.txt", "kernel.kind = exponential\nintensity = 0\n");
    auto const r0 = run({"render-field", "--config", zero.string(), "--out", (dir / "o").string()});
    CHECK(r0.code == exit_validation);
    CHECK(r0.err.find("intensity") != std::string::npos);

    auto const typo = write_config(dir, "typo.txt", "kernel.kind = exponential\nintensty = 1\n");
    auto const r1 = run({"render-field", "--config", typo.string(), "--out", (dir / "o").string()});
    CHECK(r1.code == exit_validation);
    CHECK(r1.err.find("intensty") != std::string::npos);

    auto const bad = write_config(dir, "bad.txt", "kernel.kind = exponential\nkernel.scale = -1\n");
    CHECK(run({"render-field", "--config", bad.string(), "--out", (dir / "o").string()}).code == exit_validation);
}

TEST_CASE("fixed-seed renders are byte-identical and honor the seed override")
{
    auto const dir = testing::scratch("cli-render");
    auto const cfg = write_config(dir, "render.txt",
                                  "kernel.kind = exponential\nhalf_width = 3\nalpha = 0.25\nseed = 5\n");
    for (auto const* sub : {"a", "b", "c"}) {
        std::vector<std::string> args{"render-field", "--config", cfg.string(), "--out", (dir / sub).string(),
                                      "--quiet"};
        if (std::string(sub) == "c") {
            args.insert(args.end(), {"--seed", "6"});
        }
        REQUIRE(run(args).code == exit_ok);
    }
    for (auto const* f : {"field.txt", "field.pgm", "levelset.pbm"}) {
        CHECK(!slurp(dir / "a" / f).empty());
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    CHECK(slurp(dir / "a" / "field.txt") != slurp(dir / "c" / "field.txt"));
    CHECK(slurp(dir / "a" / "field.pgm").rfind("P2\n", 0) == 0);
    CHECK(slurp(dir / "a" / "levelset.pbm").rfind("P1\n", 0) == 0);
}

TEST_CASE("indicator render at level one draws the Boolean discs")
{
    auto const dir = testing::scratch("cli-boolean");
    auto const cfg = write_config(dir, "disc.txt",
                                  "kernel.kind = indicator\nkernel.radius = 0.7\nintensity = 0.8\nhalf_width = 4\n"
                                  "margin = 2\nalpha = 0.2\nlevel = 1\nseed = 31\n");
    REQUIRE(run({"render-field", "--config", cfg.string(), "--out", dir.string(), "--quiet"}).code == exit_ok);
    auto const points = sample_poisson(Window{2, 4.0, 2.0, Boundary::hard}, 0.8, 31);
    std::ostringstream expected;
    write_bitmap(expected, boolean_occupied(points, 0.7, 0.2));
    CHECK(slurp(dir / "levelset.pbm") == expected.str());
}

TEST_CASE("output directory falls back to the environment")
{
    auto const dir = testing::scratch("cli-env");
    auto const cfg = write_config(dir, "pts.txt", "intensity = 2\nhalf_width = 2\n");
    auto const target = dir / "from-env";
    ::setenv("LEVELPERC_OUT", target.string().c_str(), 1);
    auto const r = run({"sample-points", "--config", cfg.string(), "--quiet"});
    ::unsetenv("LEVELPERC_OUT");
    CHECK(r.code == exit_ok);
    CHECK(fs::exists(target / "points.txt"));
    // --out wins over the environment
    ::setenv("LEVELPERC_OUT", target.string().c_str(), 1);
    CHECK(run({"sample-points", "--config", cfg.string(), "--out", (dir / "flag").string(), "--quiet"}).code ==
          exit_ok);
    ::unsetenv("LEVELPERC_OUT");
    CHECK(fs::exists(dir / "flag" / "points.txt"));

    std::ifstream in(target / "points.txt");
    auto const pts = read_point_set(in);
    CHECK(pts.intensity == 2.0);
    CHECK(pts.seed == 1);
    auto const seeded = dir / "seeded";
    REQUIRE(run({"sample-points", "--config", cfg.string(), "--out", seeded.string(), "--seed", "9", "--quiet"})
                .code == exit_ok);
    std::ifstream in2(seeded / "points.txt");
    CHECK(read_point_set(in2).seed == 9);
}

TEST_CASE("estimate-hc refuses a divergent kernel")
{
    auto const dir = testing::scratch("cli-divergent");
    auto const cfg = write_config(dir, "plan.txt", "kernel.kind = power-law\nkernel.exponent = 2\nreplicates = 2\n");
    auto const r = run({"estimate-hc", "--config", cfg.string(), "--out", (dir / "o").string()});
    CHECK(r.code == exit_validation);
    CHECK(r.err.find("integrability") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("indicator kernel crossing thresholds are whole numbers")
{
    auto const dir = testing::scratch("cli-indicator-hc");
    auto const cfg = write_config(dir, "plan.txt",
                                  "kernel.kind = indicator\nkernel.radius = 1\nintensity = 0.6\nwindow_sizes = 3, 4\n"
                                  "alpha = 0.25\nreplicates = 8\nlevels = 0.5, 1, 1.5, 2\n");
    auto const r = run({"estimate-hc", "--config", cfg.string(), "--out", (dir / "o").string(), "--quiet"});
    REQUIRE(r.code == exit_ok);
    auto const rows = read_csv(dir / "o" / "crossings_lambda-0.6_alpha-0.25.csv");
    REQUIRE(rows.size() == 17);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][2] != "none") {
            double const h = std::stod(rows[i][2]);
            CHECK(h == std::round(h));
            CHECK(h >= 0.0);
        }
    }
    CHECK(r.out.find("lambda,alpha,n,replicates,median,q1,q3,iqr") != std::string::npos);
    CHECK(r.out.find("# relative spread") != std::string::npos);
    // a second run reuses every task and prints the same summary
    CHECK(run({"estimate-hc", "--config", cfg.string(), "--out", (dir / "o").string(), "--quiet"}).out == r.out);
}

TEST_CASE("toy sweep is fast and its tables are consistent")
{
    auto const dir = testing::scratch("cli-sweep");
    auto const cfg = write_config(dir, "plan.txt",
                                  "kernel.kind = exponential\nwindow_sizes = 8\nreplicates = 10\nseed = 3\n");
    auto const t0 = std::chrono::steady_clock::now();
    auto const r = run({"sweep", "--config", cfg.string(), "--out", (dir / "o").string(), "--threads", "2"});
    auto const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(r.code == exit_ok);
    CHECK(secs < 60.0);
    auto const rows = read_csv(dir / "o" / "theta_lambda-1_alpha-0.25.csv");
    REQUIRE(rows.size() > 2);
    CHECK(rows[0] == std::vector<std::string>{"h", "mode", "n", "theta_hat", "ci_low", "ci_high"});
    std::map<std::string, double> last;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto const& row = rows[i];
        double const theta = std::stod(row[3]);
        CHECK(std::stod(row[4]) <= theta);
        CHECK(theta <= std::stod(row[5]));
        auto const key = row[1] + "/" + row[2];
        if (last.contains(key)) {
            CHECK(theta <= last[key]);
        }
        last[key] = theta;
    }
    CHECK(last.size() == 2);
    auto const cross = read_csv(dir / "o" / "crossings_lambda-1_alpha-0.25.csv");
    CHECK(cross.size() == 11);
    CHECK(fs::exists(dir / "o" / "hc_lambda-1_alpha-0.25.csv"));
    CHECK(fs::exists(dir / "o" / "manifest.txt"));
}
