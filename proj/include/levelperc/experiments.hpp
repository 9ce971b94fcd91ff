#pragma once

#include "levelperc/attenuation.hpp"
#include "levelperc/keyvalue.hpp"
#include "levelperc/percolation.hpp"
#include "levelperc/point_process.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace levelperc {

std::string software_version();

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t x);

struct ExperimentPlan {
    KeyValueFile kernel_config; ///< kernel.* keys, kept verbatim for hashing and re-emission
    AttenuationSpec kernel = AttenuationSpec::exponential(1.0);
    int dimension = 2;
    std::vector<double> intensities{1.0};
    std::vector<double> window_sizes{8.0};
    std::vector<double> alphas{0.25};
    std::vector<double> levels; ///< empty: automatic quantile grid per (λ, α)
    std::size_t auto_levels = 64;
    std::size_t replicates = 10;
    std::uint64_t seed = 1;
    double tail_budget = 1e-3;
    FieldMode field_mode = FieldMode::exact_center;
    std::filesystem::path output_dir = "levelperc-out";

    /// Throws ConfigError on unknown keys or invalid values. `base_dir`
    /// resolves relative kernel table paths.
    static ExperimentPlan from_config(KeyValueFile const& cfg, std::filesystem::path const& base_dir = {});
    static std::set<std::string> const& config_keys();
    KeyValueFile to_config() const;
    void validate() const;
    /// Hash of everything that determines the outputs (not the output directory).
    std::uint64_t hash() const;
    SweepSettings sweep_settings(double intensity, double alpha) const;
};

/// h grid from a pilot replicate: `count` empirical quantiles of its finite
/// cell values, deduplicated and ascending.
std::vector<double> automatic_levels(SweepSettings const& s, std::size_t count);

enum class TaskStatus { pending, done, failed };

struct TaskEntry {
    std::size_t index = 0;
    double intensity = 0.0;
    double window = 0.0;
    double alpha = 0.0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    TaskStatus status = TaskStatus::pending;
    std::string file;     ///< relative to the output directory
    std::string checksum; ///< FNV-1a of the file bytes
};

struct RunManifest {
    std::string plan_hash;
    std::string version;
    std::vector<TaskEntry> tasks;
    std::vector<std::string> outputs; ///< aggregated tables, relative paths
    std::size_t executed = 0;         ///< tasks run in this invocation
    std::size_t skipped = 0;          ///< tasks reused from a previous run

    void write(std::ostream& out) const;
    static RunManifest read(std::istream& in);
};

struct RunOptions {
    int threads = 0; ///< 0 keeps the OpenMP default
    std::function<void(std::string const&)> log;
};

/// Runs every (λ, L, α, replicate) task not already completed with a valid
/// checksum, then writes the aggregated tables:
///   theta_lambda-<λ>_alpha-<α>.csv, crossings_lambda-<λ>_alpha-<α>.csv,
///   hc_lambda-<λ>_alpha-<α>.csv
/// Throws NonIntegrableKernel before any work when the kernel diverges.
RunManifest run_plan(ExperimentPlan const& plan, RunOptions const& options = {});

/// Loads the finished sweep for one (λ, α) pair from a run directory.
SweepResult load_sweep(ExperimentPlan const& plan, RunManifest const& manifest, double intensity, double alpha);

void write_trace(std::ostream& out, ReplicateRecord const& record);
ReplicateRecord read_trace(std::istream& in);

void write_hc_table(std::ostream& out, HcSummary const& summary);

// --- lemma battery ---------------------------------------------------------

enum class VerifyLevel { quick, full };

struct VerifyItem {
    std::string name;
    bool passed = false;
    double margin = 0.0; ///< worst slack, positive when passing
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyItem> items;
    std::string discrepancy_note;

    bool passed() const noexcept;
};

struct VerifyOptions {
    std::uint64_t seed = 20240611;
    /// Replaces the Poisson mass in the tail dominance item (negative controls).
    std::function<LogPmf(double)> pmf_override;
};

struct OrthantRow {
    std::vector<std::size_t> thresholds;
    double conditioned = 0.0;
    double dominating = 0.0;
    double joint_se = 0.0;
};

/// Upper-orthant probabilities P(N_j >= t_j for all cells j), t_j <= max_threshold,
/// under the conditioned process and under the dominating sum.
std::vector<OrthantRow> orthant_domination(CellPartition const& partition, double intensity,
                                           std::size_t samples, std::uint64_t seed, std::size_t max_threshold = 4);

/// Three unit cells in a row, regions {C1, C2} and {C2, C3}.
CellPartition three_cell_fixture();

VerifyReport verify_lemmas(VerifyLevel level, VerifyOptions const& options = {});

} // namespace levelperc
