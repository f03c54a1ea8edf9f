#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "causalcal/calibrate.hpp"
#include "causalcal/metrics.hpp"
#include "causalcal/sem.hpp"

namespace causalcal {

inline constexpr const char* kToolVersion = "causalcal 0.1.0";

// Seed tree (all via mix_seed, so every stage is replayable in isolation):
//   rep_seed            = mix(master_seed, 1000 + replication)
//   simulation          = mix(rep_seed, 1)      -> SimConfig.seed
//   bootstrap           = mix(mix(rep_seed, 2), alpha_index)
//   split               = mix(mix(mix(rep_seed, 3), alpha_index), N)
//   calibrator training = mix(mix(mix(rep_seed, 4), alpha_index), N)
struct ExperimentConfig {
    SimConfig sim;  // sim.seed is ignored; per-replication seeds are derived
    std::size_t bootstrap_replicates = 50;
    std::size_t max_conditioning_size = std::numeric_limits<std::size_t>::max();
    std::vector<double> alphas = {0.005};
    std::vector<std::size_t> calibration_sizes = {70};
    std::size_t replications = 10;
    std::size_t mce_bin_capacity = 100;
    std::size_t jobs = 1;
    std::uint64_t master_seed = 1;
    std::filesystem::path output_dir = "out";
    TrainingMeta training;
    std::size_t dense_threshold = 4096;

    void validate() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

// Output locations, relative to config.output_dir.
namespace paths {
std::filesystem::path rep_dir(const ExperimentConfig& c, std::size_t rep);
std::filesystem::path alpha_dir(const ExperimentConfig& c, std::size_t rep, std::size_t alpha_idx);
std::filesystem::path n_dir(const ExperimentConfig& c, std::size_t rep, std::size_t alpha_idx,
                            std::size_t n_idx);
}  // namespace paths

// Pipeline stages; each reads its inputs from the stage before it on disk.
void stage_simulate(const ExperimentConfig& config, std::size_t rep);
void stage_bootstrap(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx);
void stage_split(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx,
                 std::size_t n_idx);
void stage_calibrate(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx,
                     std::size_t n_idx);
void stage_evaluate(const ExperimentConfig& config, std::size_t rep, std::size_t alpha_idx,
                    std::size_t n_idx);
// Aggregates existing per-replication metrics into the summary table and the
// before/after significance sheet.
void stage_report(const ExperimentConfig& config);

struct SignificanceRow {
    std::string type;    // merged type name or "overall"
    std::string metric;  // precision | recall | f1 | mce
    std::size_t pairs_used = 0;
    std::optional<double> p_value;  // absent when fewer than 5 usable pairs
    bool significant = false;       // two-sided p < 0.05
    std::string better;             // "before" or "after" by mean difference
};

// Pairs reports by replication; metrics absent under the 0/0 convention are
// excluded pairwise. For MCE lower is better; for the others higher is.
std::vector<SignificanceRow> compare_before_after(const std::vector<MetricsReport>& before,
                                                  const std::vector<MetricsReport>& after);

struct ReplicationStatus {
    std::size_t replication = 0;
    bool ok = false;
    std::string error;
};

struct RunManifest {
    std::string config_hash;
    std::string tool_version;
    std::vector<std::uint64_t> replication_seeds;
    std::vector<ReplicationStatus> statuses;
    std::vector<std::pair<std::string, double>> timings_seconds;  // (stage label, duration)
    std::vector<std::string> artifacts;  // paths relative to output_dir
};

// Full experiment: all replications end to end, then the aggregate report.
// A failing replication is recorded in the manifest and does not stop the
// others; its partial artifacts stay on disk.
RunManifest run_experiment(const ExperimentConfig& config);

std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t rep);

// FNV-1a over bytes; used for config and dataset fingerprints.
std::string content_hash(std::string_view bytes);

}  // namespace causalcal
