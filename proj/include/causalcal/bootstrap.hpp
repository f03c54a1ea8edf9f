#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "causalcal/graph.hpp"
#include "causalcal/rng.hpp"
#include "causalcal/search.hpp"
#include "causalcal/sem.hpp"

namespace causalcal {

struct BootstrapConfig {
    std::size_t num_replicates = 200;
    SearchConfig search;
    std::uint64_t seed = 0;
    std::size_t parallelism = 1;
    // Dense per-pair count storage up to this many variables, sparse above;
    // semantics are identical either way.
    std::size_t dense_threshold = 4096;
    // When set, finished replicate PAGs are persisted here (pag_#####.txt)
    // and found ones are loaded instead of searched, so interrupted runs
    // resume where they stopped.
    std::filesystem::path checkpoint_dir;

    void validate() const;
};

struct EdgeClassDistribution {
    std::uint32_t a, b;  // canonical pair, a < b
    std::array<double, 7> probs;
};

// Per-pair edge-class counts over n replicate PAGs. Only present edges are
// counted; class-0 mass is the remainder n - sum(others), so pairs never
// seen with an edge have probability 1 on class 0 without being stored.
class DistributionTable {
public:
    DistributionTable(std::size_t num_vars, std::size_t num_replicates, bool dense);

    std::size_t num_vars() const { return num_vars_; }
    std::size_t num_replicates() const { return num_replicates_; }

    void count_pag(const Pag& pag);
    void merge(const DistributionTable& other);

    std::array<double, 7> probs(std::size_t pair_idx) const;
    std::vector<EdgeClassDistribution> distributions() const;  // all pairs, ascending

private:
    void add(std::size_t pair_idx, EdgeClass cls);
    const std::array<std::uint32_t, 6>* find_counts(std::size_t pair_idx) const;

    std::size_t num_vars_;
    std::size_t num_replicates_;
    bool dense_;
    std::vector<std::array<std::uint32_t, 6>> dense_counts_;  // classes 1..6
    std::unordered_map<std::size_t, std::array<std::uint32_t, 6>> sparse_counts_;
};

// Same number of rows, each drawn uniformly with replacement.
Dataset resample(const Dataset& data, Rng& rng);

// Pluggable per-replicate search (tests substitute canned PAGs).
using SearchRunner = std::function<Pag(const Dataset& resampled, std::size_t replicate)>;

struct BootstrapDiagnostics {
    std::uint64_t ci_tests = 0;
    std::uint64_t clamped_correlations = 0;
    std::uint64_t orientation_removals = 0;
    std::size_t replicates_loaded_from_checkpoint = 0;
};

// Resamples num_replicates times (replicate i uses the stream seeded with
// mix(seed, i), so results are independent of scheduling and worker count),
// runs the search on each, and counts edge classes per pair. A failing
// replicate aborts the estimation, reporting its index.
DistributionTable estimate_distributions(const Dataset& data, const BootstrapConfig& config,
                                         const SearchRunner& runner = {},
                                         BootstrapDiagnostics* diag = nullptr);

// CSV: header `i,j,p0,...,p6`, one row per pair, ascending.
void write_distribution_csv(std::ostream& out, const DistributionTable& table);

// Downstream view of the table (also what the CSV parses back into).
struct ProbTable {
    std::size_t num_vars = 0;
    std::vector<std::array<double, 7>> probs;  // indexed by pair_index
};

ProbTable to_prob_table(const DistributionTable& table);
ProbTable parse_distribution_csv(std::istream& in);

}  // namespace causalcal
