#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "causalcal/graph.hpp"
#include "causalcal/rng.hpp"

namespace causalcal {

struct SimConfig {
    std::size_t num_nodes = 200;
    std::size_t num_edges = 200;
    std::size_t sample_size = 1000;
    double hidden_fraction = 0.1;
    double variance_lo = 1.0;
    double variance_hi = 3.0;
    // Coefficient magnitudes; the sign is drawn separately and uniformly.
    double coeff_lo = 0.2;
    double coeff_hi = 1.5;
    std::uint64_t seed = 0;

    void validate() const;
};

// Observational data over the observed (non-masked) variables, column-major.
struct Dataset {
    std::vector<std::string> column_names;          // "X<original index>"
    std::vector<std::vector<double>> columns;       // one vector per observed variable
    std::vector<std::uint32_t> provenance;          // observed column -> original node

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
    std::size_t cols() const { return columns.size(); }
};

// Random DAG over a random node ordering with exactly num_edges forward
// edges, SEM coefficients of magnitude in [coeff_lo, coeff_hi] with random
// sign, noise variances in [variance_lo, variance_hi].
CausalDag generate_dag(const SimConfig& config, Rng& rng);

// Nodes that are common causes (two or more children), ascending.
std::vector<std::uint32_t> confounder_nodes(const CausalDag& dag);

// Linear-Gaussian SEM sampling in topological order; returns all columns
// (before latent masking). Noise is drawn per node in index order so the
// draw sequence is independent of graph structure.
std::vector<std::vector<double>> sample_dataset(const CausalDag& dag, std::size_t n, Rng& rng);

// Drops round(h * V) latent columns, chosen uniformly among confounders.
// Throws if the DAG has fewer confounders than that, reporting how many exist.
Dataset mask_latents(const CausalDag& dag, std::vector<std::vector<double>> full_data, double h,
                     Rng& rng);

std::size_t latent_count(double h, std::size_t num_nodes);

// Original node indices that were masked out of `data`.
std::vector<std::uint32_t> masked_nodes(std::size_t num_nodes, const Dataset& data);

struct SimulatedInstance {
    CausalDag dag;
    Dataset data;
    std::vector<std::uint32_t> latents;
};

// Full simulation stage: generate (retrying with a fresh derived seed up to
// 10 times when the DAG lacks enough confounders), sample, mask. Seed tree:
// mix(seed, 1 + attempt) for the DAG, mix(seed, 100) for sampling,
// mix(seed, 101) for the latent choice.
SimulatedInstance simulate(const SimConfig& config);

void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset parse_dataset_csv(std::istream& in);

}  // namespace causalcal
