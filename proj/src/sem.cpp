#include "causalcal/sem.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "causalcal/kernels.hpp"
#include "causalcal/textio.hpp"

namespace causalcal {

void SimConfig::validate() const {
    if (num_nodes < 2) throw std::invalid_argument("SimConfig: need at least 2 nodes");
    if (num_edges > num_pairs(num_nodes))
        throw std::invalid_argument("SimConfig: num_edges exceeds maximum forward edges");
    if (!(hidden_fraction >= 0.0 && hidden_fraction < 1.0))
        throw std::invalid_argument("SimConfig: hidden_fraction must be in [0, 1)");
    if (!(variance_lo > 0.0) || variance_hi < variance_lo)
        throw std::invalid_argument("SimConfig: bad variance range");
    if (!(coeff_lo > 0.0) || coeff_hi < coeff_lo)
        throw std::invalid_argument("SimConfig: bad coefficient magnitude range");
    if (sample_size == 0) throw std::invalid_argument("SimConfig: sample_size must be positive");
}

CausalDag generate_dag(const SimConfig& config, Rng& rng) {
    config.validate();
    const std::size_t v = config.num_nodes;

    std::vector<std::uint32_t> order(v);
    for (std::size_t i = 0; i < v; ++i) order[i] = static_cast<std::uint32_t>(i);
    rng.shuffle(order.data(), v);

    // Uniform sample of num_edges distinct forward position pairs via a
    // partial Fisher-Yates over all pair ordinals.
    const std::size_t total = num_pairs(v);
    std::vector<std::uint32_t> ordinals(total);
    for (std::size_t i = 0; i < total; ++i) ordinals[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < config.num_edges; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
        std::swap(ordinals[i], ordinals[j]);
    }

    std::vector<DagEdge> edges;
    edges.reserve(config.num_edges);
    std::vector<double> coeffs;
    coeffs.reserve(config.num_edges);
    for (std::size_t i = 0; i < config.num_edges; ++i) {
        const auto [pos_a, pos_b] = pair_from_index(ordinals[i], v);
        edges.push_back({order[pos_a], order[pos_b]});  // earlier position is the parent
        const double magnitude = rng.uniform(config.coeff_lo, config.coeff_hi);
        coeffs.push_back(rng.below(2) == 0 ? magnitude : -magnitude);
    }

    std::vector<double> variances(v);
    for (std::size_t i = 0; i < v; ++i)
        variances[i] = rng.uniform(config.variance_lo, config.variance_hi);

    return CausalDag(v, std::move(edges), std::move(coeffs), std::move(variances));
}

std::vector<std::uint32_t> confounder_nodes(const CausalDag& dag) {
    std::vector<std::uint32_t> out;
    for (std::size_t n = 0; n < dag.num_nodes(); ++n)
        if (dag.children(n).size() >= 2) out.push_back(static_cast<std::uint32_t>(n));
    return out;
}

std::vector<std::vector<double>> sample_dataset(const CausalDag& dag, std::size_t n, Rng& rng) {
    const std::size_t v = dag.num_nodes();
    std::vector<std::vector<double>> cols(v);
    for (std::size_t node = 0; node < v; ++node) {
        const double sd = std::sqrt(dag.noise_variance(node));
        auto& col = cols[node];
        col.resize(n);
        for (std::size_t r = 0; r < n; ++r) col[r] = sd * rng.normal();
    }
    for (std::uint32_t node : dag.topological_order()) {
        const auto& ps = dag.parents(node);
        const auto& betas = dag.parent_coefficients(node);
        for (std::size_t k = 0; k < ps.size(); ++k)
            kernels::axpy(betas[k], cols[ps[k]].data(), cols[node].data(), n);
    }
    return cols;
}

std::size_t latent_count(double h, std::size_t num_nodes) {
    return static_cast<std::size_t>(std::llround(h * static_cast<double>(num_nodes)));
}

Dataset mask_latents(const CausalDag& dag, std::vector<std::vector<double>> full_data, double h,
                     Rng& rng) {
    const std::size_t v = dag.num_nodes();
    if (full_data.size() != v) throw std::invalid_argument("mask_latents: column count != num_nodes");
    const std::size_t k = latent_count(h, v);

    std::vector<std::uint32_t> pool = confounder_nodes(dag);
    if (pool.size() < k)
        throw std::runtime_error("mask_latents: need " + std::to_string(k) + " confounders but DAG has " +
                                 std::to_string(pool.size()));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<bool> latent(v, false);
    for (std::size_t i = 0; i < k; ++i) latent[pool[i]] = true;

    Dataset out;
    out.columns.reserve(v - k);
    for (std::size_t node = 0; node < v; ++node) {
        if (latent[node]) continue;
        out.provenance.push_back(static_cast<std::uint32_t>(node));
        out.column_names.push_back("X" + std::to_string(node));
        out.columns.push_back(std::move(full_data[node]));
    }
    return out;
}

std::vector<std::uint32_t> masked_nodes(std::size_t num_nodes, const Dataset& data) {
    std::vector<bool> observed(num_nodes, false);
    for (std::uint32_t orig : data.provenance) observed[orig] = true;
    std::vector<std::uint32_t> out;
    for (std::size_t n = 0; n < num_nodes; ++n)
        if (!observed[n]) out.push_back(static_cast<std::uint32_t>(n));
    return out;
}

SimulatedInstance simulate(const SimConfig& config) {
    config.validate();
    const std::size_t wanted = latent_count(config.hidden_fraction, config.num_nodes);

    CausalDag dag(2, {}, {}, {1.0, 1.0});
    bool found = false;
    for (std::uint64_t attempt = 0; attempt < 10 && !found; ++attempt) {
        Rng dag_rng(mix_seed(config.seed, 1 + attempt));
        dag = generate_dag(config, dag_rng);
        found = confounder_nodes(dag).size() >= wanted;
    }
    if (!found)
        throw std::runtime_error("simulate: no DAG with " + std::to_string(wanted) +
                                 " confounders after 10 attempts");

    Rng sample_rng(mix_seed(config.seed, 100));
    auto full = sample_dataset(dag, config.sample_size, sample_rng);

    Rng mask_rng(mix_seed(config.seed, 101));
    Dataset data = mask_latents(dag, std::move(full), config.hidden_fraction, mask_rng);
    std::vector<std::uint32_t> latents = masked_nodes(config.num_nodes, data);
    return {std::move(dag), std::move(data), std::move(latents)};
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t c = 0; c < data.column_names.size(); ++c) {
        if (c) out << ',';
        out << data.column_names[c];
    }
    out << '\n';
    const std::size_t rows = data.rows();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c) {
            if (c) out << ',';
            out << format_double(data.columns[c][r]);
        }
        out << '\n';
    }
}

Dataset parse_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset csv: empty file");
    Dataset data;
    for (std::string_view name : split_csv_line(line)) {
        data.column_names.emplace_back(name);
        if (name.size() < 2 || name[0] != 'X')
            throw std::runtime_error("dataset csv: bad column name '" + std::string(name) + "'");
        data.provenance.push_back(static_cast<std::uint32_t>(std::stoul(std::string(name.substr(1)))));
    }
    data.columns.resize(data.column_names.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != data.columns.size())
            throw std::runtime_error("dataset csv: ragged row");
        for (std::size_t c = 0; c < fields.size(); ++c)
            data.columns[c].push_back(parse_double(fields[c]));
    }
    return data;
}

}  // namespace causalcal
