#include "causalcal/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "causalcal/citest.hpp"
#include "causalcal/textio.hpp"

namespace causalcal {

void BootstrapConfig::validate() const {
    if (num_replicates < 1) throw std::invalid_argument("BootstrapConfig: need num_replicates >= 1");
    search.validate();
}

DistributionTable::DistributionTable(std::size_t num_vars, std::size_t num_replicates, bool dense)
    : num_vars_(num_vars), num_replicates_(num_replicates), dense_(dense) {
    if (dense_) dense_counts_.assign(num_pairs(num_vars), {});
}

void DistributionTable::add(std::size_t pair_idx, EdgeClass cls) {
    const int c = static_cast<int>(cls);
    if (c == 0) return;
    if (dense_) {
        ++dense_counts_[pair_idx][c - 1];
    } else {
        ++sparse_counts_[pair_idx][c - 1];
    }
}

void DistributionTable::count_pag(const Pag& pag) {
    if (pag.num_nodes() != num_vars_)
        throw std::invalid_argument("DistributionTable: PAG variable count mismatch");
    for (const auto& [i, j] : pag.edge_list()) add(pair_index(i, j, num_vars_), pag.classify(i, j));
}

void DistributionTable::merge(const DistributionTable& other) {
    if (other.num_vars_ != num_vars_)
        throw std::invalid_argument("DistributionTable: merge size mismatch");
    if (dense_) {
        for (std::size_t p = 0; p < dense_counts_.size(); ++p)
            for (int c = 0; c < 6; ++c) dense_counts_[p][c] += other.dense_counts_[p][c];
    } else {
        for (const auto& [p, counts] : other.sparse_counts_) {
            auto& mine = sparse_counts_[p];
            for (int c = 0; c < 6; ++c) mine[c] += counts[c];
        }
    }
}

const std::array<std::uint32_t, 6>* DistributionTable::find_counts(std::size_t pair_idx) const {
    if (dense_) return &dense_counts_[pair_idx];
    const auto it = sparse_counts_.find(pair_idx);
    return it == sparse_counts_.end() ? nullptr : &it->second;
}

std::array<double, 7> DistributionTable::probs(std::size_t pair_idx) const {
    std::array<double, 7> out{};
    const auto* counts = find_counts(pair_idx);
    const double n = static_cast<double>(num_replicates_);
    std::uint32_t present = 0;
    if (counts) {
        for (int c = 0; c < 6; ++c) {
            present += (*counts)[c];
            out[c + 1] = static_cast<double>((*counts)[c]) / n;
        }
    }
    out[0] = static_cast<double>(num_replicates_ - present) / n;
    return out;
}

std::vector<EdgeClassDistribution> DistributionTable::distributions() const {
    std::vector<EdgeClassDistribution> out;
    out.reserve(num_pairs(num_vars_));
    // Row-major upper-triangle iteration matches pair_index ordinals.
    std::size_t p = 0;
    for (std::size_t a = 0; a < num_vars_; ++a)
        for (std::size_t b = a + 1; b < num_vars_; ++b, ++p)
            out.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), probs(p)});
    return out;
}

Dataset resample(const Dataset& data, Rng& rng) {
    const std::size_t n = data.rows();
    if (n == 0) throw std::invalid_argument("resample: empty dataset");
    std::vector<std::size_t> rows(n);
    for (std::size_t r = 0; r < n; ++r) rows[r] = static_cast<std::size_t>(rng.below(n));

    Dataset out;
    out.column_names = data.column_names;
    out.provenance = data.provenance;
    out.columns.resize(data.cols());
    for (std::size_t c = 0; c < data.cols(); ++c) {
        const auto& src = data.columns[c];
        auto& dst = out.columns[c];
        dst.resize(n);
        for (std::size_t r = 0; r < n; ++r) dst[r] = src[rows[r]];
    }
    return out;
}

namespace {

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::size_t replicate) {
    char name[32];
    std::snprintf(name, sizeof name, "pag_%05zu.txt", replicate);
    return dir / name;
}

Pag default_search(const Dataset& resampled, const SearchConfig& search,
                   std::atomic<std::uint64_t>& tests, std::atomic<std::uint64_t>& clamps,
                   std::atomic<std::uint64_t>& removals) {
    const CorrelationContext ctx = build_context(resampled);
    FisherZTester tester(ctx, search.alpha);
    SearchDiagnostics diag;
    Pag pag = run_search(tester, search, &diag);
    tests += diag.ci_tests;
    clamps += diag.clamped_correlations;
    removals += diag.orientation_removals;
    return pag;
}

}  // namespace

DistributionTable estimate_distributions(const Dataset& data, const BootstrapConfig& config,
                                         const SearchRunner& runner, BootstrapDiagnostics* diag) {
    config.validate();
    const std::size_t m = data.cols();
    const std::size_t n_rep = config.num_replicates;
    const bool dense = m <= config.dense_threshold;
    const bool checkpointing = !config.checkpoint_dir.empty();
    if (checkpointing) std::filesystem::create_directories(config.checkpoint_dir);

    std::atomic<std::uint64_t> tests{0}, clamps{0}, removals{0};
    std::atomic<std::size_t> loaded{0};
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    // One count table per worker; integer merges commute, so the result is
    // identical for any worker count.
    const std::size_t workers = std::max<std::size_t>(1, config.parallelism);
    std::vector<DistributionTable> tables(workers, DistributionTable(m, n_rep, dense));

    std::mutex error_mutex;
    std::size_t error_replicate = n_rep;
    std::string error_message;

    auto work = [&](std::size_t worker_idx) {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_rep || failed.load()) return;
            try {
                Pag pag(0);
                const auto ckpt =
                    checkpointing ? checkpoint_path(config.checkpoint_dir, i) : std::filesystem::path{};
                if (checkpointing && std::filesystem::exists(ckpt)) {
                    std::ifstream in(ckpt);
                    pag = parse_pag(in, m);
                    ++loaded;
                } else {
                    Rng rng(mix_seed(config.seed, i));
                    const Dataset replicate_data = resample(data, rng);
                    pag = runner ? runner(replicate_data, i)
                                 : default_search(replicate_data, config.search, tests, clamps, removals);
                    if (checkpointing) write_file_atomic(ckpt, pag_to_string(pag));
                }
                tables[worker_idx].count_pag(pag);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (i < error_replicate) {
                    error_replicate = i;
                    error_message = e.what();
                }
                failed.store(true);
                return;
            }
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    if (failed.load())
        throw std::runtime_error("bootstrap replicate " + std::to_string(error_replicate) +
                                 " failed: " + error_message);

    for (std::size_t w = 1; w < workers; ++w) tables[0].merge(tables[w]);
    if (diag) {
        diag->ci_tests = tests;
        diag->clamped_correlations = clamps;
        diag->orientation_removals = removals;
        diag->replicates_loaded_from_checkpoint = loaded;
    }
    return std::move(tables[0]);
}

void write_distribution_csv(std::ostream& out, const DistributionTable& table) {
    out << "i,j,p0,p1,p2,p3,p4,p5,p6\n";
    std::size_t p = 0;
    for (std::size_t a = 0; a < table.num_vars(); ++a) {
        for (std::size_t b = a + 1; b < table.num_vars(); ++b, ++p) {
            out << a << ',' << b;
            for (const double v : table.probs(p)) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

ProbTable to_prob_table(const DistributionTable& table) {
    ProbTable out;
    out.num_vars = table.num_vars();
    const std::size_t total = num_pairs(out.num_vars);
    out.probs.reserve(total);
    for (std::size_t p = 0; p < total; ++p) out.probs.push_back(table.probs(p));
    return out;
}

ProbTable parse_distribution_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("i,j,p0"))
        throw std::runtime_error("distribution csv: bad header");
    ProbTable out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 9) throw std::runtime_error("distribution csv: bad row");
        std::array<double, 7> probs;
        for (int c = 0; c < 7; ++c) probs[c] = parse_double(fields[2 + c]);
        out.probs.push_back(probs);
    }
    // Row count determines the variable count: rows == v*(v-1)/2.
    const std::size_t rows = out.probs.size();
    const std::size_t v = static_cast<std::size_t>(
        std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(rows))) / 2.0));
    if (num_pairs(v) != rows)
        throw std::runtime_error("distribution csv: row count is not a full pair enumeration");
    out.num_vars = v;
    return out;
}

}  // namespace causalcal
