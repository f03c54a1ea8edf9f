#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "causalcal/graph.hpp"
#include "causalcal/sem.hpp"

namespace causalcal {

struct CiDecision {
    bool independent;
    double p_value;
    double statistic;  // Fisher z-score
};

// Pearson correlation matrix plus sample size; immutable and shareable.
class CorrelationContext {
public:
    CorrelationContext(std::vector<double> matrix, std::size_t num_vars, std::size_t sample_size);

    std::size_t num_vars() const { return num_vars_; }
    std::size_t sample_size() const { return sample_size_; }
    double corr(std::size_t i, std::size_t j) const { return matrix_[i * num_vars_ + j]; }

private:
    std::vector<double> matrix_;
    std::size_t num_vars_;
    std::size_t sample_size_;
};

// Pearson correlations of the observed columns. Throws (naming the column)
// if any column is constant.
CorrelationContext build_context(const Dataset& data);

// Partial correlation of (i, j) given S by inversion of the sub-correlation
// matrix over {i, j} ∪ S: r = -P01 / sqrt(P00 * P11). |S| = 0 reads the
// matrix entry directly. Throws on a singular sub-matrix (collinear
// conditioning set).
double partial_correlation(const CorrelationContext& ctx, std::uint32_t i, std::uint32_t j,
                           std::span<const std::uint32_t> s);

// Fisher's Z: z = atanh(r) * sqrt(n - |S| - 3), p = 2 * (1 - Phi(|z|))
// computed as erfc(|z| / sqrt(2)). |r| >= 1 is clamped to 1 - 1e-12 before
// the transform (bootstrap resamples can duplicate rows); each clamp bumps
// *clamp_counter when provided. Requires n > |S| + 3.
CiDecision fisher_z_test(const CorrelationContext& ctx, std::uint32_t i, std::uint32_t j,
                         std::span<const std::uint32_t> s, double alpha,
                         std::uint64_t* clamp_counter = nullptr);

// Standard normal CDF used by fisher_z_test and the rank tests.
double normal_cdf(double x);

// True iff every path between i and j in the DAG is blocked by S (colliders
// open iff in S or with a descendant in S). i, j must not be in S.
bool d_separated(const CausalDag& dag, std::uint32_t i, std::uint32_t j,
                 std::span<const std::uint32_t> s);

// Independence decision source for the structure search. Implementations are
// used by a single search run at a time; the Fisher-Z one carries a per-run
// decision cache.
class CiTester {
public:
    virtual ~CiTester() = default;
    virtual std::size_t num_vars() const = 0;
    virtual bool is_independent(std::uint32_t i, std::uint32_t j,
                                std::span<const std::uint32_t> s) = 0;
    virtual std::uint64_t test_count() const = 0;
    virtual std::uint64_t clamp_count() const { return 0; }
};

struct CiKeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& key) const {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (std::uint32_t v : key) {
            h ^= v;
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

class FisherZTester final : public CiTester {
public:
    FisherZTester(const CorrelationContext& ctx, double alpha);

    std::size_t num_vars() const override { return ctx_.num_vars(); }
    bool is_independent(std::uint32_t i, std::uint32_t j,
                        std::span<const std::uint32_t> s) override;
    std::uint64_t test_count() const override { return tests_; }
    std::uint64_t clamp_count() const override { return clamps_; }

private:
    const CorrelationContext& ctx_;
    double alpha_;
    std::uint64_t tests_ = 0;
    std::uint64_t clamps_ = 0;
    // Keyed by (min(i,j), max(i,j), sorted S); orientation re-queries
    // adjacency-phase tests, so hits are common.
    std::unordered_map<std::vector<std::uint32_t>, bool, CiKeyHash> cache_;
};

// d-separation oracle over the marginal model: queries are in observed-index
// space, answered on the full DAG (latents included as path nodes).
class DSepTester final : public CiTester {
public:
    DSepTester(const CausalDag& dag, std::vector<std::uint32_t> observed_to_original);
    // Latent-free convenience: observed index == node index.
    explicit DSepTester(const CausalDag& dag);

    std::size_t num_vars() const override { return observed_.size(); }
    bool is_independent(std::uint32_t i, std::uint32_t j,
                        std::span<const std::uint32_t> s) override;
    std::uint64_t test_count() const override { return tests_; }

private:
    const CausalDag& dag_;
    std::vector<std::uint32_t> observed_;
    std::uint64_t tests_ = 0;
};

}  // namespace causalcal
