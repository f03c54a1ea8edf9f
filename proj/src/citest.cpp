#include "causalcal/citest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "causalcal/kernels.hpp"

namespace causalcal {

CorrelationContext::CorrelationContext(std::vector<double> matrix, std::size_t num_vars,
                                       std::size_t sample_size)
    : matrix_(std::move(matrix)), num_vars_(num_vars), sample_size_(sample_size) {
    if (matrix_.size() != num_vars_ * num_vars_)
        throw std::invalid_argument("CorrelationContext: matrix size mismatch");
}

CorrelationContext build_context(const Dataset& data) {
    const std::size_t m = data.cols();
    const std::size_t n = data.rows();
    if (n < 2) throw std::invalid_argument("build_context: need at least 2 rows");

    // Standardize columns once; correlations are then plain dot products.
    std::vector<std::vector<double>> z(m);
    for (std::size_t c = 0; c < m; ++c) {
        const double* col = data.columns[c].data();
        const auto [lo, hi] = std::minmax_element(col, col + n);
        if (*lo == *hi)
            throw std::runtime_error("build_context: constant column '" + data.column_names[c] + "'");
        const double mean = kernels::sum(col, n) / static_cast<double>(n);
        auto& zc = z[c];
        zc.resize(n);
        for (std::size_t r = 0; r < n; ++r) zc[r] = col[r] - mean;
        const double ss = kernels::dot(zc.data(), zc.data(), n);
        if (ss <= 0.0)
            throw std::runtime_error("build_context: constant column '" + data.column_names[c] + "'");
        const double inv_norm = 1.0 / std::sqrt(ss);
        for (std::size_t r = 0; r < n; ++r) zc[r] *= inv_norm;
    }

    std::vector<double> corr(m * m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double r = kernels::dot(z[i].data(), z[j].data(), n);
            corr[i * m + j] = r;
            corr[j * m + i] = r;
        }
    }
    return CorrelationContext(std::move(corr), m, n);
}

namespace {

// In-place Gauss-Jordan with partial pivoting; false on a singular matrix.
bool invert_in_place(std::vector<double>& a, std::size_t k) {
    std::vector<std::size_t> perm(k);
    std::vector<double> inv(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;

    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * k + col]);
        for (std::size_t r = col + 1; r < k; ++r) {
            const double cand = std::abs(a[r * k + col]);
            if (cand > best) {
                best = cand;
                pivot = r;
            }
        }
        if (best < 1e-12) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < k; ++c) {
                std::swap(a[pivot * k + c], a[col * k + c]);
                std::swap(inv[pivot * k + c], inv[col * k + c]);
            }
        }
        const double scale = 1.0 / a[col * k + col];
        for (std::size_t c = 0; c < k; ++c) {
            a[col * k + c] *= scale;
            inv[col * k + c] *= scale;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double factor = a[r * k + col];
            if (factor == 0.0) continue;
            for (std::size_t c = 0; c < k; ++c) {
                a[r * k + c] -= factor * a[col * k + c];
                inv[r * k + c] -= factor * inv[col * k + c];
            }
        }
    }
    a = std::move(inv);
    return true;
}

}  // namespace

double partial_correlation(const CorrelationContext& ctx, std::uint32_t i, std::uint32_t j,
                           std::span<const std::uint32_t> s) {
    if (i == j) throw std::invalid_argument("partial_correlation: i == j");
    for (std::uint32_t v : s)
        if (v == i || v == j)
            throw std::invalid_argument("partial_correlation: conditioning set contains endpoint");
    if (s.empty()) return ctx.corr(i, j);

    std::vector<std::uint32_t> vars;
    vars.reserve(s.size() + 2);
    vars.push_back(i);
    vars.push_back(j);
    vars.insert(vars.end(), s.begin(), s.end());
    const std::size_t k = vars.size();

    std::vector<double> sub(k * k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) sub[a * k + b] = ctx.corr(vars[a], vars[b]);

    if (!invert_in_place(sub, k))
        throw std::runtime_error("partial_correlation: singular sub-matrix (collinear conditioning set)");
    const double p00 = sub[0];
    const double p11 = sub[k + 1];
    const double p01 = sub[1];
    if (!(p00 > 0.0) || !(p11 > 0.0))
        throw std::runtime_error("partial_correlation: singular sub-matrix (collinear conditioning set)");
    return -p01 / std::sqrt(p00 * p11);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

CiDecision fisher_z_test(const CorrelationContext& ctx, std::uint32_t i, std::uint32_t j,
                         std::span<const std::uint32_t> s, double alpha,
                         std::uint64_t* clamp_counter) {
    const std::size_t n = ctx.sample_size();
    if (n <= s.size() + 3)
        throw std::invalid_argument("fisher_z_test: sample size must exceed |S| + 3");

    double r = partial_correlation(ctx, i, j, s);
    if (std::abs(r) >= 1.0) {
        r = std::copysign(1.0 - 1e-12, r);
        if (clamp_counter) ++*clamp_counter;
    }

    const double dof = static_cast<double>(n - s.size() - 3);
    const double z = 0.5 * std::log((1.0 + r) / (1.0 - r)) * std::sqrt(dof);
    const double p = std::erfc(std::abs(z) / std::numbers::sqrt2);
    return {p > alpha, p, z};
}

FisherZTester::FisherZTester(const CorrelationContext& ctx, double alpha)
    : ctx_(ctx), alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("FisherZTester: bad alpha");
}

bool FisherZTester::is_independent(std::uint32_t i, std::uint32_t j,
                                   std::span<const std::uint32_t> s) {
    std::vector<std::uint32_t> key;
    key.reserve(s.size() + 2);
    key.push_back(std::min(i, j));
    key.push_back(std::max(i, j));
    key.insert(key.end(), s.begin(), s.end());
    std::sort(key.begin() + 2, key.end());

    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    ++tests_;
    const bool indep = fisher_z_test(ctx_, i, j, s, alpha_, &clamps_).independent;
    cache_.emplace(std::move(key), indep);
    return indep;
}

bool d_separated(const CausalDag& dag, std::uint32_t i, std::uint32_t j,
                 std::span<const std::uint32_t> s) {
    const std::size_t v = dag.num_nodes();
    if (i == j) throw std::invalid_argument("d_separated: i == j");
    std::vector<bool> in_s(v, false);
    for (std::uint32_t node : s) in_s[node] = true;
    if (in_s[i] || in_s[j]) throw std::invalid_argument("d_separated: endpoint in conditioning set");

    // Nodes in S or with a descendant in S; these activate colliders.
    std::vector<bool> anc(v, false);
    std::vector<std::uint32_t> stack(s.begin(), s.end());
    for (std::uint32_t node : s) anc[node] = true;
    while (!stack.empty()) {
        const std::uint32_t node = stack.back();
        stack.pop_back();
        for (std::uint32_t p : dag.parents(node)) {
            if (!anc[p]) {
                anc[p] = true;
                stack.push_back(p);
            }
        }
    }

    // Reachability over (node, entry direction) states.
    enum : std::uint8_t { kFromChild = 1, kFromParent = 2 };
    std::vector<std::uint8_t> seen(v, 0);
    std::vector<std::pair<std::uint32_t, std::uint8_t>> work;
    work.emplace_back(i, kFromChild);
    seen[i] |= kFromChild;
    while (!work.empty()) {
        const auto [node, dir] = work.back();
        work.pop_back();
        if (node == j) return false;
        const auto push = [&](std::uint32_t next, std::uint8_t d) {
            if (!(seen[next] & d)) {
                seen[next] |= d;
                work.emplace_back(next, d);
            }
        };
        if (dir == kFromChild) {
            if (!in_s[node]) {
                for (std::uint32_t p : dag.parents(node)) push(p, kFromChild);
                for (std::uint32_t c : dag.children(node)) push(c, kFromParent);
            }
        } else {
            if (!in_s[node])
                for (std::uint32_t c : dag.children(node)) push(c, kFromParent);
            if (anc[node])
                for (std::uint32_t p : dag.parents(node)) push(p, kFromChild);
        }
    }
    return true;
}

DSepTester::DSepTester(const CausalDag& dag, std::vector<std::uint32_t> observed_to_original)
    : dag_(dag), observed_(std::move(observed_to_original)) {}

DSepTester::DSepTester(const CausalDag& dag) : dag_(dag) {
    observed_.resize(dag.num_nodes());
    for (std::size_t n = 0; n < dag.num_nodes(); ++n)
        observed_[n] = static_cast<std::uint32_t>(n);
}

bool DSepTester::is_independent(std::uint32_t i, std::uint32_t j,
                                std::span<const std::uint32_t> s) {
    ++tests_;
    std::vector<std::uint32_t> mapped(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) mapped[k] = observed_[s[k]];
    return d_separated(dag_, observed_[i], observed_[j], mapped);
}

}  // namespace causalcal
