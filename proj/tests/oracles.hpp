#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check: residual-regression partial correlation, closed-form SEM
// covariance propagation, brute-force d-separation via path enumeration,
// and brute-force signed-rank enumeration.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "causalcal/graph.hpp"

namespace causalcal::test_oracles {

// Solves the square system a * x = b by Gauss-Jordan (no reuse of the
// library's inversion helper).
inline std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                        std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (std::abs(a[pivot * n + col]) < 1e-12) throw std::runtime_error("solve_linear: singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            std::swap(b[pivot], b[col]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t c = 0; c < n; ++c) a[col * n + c] *= inv;
        b[col] *= inv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    return b;
}

// Least-squares residual of y on the columns S (with intercept).
inline std::vector<double> regression_residual(const std::vector<double>& y,
                                               const std::vector<const std::vector<double>*>& s) {
    const std::size_t n = y.size();
    const std::size_t k = s.size() + 1;  // intercept first
    std::vector<double> gram(k * k, 0.0), rhs(k, 0.0);
    const auto col = [&](std::size_t j, std::size_t row) {
        return j == 0 ? 1.0 : (*s[j - 1])[row];
    };
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += col(a, r) * col(b, r);
            gram[a * k + b] = acc;
        }
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += col(a, r) * y[r];
        rhs[a] = acc;
    }
    const std::vector<double> beta = solve_linear(gram, rhs, k);
    std::vector<double> residual(n);
    for (std::size_t r = 0; r < n; ++r) {
        double fit = 0.0;
        for (std::size_t a = 0; a < k; ++a) fit += beta[a] * col(a, r);
        residual[r] = y[r] - fit;
    }
    return residual;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        mx += x[r];
        my += y[r];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        sxy += (x[r] - mx) * (y[r] - my);
        sxx += (x[r] - mx) * (x[r] - mx);
        syy += (y[r] - my) * (y[r] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Partial correlation of (x, y) given S: correlate the two regression
// residuals.
inline double partial_corr_by_regression(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::vector<const std::vector<double>*>& s) {
    if (s.empty()) return pearson(x, y);
    return pearson(regression_residual(x, s), regression_residual(y, s));
}

// Population covariance of a linear-Gaussian SEM by propagation in
// topological order: cov(i, j) = sum_p beta_{p->j} cov(i, p) for i earlier,
// var(j) = sum_{p,q} beta_p beta_q cov(p, q) + var(eps_j).
inline std::vector<double> population_covariance(const CausalDag& dag) {
    const std::size_t v = dag.num_nodes();
    std::vector<double> cov(v * v, 0.0);
    for (std::uint32_t node : dag.topological_order()) {
        const auto& ps = dag.parents(node);
        const auto& betas = dag.parent_coefficients(node);
        double var = dag.noise_variance(node);
        for (std::size_t a = 0; a < ps.size(); ++a)
            for (std::size_t b = 0; b < ps.size(); ++b)
                var += betas[a] * betas[b] * cov[ps[a] * v + ps[b]];
        cov[node * v + node] = var;
        for (std::size_t other = 0; other < v; ++other) {
            if (other == node) continue;
            double c = 0.0;
            for (std::size_t a = 0; a < ps.size(); ++a) c += betas[a] * cov[other * v + ps[a]];
            cov[other * v + node] = c;
            cov[node * v + other] = c;
        }
    }
    return cov;
}

inline std::vector<double> covariance_to_correlation(std::vector<double> cov, std::size_t v) {
    std::vector<double> sd(v);
    for (std::size_t i = 0; i < v; ++i) sd[i] = std::sqrt(cov[i * v + i]);
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = 0; j < v; ++j) cov[i * v + j] /= sd[i] * sd[j];
    return cov;
}

// Brute-force d-separation: enumerate every simple path and test whether S
// blocks it under the textbook rules.
inline bool dsep_by_path_enumeration(const CausalDag& dag, std::uint32_t i, std::uint32_t j,
                                     const std::vector<std::uint32_t>& s) {
    const std::size_t v = dag.num_nodes();
    std::vector<bool> in_s(v, false);
    for (std::uint32_t n : s) in_s[n] = true;

    std::vector<bool> has_desc_in_s(v, false);
    for (std::size_t n = 0; n < v; ++n) {
        // descendants of n via DFS over children
        std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(n)};
        std::vector<bool> seen(v, false);
        while (!stack.empty()) {
            const std::uint32_t x = stack.back();
            stack.pop_back();
            if (seen[x]) continue;
            seen[x] = true;
            if (in_s[x]) {
                has_desc_in_s[n] = true;
                break;
            }
            for (std::uint32_t c : dag.children(x)) stack.push_back(c);
        }
    }

    // adjacency with direction flags
    std::vector<std::uint32_t> path{i};
    std::vector<bool> on_path(v, false);
    on_path[i] = true;

    const std::function<bool(std::uint32_t)> dfs = [&](std::uint32_t cur) -> bool {
        if (cur == j) {
            // path found; check whether S blocks it
            for (std::size_t m = 1; m + 1 < path.size(); ++m) {
                const std::uint32_t prev = path[m - 1], mid = path[m], next = path[m + 1];
                const auto points_at = [&](std::uint32_t from, std::uint32_t to) {
                    for (std::uint32_t c : dag.children(from))
                        if (c == to) return true;
                    return false;
                };
                const bool collider = points_at(prev, mid) && points_at(next, mid);
                if (collider) {
                    if (!has_desc_in_s[mid]) return false;  // blocked
                } else {
                    if (in_s[mid]) return false;  // blocked
                }
            }
            return true;  // open path
        }
        for (std::uint32_t nb = 0; nb < v; ++nb) {
            if (on_path[nb]) continue;
            bool adjacent = false;
            for (std::uint32_t c : dag.children(cur))
                if (c == nb) adjacent = true;
            for (std::uint32_t p : dag.parents(cur))
                if (p == nb) adjacent = true;
            if (!adjacent) continue;
            path.push_back(nb);
            on_path[nb] = true;
            if (dfs(nb)) return true;
            on_path[nb] = false;
            path.pop_back();
        }
        return false;
    };
    return !dfs(i);
}

// Exact two-sided signed-rank p by direct enumeration of all sign vectors.
inline double signed_rank_exact_p(const std::vector<double>& ranks, double w_plus) {
    const std::size_t n = ranks.size();
    const std::size_t total = std::size_t{1} << n;
    std::size_t below = 0, above = 0;
    for (std::size_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (mask & (std::size_t{1} << k)) w += ranks[k];
        if (w <= w_plus + 1e-12) ++below;
        if (w >= w_plus - 1e-12) ++above;
    }
    const double p =
        2.0 * static_cast<double>(std::min(below, above)) / static_cast<double>(total);
    return std::min(1.0, p);
}

}  // namespace causalcal::test_oracles
