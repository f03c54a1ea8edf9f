#include "causalcal/search.hpp"

#include <algorithm>
#include <stdexcept>

namespace causalcal {

void SearchConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("SearchConfig: alpha not in (0,1)");
}

Skeleton::Skeleton(std::size_t num_nodes, bool complete)
    : num_nodes_(num_nodes),
      num_edges_(complete ? num_pairs(num_nodes) : 0),
      adj_(num_nodes * num_nodes, complete ? 1 : 0),
      neighbors_(num_nodes) {
    for (std::size_t i = 0; i < num_nodes; ++i) {
        adj_[i * num_nodes + i] = 0;
        if (complete) {
            neighbors_[i].reserve(num_nodes - 1);
            for (std::size_t j = 0; j < num_nodes; ++j)
                if (j != i) neighbors_[i].push_back(static_cast<std::uint32_t>(j));
        }
    }
}

void Skeleton::remove_edge(std::size_t i, std::size_t j) {
    if (!adjacent(i, j)) return;
    adj_[i * num_nodes_ + j] = 0;
    adj_[j * num_nodes_ + i] = 0;
    --num_edges_;
    auto erase = [](std::vector<std::uint32_t>& v, std::uint32_t x) {
        v.erase(std::lower_bound(v.begin(), v.end(), x));
    };
    erase(neighbors_[i], static_cast<std::uint32_t>(j));
    erase(neighbors_[j], static_cast<std::uint32_t>(i));
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Skeleton::edge_list() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    out.reserve(num_edges_);
    for (std::size_t i = 0; i < num_nodes_; ++i)
        for (std::uint32_t j : neighbors_[i])
            if (j > i) out.emplace_back(static_cast<std::uint32_t>(i), j);
    return out;
}

std::uint64_t SepsetTable::key(std::uint32_t i, std::uint32_t j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::uint64_t>(i) << 32 | j;
}

void SepsetTable::set(std::uint32_t i, std::uint32_t j, std::vector<std::uint32_t> sepset) {
    std::sort(sepset.begin(), sepset.end());
    table_[key(i, j)] = std::move(sepset);
}

const std::vector<std::uint32_t>* SepsetTable::find(std::uint32_t i, std::uint32_t j) const {
    const auto it = table_.find(key(i, j));
    return it == table_.end() ? nullptr : &it->second;
}

namespace {

// Lexicographic size-k subsets of a sorted base. Calls fn(subset) until it
// returns true; reports whether any call did.
template <typename Fn>
bool for_each_subset(const std::vector<std::uint32_t>& base, std::size_t k, Fn&& fn) {
    if (base.size() < k) return false;
    std::vector<std::size_t> idx(k);
    for (std::size_t t = 0; t < k; ++t) idx[t] = t;
    std::vector<std::uint32_t> subset(k);
    while (true) {
        for (std::size_t t = 0; t < k; ++t) subset[t] = base[idx[t]];
        if (fn(subset)) return true;
        std::size_t t = k;
        while (t > 0 && idx[t - 1] == base.size() - k + (t - 1)) --t;
        if (t == 0) return false;
        ++idx[t - 1];
        for (std::size_t u = t; u < k; ++u) idx[u] = idx[u - 1] + 1;
    }
}

}  // namespace

SkeletonResult learn_skeleton(CiTester& tester, const SearchConfig& config) {
    config.validate();
    const std::size_t v = tester.num_vars();
    Skeleton skel(v, true);
    SepsetTable sepsets;

    for (std::size_t level = 0;; ++level) {
        if (level > config.max_conditioning_size) break;

        bool any_big_enough = false;
        for (std::size_t i = 0; i < v; ++i) {
            // Snapshot: removals during the pass change adjacency.
            const std::vector<std::uint32_t> nbrs = skel.neighbors(i);
            for (std::uint32_t j : nbrs) {
                if (j <= i || !skel.adjacent(i, j)) continue;
                const std::uint32_t ii = static_cast<std::uint32_t>(i);

                bool removed = false;
                for (int side = 0; side < 2 && !removed; ++side) {
                    if (side == 1 && level == 0) break;  // empty set already tried
                    const std::size_t anchor = side == 0 ? i : j;
                    const std::uint32_t other = side == 0 ? j : ii;
                    std::vector<std::uint32_t> base;
                    base.reserve(skel.neighbors(anchor).size());
                    for (std::uint32_t nb : skel.neighbors(anchor))
                        if (nb != other) base.push_back(nb);
                    if (base.size() >= level + 1) any_big_enough = true;
                    removed = for_each_subset(base, level, [&](const std::vector<std::uint32_t>& s) {
                        if (!tester.is_independent(ii, j, s)) return false;
                        skel.remove_edge(i, j);
                        sepsets.set(ii, j, s);
                        return true;
                    });
                }
            }
        }
        if (!any_big_enough) break;
    }
    return {std::move(skel), std::move(sepsets)};
}

namespace {

struct UnshieldedTriple {
    std::uint32_t a, b, c;  // a - b - c with a, c non-adjacent, a < c
};

std::vector<UnshieldedTriple> collect_unshielded_triples(const Skeleton& skel) {
    std::vector<UnshieldedTriple> out;
    for (std::size_t b = 0; b < skel.num_nodes(); ++b) {
        const auto& nbrs = skel.neighbors(b);
        for (std::size_t x = 0; x < nbrs.size(); ++x) {
            for (std::size_t y = x + 1; y < nbrs.size(); ++y) {
                if (!skel.adjacent(nbrs[x], nbrs[y]))
                    out.push_back({nbrs[x], static_cast<std::uint32_t>(b), nbrs[y]});
            }
        }
    }
    return out;
}

// S with {x, y} removed; RFCI re-tests condition on sepsets that may contain
// the tested endpoints.
std::vector<std::uint32_t> without(const std::vector<std::uint32_t>& s, std::uint32_t x,
                                   std::uint32_t y) {
    std::vector<std::uint32_t> out;
    out.reserve(s.size());
    for (std::uint32_t v : s)
        if (v != x && v != y) out.push_back(v);
    return out;
}

class Orienter {
public:
    Orienter(Skeleton& skel, SepsetTable& sepsets, CiTester& tester, const SearchConfig& config,
             OrientationStats& stats)
        : skel_(skel), sepsets_(sepsets), tester_(tester), config_(config), stats_(stats) {}

    Pag run() {
        while (true) {
            // Collider phase with RFCI re-tests; restart from scratch after
            // any removal so triple collection always sees the live skeleton.
            std::vector<UnshieldedTriple> colliders;
            bool removed = false;
            for (const auto& t : collect_unshielded_triples(skel_)) {
                if (!skel_.adjacent(t.a, t.b) || !skel_.adjacent(t.b, t.c)) continue;
                ++stats_.triples_checked;
                const auto* sep = sepsets_.find(t.a, t.c);
                if (sep == nullptr)
                    throw std::logic_error("orient_pag: missing sepset for non-adjacent pair");
                if (std::binary_search(sep->begin(), sep->end(), t.b)) continue;
                if (retest_removes(t.a, t.b, *sep) || retest_removes(t.b, t.c, *sep)) {
                    removed = true;
                    break;
                }
                colliders.push_back(t);
            }
            if (removed) continue;

            build_circle_pag();
            for (const auto& t : colliders) {
                pag_.set_mark(t.a, t.b, EndpointMark::Arrow);
                pag_.set_mark(t.c, t.b, EndpointMark::Arrow);
                ++stats_.colliders_oriented;
            }

            if (apply_rules_to_fixpoint()) return pag_;
            // else: R4 removed an edge; restart the collider phase
        }
    }

private:
    enum class R4Result { kNothing, kOriented, kRemovedEdge };

    bool retest_removes(std::uint32_t x, std::uint32_t y, const std::vector<std::uint32_t>& sep) {
        const auto s = without(sep, x, y);
        if (!tester_.is_independent(x, y, s)) return false;
        skel_.remove_edge(x, y);
        sepsets_.set(x, y, s);
        ++stats_.edges_removed;
        return true;
    }

    void build_circle_pag() {
        pag_ = Pag(skel_.num_nodes());
        for (const auto& [i, j] : skel_.edge_list())
            pag_.set_edge(i, j, EndpointMark::Circle, EndpointMark::Circle);
    }

    bool arrow_at(std::size_t from, std::size_t at) const {
        return pag_.mark_at(from, at) == EndpointMark::Arrow;
    }
    bool circle_at(std::size_t from, std::size_t at) const {
        return pag_.mark_at(from, at) == EndpointMark::Circle;
    }
    bool is_parent(std::size_t p, std::size_t c) const {
        return skel_.adjacent(p, c) && pag_.mark_at(c, p) == EndpointMark::Tail &&
               pag_.mark_at(p, c) == EndpointMark::Arrow;
    }

    // R1: a *-> b o-* c, a and c non-adjacent  =>  b -> c.
    bool rule_r1() {
        bool changed = false;
        for (std::size_t b = 0; b < skel_.num_nodes(); ++b) {
            for (std::uint32_t a : skel_.neighbors(b)) {
                if (!arrow_at(a, b)) continue;
                for (std::uint32_t c : skel_.neighbors(b)) {
                    if (c == a || skel_.adjacent(a, c)) continue;
                    if (!circle_at(c, b)) continue;
                    pag_.set_mark(c, b, EndpointMark::Tail);
                    pag_.set_mark(b, c, EndpointMark::Arrow);
                    changed = true;
                }
            }
        }
        return changed;
    }

    // R2: (a -> b *-> c) or (a *-> b -> c), and a *-o c  =>  arrow at c on a-c.
    bool rule_r2() {
        bool changed = false;
        for (std::size_t a = 0; a < skel_.num_nodes(); ++a) {
            for (std::uint32_t c : skel_.neighbors(a)) {
                if (!circle_at(a, c)) continue;
                for (std::uint32_t b : skel_.neighbors(a)) {
                    if (b == c || !skel_.adjacent(b, c)) continue;
                    const bool chain1 = is_parent(a, b) && arrow_at(b, c);
                    const bool chain2 = arrow_at(a, b) && is_parent(b, c);
                    if (chain1 || chain2) {
                        pag_.set_mark(a, c, EndpointMark::Arrow);
                        changed = true;
                        break;
                    }
                }
            }
        }
        return changed;
    }

    // R3: a *-> b <-* c, a *-o d o-* c, a and c non-adjacent, d *-o b
    //     =>  arrow at b on d-b.
    bool rule_r3() {
        bool changed = false;
        for (std::size_t b = 0; b < skel_.num_nodes(); ++b) {
            for (std::uint32_t d : skel_.neighbors(b)) {
                if (!circle_at(d, b)) continue;
                bool fired = false;
                const auto& dn = skel_.neighbors(d);
                for (std::size_t x = 0; x < dn.size() && !fired; ++x) {
                    const std::uint32_t a = dn[x];
                    if (a == b || !skel_.adjacent(a, b)) continue;
                    if (!arrow_at(a, b) || !circle_at(a, d)) continue;
                    for (std::size_t y = 0; y < dn.size() && !fired; ++y) {
                        const std::uint32_t c = dn[y];
                        if (c == a || c == b || skel_.adjacent(a, c) || !skel_.adjacent(c, b)) continue;
                        if (!arrow_at(c, b) || !circle_at(c, d)) continue;
                        pag_.set_mark(d, b, EndpointMark::Arrow);
                        changed = true;
                        fired = true;
                    }
                }
            }
        }
        return changed;
    }

    // R4 (discriminating path): for beta o-* gamma, walk backward from beta
    // over interior nodes that are colliders on the path and parents of
    // gamma; a reachable theta non-adjacent to gamma completes the path.
    // Every path edge is first re-tested given sepset(theta, gamma); an
    // independence finding removes that edge and restarts the collider
    // phase. Otherwise: beta in sepset(theta, gamma) orients beta -> gamma,
    // else the last interior node alpha gets alpha <-> beta <-> gamma.
    R4Result rule_r4() {
        for (std::size_t gamma = 0; gamma < skel_.num_nodes(); ++gamma) {
            const std::vector<std::uint32_t> gnbrs = skel_.neighbors(gamma);
            for (std::uint32_t beta : gnbrs) {
                if (!skel_.adjacent(beta, gamma) || !circle_at(gamma, beta)) continue;
                const R4Result r = search_discriminating_path(static_cast<std::uint32_t>(gamma), beta);
                if (r != R4Result::kNothing) return r;
            }
        }
        return R4Result::kNothing;
    }

    R4Result search_discriminating_path(std::uint32_t gamma, std::uint32_t beta) {
        // successor[u]: next node from u toward gamma on the partial path.
        std::vector<std::int64_t> successor(skel_.num_nodes(), -1);
        std::vector<std::size_t> edges_used(skel_.num_nodes(), 0);
        std::vector<std::uint32_t> queue;
        successor[beta] = gamma;
        edges_used[beta] = 1;
        queue.push_back(beta);

        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::uint32_t front = queue[head];
            if (edges_used[front] + 1 > config_.max_path_length) continue;
            for (std::uint32_t u : skel_.neighbors(front)) {
                if (u == gamma || u == beta || successor[u] >= 0) continue;
                // front must stay a collider on the path once u is prepended
                // (not required of beta, which is no interior node).
                if (front != beta && !arrow_at(u, front)) continue;
                if (!skel_.adjacent(u, gamma)) {
                    if (edges_used[front] < 2) continue;  // need an interior node
                    successor[u] = front;
                    return orient_discriminating(u, beta, gamma, successor);
                }
                if (arrow_at(front, u) && is_parent(u, gamma)) {
                    successor[u] = front;
                    edges_used[u] = edges_used[front] + 1;
                    queue.push_back(u);
                }
            }
        }
        return R4Result::kNothing;
    }

    R4Result orient_discriminating(std::uint32_t theta, std::uint32_t beta, std::uint32_t gamma,
                                   const std::vector<std::int64_t>& successor) {
        const auto* sep = sepsets_.find(theta, gamma);
        if (sep == nullptr) throw std::logic_error("orient_pag: missing sepset in R4");

        // RFCI-style verification of every edge on the path.
        for (std::uint32_t x = theta; x != gamma;) {
            const std::uint32_t y = static_cast<std::uint32_t>(successor[x]);
            if (retest_removes(x, y, *sep)) return R4Result::kRemovedEdge;
            x = y;
        }

        if (std::binary_search(sep->begin(), sep->end(), beta)) {
            pag_.set_mark(gamma, beta, EndpointMark::Tail);
            pag_.set_mark(beta, gamma, EndpointMark::Arrow);
        } else {
            // alpha: the interior node preceding beta on the path.
            std::uint32_t alpha = theta;
            while (static_cast<std::uint32_t>(successor[alpha]) != beta)
                alpha = static_cast<std::uint32_t>(successor[alpha]);
            pag_.set_mark(alpha, beta, EndpointMark::Arrow);
            pag_.set_mark(beta, alpha, EndpointMark::Arrow);
            pag_.set_mark(beta, gamma, EndpointMark::Arrow);
            pag_.set_mark(gamma, beta, EndpointMark::Arrow);
        }
        return R4Result::kOriented;
    }

    bool apply_rules_to_fixpoint() {
        while (true) {
            bool changed = false;
            changed |= rule_r1();
            changed |= rule_r2();
            changed |= rule_r3();
            const R4Result r4 = rule_r4();
            if (r4 == R4Result::kRemovedEdge) return false;
            changed |= (r4 == R4Result::kOriented);
            if (!changed) return true;
        }
    }

    Skeleton& skel_;
    SepsetTable& sepsets_;
    CiTester& tester_;
    const SearchConfig& config_;
    OrientationStats& stats_;
    Pag pag_{0};
};

}  // namespace

Pag orient_pag(Skeleton skeleton, SepsetTable sepsets, CiTester& tester,
               const SearchConfig& config, OrientationStats* stats) {
    config.validate();
    OrientationStats local;
    Orienter orienter(skeleton, sepsets, tester, config, stats ? *stats : local);
    return orienter.run();
}

Pag run_search(CiTester& tester, const SearchConfig& config, SearchDiagnostics* diag) {
    auto [skeleton, sepsets] = learn_skeleton(tester, config);
    OrientationStats stats;
    Pag pag = orient_pag(std::move(skeleton), std::move(sepsets), tester, config, &stats);
    if (diag) {
        diag->ci_tests = tester.test_count();
        diag->clamped_correlations = tester.clamp_count();
        diag->skeleton_edges = pag.num_edges();
        diag->orientation_removals = stats.edges_removed;
        diag->colliders = stats.colliders_oriented;
    }
    return pag;
}

}  // namespace causalcal
