#pragma once

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "causalcal/citest.hpp"
#include "causalcal/graph.hpp"

namespace causalcal {

struct SearchConfig {
    double alpha = 0.001;
    // Largest conditioning-set size tried by the adjacency search.
    std::size_t max_conditioning_size = std::numeric_limits<std::size_t>::max();
    // Edge-count bound on discriminating paths (R4).
    std::size_t max_path_length = std::numeric_limits<std::size_t>::max();

    void validate() const;
};

// Undirected adjacency structure; presence matrix plus sorted neighbor lists.
class Skeleton {
public:
    Skeleton(std::size_t num_nodes, bool complete);

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return num_edges_; }
    bool adjacent(std::size_t i, std::size_t j) const { return adj_[i * num_nodes_ + j] != 0; }
    const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
    void remove_edge(std::size_t i, std::size_t j);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

private:
    std::size_t num_nodes_;
    std::size_t num_edges_;
    std::vector<std::uint8_t> adj_;
    std::vector<std::vector<std::uint32_t>> neighbors_;
};

// Separating sets for removed pairs. An entry exists iff the pair is absent
// from the skeleton (complete-graph start guarantees coverage).
class SepsetTable {
public:
    void set(std::uint32_t i, std::uint32_t j, std::vector<std::uint32_t> sepset);
    const std::vector<std::uint32_t>* find(std::uint32_t i, std::uint32_t j) const;
    std::size_t size() const { return table_.size(); }

private:
    static std::uint64_t key(std::uint32_t i, std::uint32_t j);
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> table_;
};

struct SkeletonResult {
    Skeleton skeleton;
    SepsetTable sepsets;
};

// PC-style adjacency search: from the complete graph, for conditioning-set
// sizes l = 0, 1, 2, ... remove edge (i, j) as soon as some S of size l drawn
// from adj(i)\{j} or adj(j)\{i} tests independent, recording S. Iteration
// order is fixed (nodes ascending, neighbors ascending, subsets lexicographic)
// so identical inputs give identical results.
SkeletonResult learn_skeleton(CiTester& tester, const SearchConfig& config);

struct OrientationStats {
    std::uint64_t triples_checked = 0;
    std::uint64_t edges_removed = 0;  // removals by the RFCI re-tests
    std::uint64_t colliders_oriented = 0;
};

// Orientation phase. Endpoints start as circles; unshielded triples with
// b not in sepset(a, c) are re-tested RFCI-style (either re-test finding
// independence removes that edge and triple collection restarts from
// scratch), surviving triples become colliders, then rules R1-R4 run to a
// fixed point. R4's discriminating-path orientations re-test each path edge
// the same way. Consumes the skeleton and sepsets, which it may shrink.
Pag orient_pag(Skeleton skeleton, SepsetTable sepsets, CiTester& tester,
               const SearchConfig& config, OrientationStats* stats = nullptr);

struct SearchDiagnostics {
    std::uint64_t ci_tests = 0;
    std::uint64_t clamped_correlations = 0;
    std::uint64_t skeleton_edges = 0;
    std::uint64_t orientation_removals = 0;
    std::uint64_t colliders = 0;
};

// learn_skeleton + orient_pag.
Pag run_search(CiTester& tester, const SearchConfig& config, SearchDiagnostics* diag = nullptr);

}  // namespace causalcal
