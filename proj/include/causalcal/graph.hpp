#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace causalcal {

// Mark at one end of a PAG edge. None at one end implies None at the other
// (edges are absent or present at both ends).
enum class EndpointMark : std::uint8_t { None = 0, Tail, Arrow, Circle };

// The seven mutually exclusive relations a canonical pair (A,B), A < B, can
// have. Indices are load-bearing: probability vectors are ordered this way.
enum class EdgeClass : std::uint8_t {
    NoEdge = 0,        // A ... B
    AtoB = 1,          // A --> B
    BtoA = 2,          // A <-- B
    ACircleArrowB = 3, // A o-> B
    BCircleArrowA = 4, // A <-o B
    CircleCircle = 5,  // A o-o B
    Bidirected = 6,    // A <-> B
};

inline constexpr int kNumEdgeClasses = 7;

// Classifies an endpoint-mark pair into one of the seven classes. Tail-Tail
// and Tail-Circle cannot arise without selection bias; seeing one means an
// orientation rule is buggy, so they throw rather than map silently.
EdgeClass classify_edge(EndpointMark mark_at_a, EndpointMark mark_at_b);

// Swaps the roles of A and B in a class label (1<->2, 3<->4; others fixed).
EdgeClass swap_edge_class(EdgeClass c);

// Bijection between unordered pairs {i,j} of [0, num_nodes) and
// [0, num_nodes*(num_nodes-1)/2). Symmetric in i and j.
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t num_nodes);
std::pair<std::size_t, std::size_t> pair_from_index(std::size_t index, std::size_t num_nodes);
std::size_t num_pairs(std::size_t num_nodes);

struct DagEdge {
    std::uint32_t parent;
    std::uint32_t child;
};

// Ground-truth DAG with linear-Gaussian SEM parameters. Immutable after
// construction; the constructor validates acyclicity, rejects self-loops and
// duplicate edges, and requires one positive noise variance per node.
class CausalDag {
public:
    CausalDag(std::size_t num_nodes, std::vector<DagEdge> edges,
              std::vector<double> coefficients, std::vector<double> noise_variances);

    std::size_t num_nodes() const { return num_nodes_; }
    const std::vector<DagEdge>& edges() const { return edges_; }
    double coefficient(std::size_t edge_idx) const { return coefficients_[edge_idx]; }
    double noise_variance(std::size_t node) const { return noise_variances_[node]; }

    const std::vector<std::uint32_t>& parents(std::size_t node) const { return parents_[node]; }
    const std::vector<std::uint32_t>& children(std::size_t node) const { return children_[node]; }
    // Parallel to parents(node): coefficient of the (parent -> node) edge.
    const std::vector<double>& parent_coefficients(std::size_t node) const {
        return parent_coeffs_[node];
    }
    // Node indices ordered so parents precede children.
    const std::vector<std::uint32_t>& topological_order() const { return topo_order_; }

private:
    std::size_t num_nodes_;
    std::vector<DagEdge> edges_;
    std::vector<double> coefficients_;
    std::vector<double> noise_variances_;
    std::vector<std::vector<std::uint32_t>> parents_;
    std::vector<std::vector<std::uint32_t>> children_;
    std::vector<std::vector<double>> parent_coeffs_;
    std::vector<std::uint32_t> topo_order_;
};

// Endpoint-mark matrix over node pairs. mark_at(i, j) is the mark at j's end
// of the i-j edge. Presence is symmetric by construction: edges are added and
// removed at both ends together. Single-writer during construction, freely
// shareable once built.
class Pag {
public:
    explicit Pag(std::size_t num_nodes);

    std::size_t num_nodes() const { return num_nodes_; }

    EndpointMark mark_at(std::size_t i, std::size_t j) const {
        return marks_[i * num_nodes_ + j];
    }
    bool has_edge(std::size_t i, std::size_t j) const {
        return mark_at(i, j) != EndpointMark::None;
    }

    void set_edge(std::size_t i, std::size_t j, EndpointMark at_i, EndpointMark at_j);
    // Sharpens the mark at j's end of an existing edge.
    void set_mark(std::size_t i, std::size_t j, EndpointMark at_j);
    void remove_edge(std::size_t i, std::size_t j);

    // Class of the canonical pair (min(i,j), max(i,j)).
    EdgeClass classify(std::size_t i, std::size_t j) const;

    // Present edges as canonical (i < j) pairs, sorted.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

    std::size_t num_edges() const { return num_edges_; }

    bool operator==(const Pag& other) const = default;

private:
    std::size_t num_nodes_;
    std::size_t num_edges_ = 0;
    std::vector<EndpointMark> marks_;
};

// Text serialization. PAGs: one line per present edge, `i <mark-mark> j`
// with i < j, sorted, marks rendered as {-, o, <, >}, e.g. `3 o-> 17`.
// DAGs: a `nodes` header, `p --> c <beta>` edge lines sorted by (p, c), then
// `noise <i> <variance>` lines. Doubles use shortest round-trip decimals.
void write_pag(std::ostream& out, const Pag& pag);
std::string pag_to_string(const Pag& pag);
Pag parse_pag(std::istream& in, std::size_t num_nodes);

void write_dag(std::ostream& out, const CausalDag& dag);
CausalDag parse_dag(std::istream& in);

}  // namespace causalcal
