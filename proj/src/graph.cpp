#include "causalcal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "causalcal/textio.hpp"

namespace causalcal {

EdgeClass classify_edge(EndpointMark mark_at_a, EndpointMark mark_at_b) {
    using M = EndpointMark;
    if (mark_at_a == M::None && mark_at_b == M::None) return EdgeClass::NoEdge;
    if (mark_at_a == M::Tail && mark_at_b == M::Arrow) return EdgeClass::AtoB;
    if (mark_at_a == M::Arrow && mark_at_b == M::Tail) return EdgeClass::BtoA;
    if (mark_at_a == M::Circle && mark_at_b == M::Arrow) return EdgeClass::ACircleArrowB;
    if (mark_at_a == M::Arrow && mark_at_b == M::Circle) return EdgeClass::BCircleArrowA;
    if (mark_at_a == M::Circle && mark_at_b == M::Circle) return EdgeClass::CircleCircle;
    if (mark_at_a == M::Arrow && mark_at_b == M::Arrow) return EdgeClass::Bidirected;
    throw std::logic_error("classify_edge: illegal mark pair (" +
                           std::to_string(static_cast<int>(mark_at_a)) + ", " +
                           std::to_string(static_cast<int>(mark_at_b)) +
                           "); orientation rules must not produce tail-tail or tail-circle");
}

EdgeClass swap_edge_class(EdgeClass c) {
    switch (c) {
        case EdgeClass::AtoB: return EdgeClass::BtoA;
        case EdgeClass::BtoA: return EdgeClass::AtoB;
        case EdgeClass::ACircleArrowB: return EdgeClass::BCircleArrowA;
        case EdgeClass::BCircleArrowA: return EdgeClass::ACircleArrowB;
        default: return c;
    }
}

std::size_t num_pairs(std::size_t num_nodes) { return num_nodes * (num_nodes - 1) / 2; }

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t num_nodes) {
    if (i == j) throw std::invalid_argument("pair_index: i == j");
    if (i >= num_nodes || j >= num_nodes)
        throw std::invalid_argument("pair_index: node out of range");
    if (i > j) std::swap(i, j);
    // Row-major enumeration of the strict upper triangle.
    return i * num_nodes - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<std::size_t, std::size_t> pair_from_index(std::size_t index, std::size_t num_nodes) {
    if (index >= num_pairs(num_nodes))
        throw std::invalid_argument("pair_from_index: index out of range");
    std::size_t i = 0;
    std::size_t row = num_nodes - 1;
    while (index >= row) {
        index -= row;
        --row;
        ++i;
    }
    return {i, i + 1 + index};
}

CausalDag::CausalDag(std::size_t num_nodes, std::vector<DagEdge> edges,
                     std::vector<double> coefficients, std::vector<double> noise_variances)
    : num_nodes_(num_nodes),
      edges_(std::move(edges)),
      coefficients_(std::move(coefficients)),
      noise_variances_(std::move(noise_variances)) {
    if (coefficients_.size() != edges_.size())
        throw std::invalid_argument("CausalDag: one coefficient per edge required");
    if (noise_variances_.size() != num_nodes_)
        throw std::invalid_argument("CausalDag: one noise variance per node required");
    for (double v : noise_variances_)
        if (!(v > 0.0)) throw std::invalid_argument("CausalDag: noise variances must be > 0");

    parents_.resize(num_nodes_);
    children_.resize(num_nodes_);
    parent_coeffs_.resize(num_nodes_);
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const auto [p, c] = edges_[k];
        if (p >= num_nodes_ || c >= num_nodes_)
            throw std::invalid_argument("CausalDag: edge node out of range");
        if (p == c) throw std::invalid_argument("CausalDag: self-loop");
        if (!seen.insert(static_cast<std::uint64_t>(p) << 32 | c).second)
            throw std::invalid_argument("CausalDag: duplicate edge");
        parents_[c].push_back(p);
        parent_coeffs_[c].push_back(coefficients_[k]);
        children_[p].push_back(c);
    }

    // Kahn's algorithm; doubles as the acyclicity check.
    std::vector<std::size_t> in_degree(num_nodes_);
    for (std::size_t v = 0; v < num_nodes_; ++v) in_degree[v] = parents_[v].size();
    std::vector<std::uint32_t> frontier;
    for (std::size_t v = 0; v < num_nodes_; ++v)
        if (in_degree[v] == 0) frontier.push_back(static_cast<std::uint32_t>(v));
    topo_order_.reserve(num_nodes_);
    for (std::size_t head = 0; head < frontier.size(); ++head) {
        const std::uint32_t v = frontier[head];
        topo_order_.push_back(v);
        for (std::uint32_t c : children_[v])
            if (--in_degree[c] == 0) frontier.push_back(c);
    }
    if (topo_order_.size() != num_nodes_) throw std::invalid_argument("CausalDag: graph has a cycle");
}

Pag::Pag(std::size_t num_nodes)
    : num_nodes_(num_nodes), marks_(num_nodes * num_nodes, EndpointMark::None) {}

void Pag::set_edge(std::size_t i, std::size_t j, EndpointMark at_i, EndpointMark at_j) {
    if (i == j) throw std::invalid_argument("Pag::set_edge: self-loop");
    if (at_i == EndpointMark::None || at_j == EndpointMark::None)
        throw std::invalid_argument("Pag::set_edge: marks must be non-None");
    if (!has_edge(i, j)) ++num_edges_;
    marks_[j * num_nodes_ + i] = at_i;
    marks_[i * num_nodes_ + j] = at_j;
}

void Pag::set_mark(std::size_t i, std::size_t j, EndpointMark at_j) {
    if (!has_edge(i, j)) throw std::invalid_argument("Pag::set_mark: edge absent");
    if (at_j == EndpointMark::None)
        throw std::invalid_argument("Pag::set_mark: use remove_edge to delete");
    marks_[i * num_nodes_ + j] = at_j;
}

void Pag::remove_edge(std::size_t i, std::size_t j) {
    if (has_edge(i, j)) --num_edges_;
    marks_[i * num_nodes_ + j] = EndpointMark::None;
    marks_[j * num_nodes_ + i] = EndpointMark::None;
}

EdgeClass Pag::classify(std::size_t i, std::size_t j) const {
    const std::size_t a = std::min(i, j);
    const std::size_t b = std::max(i, j);
    return classify_edge(mark_at(b, a), mark_at(a, b));
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Pag::edge_list() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    out.reserve(num_edges_);
    for (std::size_t i = 0; i < num_nodes_; ++i)
        for (std::size_t j = i + 1; j < num_nodes_; ++j)
            if (has_edge(i, j))
                out.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    return out;
}

namespace {

char left_mark_char(EndpointMark m) {
    switch (m) {
        case EndpointMark::Tail: return '-';
        case EndpointMark::Arrow: return '<';
        case EndpointMark::Circle: return 'o';
        default: throw std::logic_error("left_mark_char: absent mark");
    }
}

char right_mark_char(EndpointMark m) {
    switch (m) {
        case EndpointMark::Tail: return '-';
        case EndpointMark::Arrow: return '>';
        case EndpointMark::Circle: return 'o';
        default: throw std::logic_error("right_mark_char: absent mark");
    }
}

EndpointMark left_mark_from(char c) {
    switch (c) {
        case '-': return EndpointMark::Tail;
        case '<': return EndpointMark::Arrow;
        case 'o': return EndpointMark::Circle;
        default: throw std::runtime_error(std::string("parse_pag: bad left mark '") + c + "'");
    }
}

EndpointMark right_mark_from(char c) {
    switch (c) {
        case '-': return EndpointMark::Tail;
        case '>': return EndpointMark::Arrow;
        case 'o': return EndpointMark::Circle;
        default: throw std::runtime_error(std::string("parse_pag: bad right mark '") + c + "'");
    }
}

}  // namespace

void write_pag(std::ostream& out, const Pag& pag) {
    for (const auto& [i, j] : pag.edge_list()) {
        out << i << ' ' << left_mark_char(pag.mark_at(j, i)) << '-'
            << right_mark_char(pag.mark_at(i, j)) << ' ' << j << '\n';
    }
}

std::string pag_to_string(const Pag& pag) {
    std::ostringstream oss;
    write_pag(oss, pag);
    return oss.str();
}

Pag parse_pag(std::istream& in, std::size_t num_nodes) {
    Pag pag(num_nodes);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t i = 0, j = 0;
        std::string edge;
        if (!(ls >> i >> edge >> j) || edge.size() != 3 || edge[1] != '-')
            throw std::runtime_error("parse_pag: malformed line: " + line);
        if (i >= num_nodes || j >= num_nodes)
            throw std::runtime_error("parse_pag: node out of range: " + line);
        pag.set_edge(i, j, left_mark_from(edge[0]), right_mark_from(edge[2]));
    }
    return pag;
}

void write_dag(std::ostream& out, const CausalDag& dag) {
    out << "nodes " << dag.num_nodes() << '\n';
    std::vector<std::size_t> order(dag.edges().size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = dag.edges()[a];
        const auto& eb = dag.edges()[b];
        return std::tie(ea.parent, ea.child) < std::tie(eb.parent, eb.child);
    });
    for (std::size_t k : order) {
        const auto& e = dag.edges()[k];
        out << e.parent << " --> " << e.child << ' ' << format_double(dag.coefficient(k)) << '\n';
    }
    for (std::size_t v = 0; v < dag.num_nodes(); ++v)
        out << "noise " << v << ' ' << format_double(dag.noise_variance(v)) << '\n';
}

CausalDag parse_dag(std::istream& in) {
    std::string tok;
    std::size_t num_nodes = 0;
    if (!(in >> tok >> num_nodes) || tok != "nodes")
        throw std::runtime_error("parse_dag: expected 'nodes <count>' header");
    std::vector<DagEdge> edges;
    std::vector<double> coeffs;
    std::vector<double> variances(num_nodes, 0.0);
    std::string first;
    while (in >> first) {
        if (first == "noise") {
            std::size_t v;
            std::string val;
            if (!(in >> v >> val) || v >= num_nodes)
                throw std::runtime_error("parse_dag: malformed noise line");
            variances[v] = parse_double(val);
        } else {
            std::string arrow, val;
            std::uint32_t c;
            if (!(in >> arrow >> c >> val) || arrow != "-->")
                throw std::runtime_error("parse_dag: malformed edge line");
            edges.push_back({static_cast<std::uint32_t>(std::stoul(first)), c});
            coeffs.push_back(parse_double(val));
        }
    }
    return CausalDag(num_nodes, std::move(edges), std::move(coeffs), std::move(variances));
}

}  // namespace causalcal
