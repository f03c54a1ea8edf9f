#include <doctest.h>

#include <algorithm>

#include "causalcal/calibrate.hpp"
#include "causalcal/citest.hpp"
#include "causalcal/search.hpp"
#include "causalcal/sem.hpp"

using namespace causalcal;
using M = EndpointMark;

namespace {

CausalDag make_dag(std::size_t v, std::vector<DagEdge> edges) {
    std::vector<double> coeffs(edges.size(), 1.0);
    std::vector<double> vars(v, 1.0);
    return CausalDag(v, std::move(edges), std::move(coeffs), std::move(vars));
}

// Truth about collider status of unshielded triples in a DAG.
bool is_true_collider(const CausalDag& dag, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    const auto has_edge = [&](std::uint32_t p, std::uint32_t ch) {
        for (std::uint32_t x : dag.children(p))
            if (x == ch) return true;
        return false;
    };
    return has_edge(a, b) && has_edge(c, b);
}

bool dag_adjacent(const CausalDag& dag, std::uint32_t x, std::uint32_t y) {
    for (std::uint32_t c : dag.children(x))
        if (c == y) return true;
    for (std::uint32_t c : dag.children(y))
        if (c == x) return true;
    return false;
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("oracle chain: skeleton, sepset, and all-circle PAG") {
    const CausalDag chain = make_dag(3, {{0, 1}, {1, 2}});
    DSepTester tester(chain);
    auto [skel, sepsets] = learn_skeleton(tester, {});
    CHECK(skel.num_edges() == 2);
    CHECK(skel.adjacent(0, 1));
    CHECK(skel.adjacent(1, 2));
    CHECK_FALSE(skel.adjacent(0, 2));
    REQUIRE(sepsets.find(0, 2) != nullptr);
    CHECK(*sepsets.find(0, 2) == std::vector<std::uint32_t>{1});

    const Pag pag = orient_pag(skel, sepsets, tester, {});
    CHECK(pag.classify(0, 1) == EdgeClass::CircleCircle);
    CHECK(pag.classify(1, 2) == EdgeClass::CircleCircle);
}

TEST_CASE("oracle collider: empty sepset and o-> orientations") {
    const CausalDag collider = make_dag(3, {{0, 2}, {1, 2}});
    DSepTester tester(collider);
    auto [skel, sepsets] = learn_skeleton(tester, {});
    CHECK(skel.num_edges() == 2);
    REQUIRE(sepsets.find(0, 1) != nullptr);
    CHECK(sepsets.find(0, 1)->empty());

    const Pag pag = orient_pag(skel, sepsets, tester, {});
    // X o-> C <-o Z
    CHECK(pag.mark_at(0, 2) == M::Arrow);
    CHECK(pag.mark_at(1, 2) == M::Arrow);
    CHECK(pag.mark_at(2, 0) == M::Circle);
    CHECK(pag.mark_at(2, 1) == M::Circle);
}

TEST_CASE("fully independent oracle gives the empty PAG") {
    const CausalDag empty = make_dag(4, {});
    DSepTester tester(empty);
    auto [skel, sepsets] = learn_skeleton(tester, {});
    CHECK(skel.num_edges() == 0);
    CHECK(sepsets.size() == num_pairs(4));
    for (std::size_t p = 0; p < num_pairs(4); ++p) {
        const auto [i, j] = pair_from_index(p, 4);
        CHECK(sepsets.find(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j))->empty());
    }
}

TEST_CASE("fully shielded confounded triangle stays unoriented") {
    // H -> X, H -> Y (H hidden), X -> W, Y -> W; observed {X, Y, W}.
    // The marginal independence model has no independencies at all, so the
    // oracle PAG is the complete o-o triangle.
    const CausalDag dag = make_dag(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    DSepTester tester(dag, {1, 2, 3});  // observed indices map to originals
    const Pag pag = run_search(tester, {});
    CHECK(pag.num_edges() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            CHECK(pag.classify(i, j) == EdgeClass::CircleCircle);
}

TEST_CASE("hidden confounder flanked by exogenous causes yields a bidirected edge") {
    // A -> X, H -> X, H -> Y, B -> Y with H hidden; observed {A, X, Y, B}.
    // Colliders at X (from triple A-X-Y) and at Y (from triple X-Y-B) put
    // arrowheads on both ends of X-Y.
    const CausalDag dag = make_dag(5, {{0, 2}, {1, 2}, {1, 3}, {4, 3}});
    DSepTester tester(dag, {0, 2, 3, 4});  // A=0, X=1, Y=2, B=3 in observed space
    const Pag pag = run_search(tester, {});
    CHECK(pag.classify(1, 2) == EdgeClass::Bidirected);
    CHECK(pag.classify(0, 1) == EdgeClass::ACircleArrowB);  // A o-> X
    CHECK(pag.classify(2, 3) == EdgeClass::BCircleArrowA);  // Y <-o B
    CHECK_FALSE(pag.has_edge(0, 3));
    CHECK_FALSE(pag.has_edge(0, 2));
    CHECK_FALSE(pag.has_edge(1, 3));
}

TEST_CASE("pure hidden confounder pair comes out bidirected via collider context") {
    // Two confounded pairs feeding a collider: H->A, H->B, A->C, B->C plus
    // an extra parent D->A making the A-end orientable.
    // Structures like this let R0+rules place arrows on both ends of A-B...
    // here we check the simplest identifiable case:
    // H -> A, H -> B, A -> C <- B with C also child of D, D independent.
    const CausalDag dag = make_dag(5, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {4, 3}});
    DSepTester tester(dag, {1, 2, 3, 4});  // hide node 0
    const Pag pag = run_search(tester, {});
    // observed: A=0, B=1, C=2, D=3 (in observed indexing)
    // colliders at C: A *-> C <-* B and A *-> C <-* D and B *-> C <-* D
    CHECK(pag.mark_at(0, 2) == M::Arrow);
    CHECK(pag.mark_at(1, 2) == M::Arrow);
    CHECK(pag.mark_at(3, 2) == M::Arrow);
}

TEST_CASE("search is deterministic") {
    SimConfig c;
    c.num_nodes = 12;
    c.num_edges = 16;
    Rng gen(42);
    const CausalDag dag = generate_dag(c, gen);
    DSepTester t1(dag), t2(dag);
    CHECK(run_search(t1, {}) == run_search(t2, {}));
}

TEST_CASE("oracle skeleton is invariant under node relabeling") {
    Rng rng(777);
    for (int trial = 0; trial < 30; ++trial) {
        SimConfig c;
        c.num_nodes = 5;
        c.num_edges = rng.below(num_pairs(5) + 1);
        Rng gen(rng.next_u64());
        const CausalDag dag = generate_dag(c, gen);

        std::uint32_t perm[5] = {0, 1, 2, 3, 4};
        Rng shuffle_rng(rng.next_u64());
        shuffle_rng.shuffle(perm, 5);
        std::vector<DagEdge> relabeled;
        std::vector<double> coeffs;
        for (std::size_t k = 0; k < dag.edges().size(); ++k) {
            relabeled.push_back({perm[dag.edges()[k].parent], perm[dag.edges()[k].child]});
            coeffs.push_back(dag.coefficient(k));
        }
        std::vector<double> vars(5);
        for (std::size_t n = 0; n < 5; ++n) vars[perm[n]] = dag.noise_variance(n);
        const CausalDag mapped(5, std::move(relabeled), std::move(coeffs), std::move(vars));

        DSepTester t1(dag), t2(mapped);
        const Pag p1 = run_search(t1, {});
        const Pag p2 = run_search(t2, {});
        for (std::uint32_t i = 0; i < 5; ++i)
            for (std::uint32_t j = i + 1; j < 5; ++j)
                CHECK(p1.has_edge(i, j) == p2.has_edge(perm[i], perm[j]));
    }
}

TEST_CASE("max_conditioning_size limits the adjacency search") {
    const CausalDag chain = make_dag(3, {{0, 1}, {1, 2}});
    DSepTester tester(chain);
    SearchConfig config;
    config.max_conditioning_size = 0;
    auto [skel, sepsets] = learn_skeleton(tester, config);
    // 0 and 2 are only separable given {1}; level 0 cannot remove the edge
    CHECK(skel.adjacent(0, 2));
}

TEST_CASE("oracle soundness on latent-free DAGs up to 5 nodes") {
    Rng rng(2024);
    int cases = 0;
    while (cases < 220) {
        SimConfig c;
        c.num_nodes = 3 + rng.below(3);  // 3..5
        c.num_edges = rng.below(num_pairs(c.num_nodes) + 1);
        Rng gen(rng.next_u64());
        const CausalDag dag = generate_dag(c, gen);
        ++cases;

        DSepTester tester(dag);
        const Pag pag = run_search(tester, {});

        // exact skeleton match
        for (std::uint32_t i = 0; i < c.num_nodes; ++i)
            for (std::uint32_t j = i + 1; j < c.num_nodes; ++j)
                CHECK(pag.has_edge(i, j) == dag_adjacent(dag, i, j));

        // collider orientations: every unshielded true collider oriented,
        // no false ones; arrows never point at an ancestor of the far end
        for (std::uint32_t b = 0; b < c.num_nodes; ++b) {
            for (std::uint32_t a = 0; a < c.num_nodes; ++a) {
                for (std::uint32_t cc = a + 1; cc < c.num_nodes; ++cc) {
                    if (a == b || cc == b) continue;
                    if (!pag.has_edge(a, b) || !pag.has_edge(cc, b)) continue;
                    if (pag.has_edge(a, cc)) continue;
                    const bool oriented =
                        pag.mark_at(a, b) == M::Arrow && pag.mark_at(cc, b) == M::Arrow;
                    CHECK(oriented == is_true_collider(dag, a, b, cc));
                }
            }
        }

        // mark soundness w.r.t. ancestral relations
        for (const auto& [i, j] : pag.edge_list()) {
            const auto ancestor_of = [&](std::uint32_t x, std::uint32_t y) {
                // is x an ancestor of y?
                std::vector<std::uint32_t> stack{x};
                std::vector<bool> seen(c.num_nodes, false);
                while (!stack.empty()) {
                    const auto cur = stack.back();
                    stack.pop_back();
                    if (cur == y) return true;
                    if (seen[cur]) continue;
                    seen[cur] = true;
                    for (auto ch : dag.children(cur)) stack.push_back(ch);
                }
                return false;
            };
            if (pag.mark_at(i, j) == M::Arrow) CHECK_FALSE(ancestor_of(j, i));
            if (pag.mark_at(i, j) == M::Tail) CHECK(ancestor_of(j, i));
            if (pag.mark_at(j, i) == M::Arrow) CHECK_FALSE(ancestor_of(i, j));
            if (pag.mark_at(j, i) == M::Tail) CHECK(ancestor_of(i, j));
        }
    }
}

TEST_CASE("output marks are always one of the six present classes") {
    Rng rng(31337);
    for (int trial = 0; trial < 40; ++trial) {
        SimConfig c;
        c.num_nodes = 8;
        c.num_edges = 3 + rng.below(12);
        Rng gen(rng.next_u64());
        const CausalDag dag = generate_dag(c, gen);
        // hide a random node with >= 2 children if one exists
        std::vector<std::uint32_t> observed;
        const auto confs = confounder_nodes(dag);
        const std::uint32_t hidden =
            confs.empty() ? 255 : confs[rng.below(confs.size())];
        for (std::uint32_t v = 0; v < 8; ++v)
            if (v != hidden) observed.push_back(v);

        DSepTester tester(dag, observed);
        const Pag pag = run_search(tester, {});
        for (std::size_t i = 0; i < pag.num_nodes(); ++i)
            for (std::size_t j = i + 1; j < pag.num_nodes(); ++j)
                CHECK_NOTHROW(pag.classify(i, j));  // classify_edge rejects illegal pairs
    }
}

namespace {

// Tester stub that never separates anything; lets hand-built skeletons and
// sepsets drive the orientation machinery directly.
class AlwaysDependent final : public CiTester {
public:
    explicit AlwaysDependent(std::size_t v) : v_(v) {}
    std::size_t num_vars() const override { return v_; }
    bool is_independent(std::uint32_t, std::uint32_t, std::span<const std::uint32_t>) override {
        return false;
    }
    std::uint64_t test_count() const override { return 0; }

private:
    std::size_t v_;
};

// Skeleton 0-1, 1-2, 1-3, 2-3 with 0-2 and 0-3 removed: the discriminating
// path <0, 1, 2, 3> for node 2 (collider phase orients 0 *-> 1 <-* 2, R1
// then makes 1 a parent of 3).
Skeleton r4_skeleton() {
    Skeleton skel(4, true);
    skel.remove_edge(0, 2);
    skel.remove_edge(0, 3);
    return skel;
}

}  // namespace

TEST_CASE("discriminating path rule: beta in sepset orients beta -> gamma") {
    SepsetTable sepsets;
    sepsets.set(0, 2, {});
    sepsets.set(0, 3, {1, 2});
    AlwaysDependent tester(4);
    const Pag pag = orient_pag(r4_skeleton(), sepsets, tester, {});
    CHECK(pag.classify(2, 3) == EdgeClass::AtoB);           // 2 --> 3
    CHECK(pag.classify(1, 3) == EdgeClass::AtoB);           // R1: 1 --> 3
    CHECK(pag.classify(0, 1) == EdgeClass::ACircleArrowB);  // 0 o-> 1
    CHECK(pag.classify(1, 2) == EdgeClass::BCircleArrowA);  // 2 o-> 1
}

TEST_CASE("discriminating path rule: beta outside sepset orients the bidirected triple") {
    SepsetTable sepsets;
    sepsets.set(0, 2, {});
    sepsets.set(0, 3, {1});
    AlwaysDependent tester(4);
    const Pag pag = orient_pag(r4_skeleton(), sepsets, tester, {});
    CHECK(pag.classify(1, 2) == EdgeClass::Bidirected);
    CHECK(pag.classify(2, 3) == EdgeClass::Bidirected);
}

TEST_CASE("rfci collider re-tests remove spurious edges and restart") {
    // (0,1,2) is an unshielded triple whose re-test finds 0 independent of 1
    // given sepset(0, 2); the edge 0-1 must go and the sepsets must record it.
    class DropPair final : public CiTester {
    public:
        std::size_t num_vars() const override { return 3; }
        bool is_independent(std::uint32_t i, std::uint32_t j,
                            std::span<const std::uint32_t>) override {
            return (std::min(i, j) == 0 && std::max(i, j) == 1);
        }
        std::uint64_t test_count() const override { return 0; }
    };

    Skeleton skel(3, true);
    skel.remove_edge(0, 2);
    SepsetTable sepsets;
    sepsets.set(0, 2, {});
    DropPair tester;
    OrientationStats stats;
    const Pag pag = orient_pag(std::move(skel), sepsets, tester, {}, &stats);
    CHECK(stats.edges_removed == 1);
    CHECK_FALSE(pag.has_edge(0, 1));
    CHECK(pag.has_edge(1, 2));
}

}  // TEST_SUITE
