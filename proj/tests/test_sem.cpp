#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "causalcal/sem.hpp"
#include "oracles.hpp"

using namespace causalcal;

namespace {

SimConfig small_config() {
    SimConfig c;
    c.num_nodes = 4;
    c.num_edges = 3;
    c.sample_size = 100;
    c.hidden_fraction = 0.0;
    return c;
}

}  // namespace

TEST_SUITE("sem") {

TEST_CASE("generate_dag produces the requested forward structure") {
    SimConfig c = small_config();
    Rng rng(1);
    const CausalDag dag = generate_dag(c, rng);  // constructor rejects cycles
    CHECK(dag.num_nodes() == 4);
    CHECK(dag.edges().size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const double beta = std::abs(dag.coefficient(k));
        CHECK(beta >= 0.2);
        CHECK(beta <= 1.5);
    }
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(dag.noise_variance(n) >= 1.0);
        CHECK(dag.noise_variance(n) <= 3.0);
    }
}

TEST_CASE("generate_dag rejects infeasible edge counts") {
    SimConfig c = small_config();
    c.num_edges = 7;  // max forward edges on 4 nodes is 6
    Rng rng(1);
    CHECK_THROWS_AS(generate_dag(c, rng), std::invalid_argument);
}

TEST_CASE("parent counts are heavy-tailed at scale") {
    SimConfig c;
    c.num_nodes = 2000;
    c.num_edges = 4000;
    Rng rng(5);
    const CausalDag dag = generate_dag(c, rng);
    std::size_t max_parents = 0;
    for (std::size_t n = 0; n < c.num_nodes; ++n)
        max_parents = std::max(max_parents, dag.parents(n).size());
    // mean is 2; the positional bias should put some nodes far above it
    CHECK(max_parents >= 6);
}

TEST_CASE("coefficient magnitudes average to the interval midpoint with balanced signs") {
    SimConfig c;
    c.num_nodes = 50;
    c.num_edges = 100;
    Rng rng(17);
    double magnitude_sum = 0.0;
    std::size_t positive = 0, total = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const CausalDag dag = generate_dag(c, rng);
        for (std::size_t k = 0; k < dag.edges().size(); ++k) {
            magnitude_sum += std::abs(dag.coefficient(k));
            positive += dag.coefficient(k) > 0.0;
            ++total;
        }
    }
    CHECK(total == 3000);
    CHECK(magnitude_sum / static_cast<double>(total) == doctest::Approx(0.85).epsilon(0.03));
    const double positive_fraction = static_cast<double>(positive) / static_cast<double>(total);
    CHECK(positive_fraction > 0.45);
    CHECK(positive_fraction < 0.55);
}

TEST_CASE("around half the variance comes from the error term") {
    SimConfig c;
    c.num_nodes = 200;
    c.num_edges = 400;
    Rng rng(23);
    const CausalDag dag = generate_dag(c, rng);
    const auto cov = test_oracles::population_covariance(dag);
    std::vector<double> shares;
    for (std::size_t n = 0; n < c.num_nodes; ++n)
        shares.push_back(dag.noise_variance(n) / cov[n * c.num_nodes + n]);
    std::sort(shares.begin(), shares.end());
    const double median = shares[shares.size() / 2];
    CHECK(median > 0.3);
    CHECK(median < 0.7);
}

TEST_CASE("root column is pure noise") {
    const CausalDag dag(2, {{0, 1}}, {0.8}, {2.0, 1.5});
    Rng rng(3);
    const auto cols = sample_dataset(dag, 10000, rng);
    double mean = 0.0, var = 0.0;
    for (double x : cols[0]) mean += x;
    mean /= 10000.0;
    for (double x : cols[0]) var += (x - mean) * (x - mean);
    var /= 10000.0;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("chain variance and correlation match closed form") {
    const double beta = 0.9;
    const CausalDag dag(2, {{0, 1}}, {beta}, {1.8, 1.1});
    Rng rng(31);
    const auto cols = sample_dataset(dag, 10000, rng);

    const double var_a_true = 1.8;
    const double var_b_true = beta * beta * var_a_true + 1.1;
    const double corr_true = beta * std::sqrt(var_a_true) / std::sqrt(var_b_true);

    const double var_b = [&] {
        double m = 0.0, v = 0.0;
        for (double x : cols[1]) m += x;
        m /= 10000.0;
        for (double x : cols[1]) v += (x - m) * (x - m);
        return v / 10000.0;
    }();
    CHECK(std::abs(var_b - var_b_true) / var_b_true < 0.1);
    CHECK(std::abs(test_oracles::pearson(cols[0], cols[1]) - corr_true) < 0.05);
}

TEST_CASE("mask_latents drops exactly the right columns") {
    // 0 -> {2,3}, 1 -> {3}: node 0 is the only confounder
    const CausalDag dag(4, {{0, 2}, {0, 3}, {1, 3}}, {0.5, 0.5, 0.5}, {1.0, 1.0, 1.0, 1.0});
    Rng rng(7);
    auto data = sample_dataset(dag, 50, rng);

    SUBCASE("h = 0 keeps everything") {
        Rng mask_rng(1);
        const Dataset d = mask_latents(dag, std::move(data), 0.0, mask_rng);
        CHECK(d.cols() == 4);
    }
    SUBCASE("only common causes can vanish") {
        Rng mask_rng(1);
        const Dataset d = mask_latents(dag, std::move(data), 0.25, mask_rng);
        CHECK(d.cols() == 3);
        const auto latents = masked_nodes(4, d);
        REQUIRE(latents.size() == 1);
        CHECK(latents[0] == 0);  // node 3 is a collider sink, never selected
    }
    SUBCASE("insufficient confounders is an error that reports the count") {
        Rng mask_rng(1);
        CHECK_THROWS_WITH_AS(mask_latents(dag, std::move(data), 0.5, mask_rng),
                             doctest::Contains("has 1"), std::runtime_error);
    }
}

TEST_CASE("simulation is bit-reproducible under a fixed seed") {
    SimConfig c;
    c.num_nodes = 30;
    c.num_edges = 40;
    c.sample_size = 64;
    c.hidden_fraction = 0.1;
    c.seed = 99;
    const SimulatedInstance a = simulate(c);
    const SimulatedInstance b = simulate(c);
    CHECK(a.latents == b.latents);
    REQUIRE(a.data.cols() == b.data.cols());
    for (std::size_t col = 0; col < a.data.cols(); ++col)
        CHECK(a.data.columns[col] == b.data.columns[col]);
}

TEST_CASE("dataset CSV round-trips exactly") {
    Dataset d;
    d.column_names = {"X0", "X2"};
    d.provenance = {0, 2};
    d.columns = {{1.0, -0.333333333333333314829616256247390992939472198486328125},
                 {2.5e-300, 3.0}};
    std::ostringstream out;
    write_dataset_csv(out, d);
    std::istringstream in(out.str());
    const Dataset back = parse_dataset_csv(in);
    CHECK(back.provenance == d.provenance);
    CHECK(back.columns == d.columns);
}

}  // TEST_SUITE
