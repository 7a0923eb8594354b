#pragma once

// Random inputs shared by the unit tests and the acceptance runner.

#include <random>
#include <string>
#include <vector>

#include "gowergraph/network.hpp"
#include "gowergraph/similarity.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace gowergraph;

struct RandomMixed {
    MixedFrame<double> frame;
    GowerWeights<double> weights;
    oracle::MixedRows rows;
};

/// n rows, p numeric and q categorical features, nonnegative weights with at
/// least one positive. Some numeric columns are constant and some weights zero
/// so the degenerate branches get exercised.
inline RandomMixed random_mixed(std::mt19937_64& rng, Index n, Index p, Index q) {
    std::uniform_real_distribution<double> unit(0, 1);
    std::normal_distribution<double> gauss(0, 3);
    std::uniform_int_distribution<int> levels(1, 4);
    RandomMixed out;
    out.frame.numeric.resize(n, p);
    out.frame.categorical.resize(n, q);
    out.rows.numeric.assign(static_cast<std::size_t>(n), {});
    out.rows.labels.assign(static_cast<std::size_t>(n), {});
    for (Index f = 0; f < p; ++f) {
        const bool constant = unit(rng) < 0.1;
        const double c = gauss(rng);
        for (Index i = 0; i < n; ++i) out.frame.numeric(i, f) = constant ? c : gauss(rng);
    }
    for (Index f = 0; f < q; ++f) {
        std::uniform_int_distribution<int> pick(0, levels(rng) - 1);
        for (Index i = 0; i < n; ++i) out.frame.categorical(i, f) = pick(rng);
    }
    for (Index i = 0; i < n; ++i) {
        for (Index f = 0; f < p; ++f) out.rows.numeric[static_cast<std::size_t>(i)].push_back(out.frame.numeric(i, f));
        for (Index f = 0; f < q; ++f) {
            out.rows.labels[static_cast<std::size_t>(i)].push_back("L" + std::to_string(out.frame.categorical(i, f)));
        }
    }
    auto weight = [&] { return unit(rng) < 0.15 ? 0.0 : unit(rng) * 5; };
    out.weights.numeric.resize(p);
    out.weights.categorical.resize(q);
    for (Index f = 0; f < p; ++f) out.weights.numeric[f] = weight();
    for (Index f = 0; f < q; ++f) out.weights.categorical[f] = weight();
    if (!(out.weights.total() > 0)) {
        (p > 0 ? out.weights.numeric[0] : out.weights.categorical[0]) = 1.0;
    }
    out.rows.numeric_weights.assign(out.weights.numeric.data(), out.weights.numeric.data() + p);
    out.rows.categorical_weights.assign(out.weights.categorical.data(), out.weights.categorical.data() + q);
    return out;
}

/// Symmetric similarities in [0, 1], with repeated values to exercise ties.
inline SimilarityMatrix<double> random_similarity(std::mt19937_64& rng, Index n, bool coarse = false) {
    std::uniform_real_distribution<double> unit(0, 1);
    std::uniform_int_distribution<int> grid(0, 4);
    MatrixXd s = MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) s(i, j) = s(j, i) = coarse ? grid(rng) / 4.0 : unit(rng);
    }
    return SimilarityMatrix<double>(std::move(s));
}

inline std::vector<std::vector<double>> to_nested(const MatrixXd& m) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(m(i, j));
    }
    return out;
}

inline SimilarityGraph random_graph(std::mt19937_64& rng, Index n, double p) {
    std::bernoulli_distribution edge(p);
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (edge(rng)) edges.push_back({i, j, 1.0});
        }
    }
    return SimilarityGraph(n, std::move(edges));
}

inline std::vector<std::vector<int>> adjacency(const SimilarityGraph& g) {
    std::vector<std::vector<int>> a(static_cast<std::size_t>(g.n_nodes()),
                                    std::vector<int>(static_cast<std::size_t>(g.n_nodes()), 0));
    for (const auto& e : g.edges()) {
        a[static_cast<std::size_t>(e.u)][static_cast<std::size_t>(e.v)] = 1;
        a[static_cast<std::size_t>(e.v)][static_cast<std::size_t>(e.u)] = 1;
    }
    return a;
}

/// Two 4-cliques {0..3} and {4..7} joined by the bridge 3-4.
inline SimilarityGraph bridged_cliques() {
    std::vector<Edge> edges;
    for (Index base : {Index{0}, Index{4}}) {
        for (Index i = 0; i < 4; ++i) {
            for (Index j = i + 1; j < 4; ++j) edges.push_back({base + i, base + j, 1.0});
        }
    }
    edges.push_back({3, 4, 1.0});
    return SimilarityGraph(8, std::move(edges));
}

}  // namespace fixture
