#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gowergraph/core.hpp"
#include "gowergraph/similarity.hpp"

namespace gowergraph {

struct Edge {
    Index u = 0;
    Index v = 0;
    double similarity = 0;
};

/// Undirected simple graph on nodes 0..n-1. Edges are stored with u < v,
/// sorted lexicographically.
class SimilarityGraph {
public:
    SimilarityGraph() = default;
    SimilarityGraph(Index n_nodes, std::vector<Edge> edges);

    Index n_nodes() const { return static_cast<Index>(adjacency_.size()); }
    Index n_edges() const { return static_cast<Index>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Index>& neighbors(Index i) const { return adjacency_[static_cast<std::size_t>(i)]; }
    Index degree(Index i) const { return static_cast<Index>(neighbors(i).size()); }
    Index max_degree() const;
    bool has_edge(Index a, Index b) const;

private:
    std::vector<Edge> edges_;
    std::vector<std::vector<Index>> adjacency_;
};

/// Node -> community label, dense from 1.
class Partition {
public:
    Partition() = default;
    /// Relabels arbitrary labels densely from 1 in order of first appearance.
    explicit Partition(const std::vector<int>& labels);

    Index size() const { return static_cast<Index>(assignment_.size()); }
    int operator[](Index node) const { return assignment_[static_cast<std::size_t>(node)]; }
    const std::vector<int>& assignment() const { return assignment_; }
    int n_communities() const { return n_communities_; }
    std::map<int, std::vector<Index>> communities() const;

private:
    std::vector<int> assignment_;
    int n_communities_ = 0;
};

/// The K nodes j != i with the largest S(i, j); equal similarities rank the
/// lower index first.
template <typename Scalar>
std::vector<Index> top_k_neighbors(const SimilarityMatrix<Scalar>& S, Index i, Index K) {
    const Index n = S.size();
    if (K < 1 || K > n - 1) {
        throw Error(Errc::k_out_of_range, "K = " + std::to_string(K) + " outside [1, " + std::to_string(n - 1) + "]");
    }
    std::vector<Index> candidates;
    candidates.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
        if (j != i) candidates.push_back(j);
    }
    auto before = [&](Index a, Index b) { return S(i, a) > S(i, b) || (S(i, a) == S(i, b) && a < b); };
    std::partial_sort(candidates.begin(), candidates.begin() + K, candidates.end(), before);
    candidates.resize(static_cast<std::size_t>(K));
    return candidates;
}

/// Edge {i, j} iff each is among the other's top-K neighbors.
template <typename Scalar>
SimilarityGraph mutual_knn(const SimilarityMatrix<Scalar>& S, Index K, int threads = 1) {
    const Index n = S.size();
    if (K < 1 || K > n - 1) {
        throw Error(Errc::k_out_of_range, "K = " + std::to_string(K) + " outside [1, " + std::to_string(n - 1) + "]");
    }
    std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
    parallel_for(n, threads, [&](Index i) {
        auto list = top_k_neighbors(S, i, K);
        std::sort(list.begin(), list.end());
        lists[static_cast<std::size_t>(i)] = std::move(list);
    });
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i) {
        for (Index j : lists[static_cast<std::size_t>(i)]) {
            if (j > i && std::binary_search(lists[static_cast<std::size_t>(j)].begin(),
                                            lists[static_cast<std::size_t>(j)].end(), i)) {
                edges.push_back({i, j, static_cast<double>(S(i, j))});
            }
        }
    }
    return SimilarityGraph(n, std::move(edges));
}

double isolate_fraction(const SimilarityGraph& graph);
double average_degree(const SimilarityGraph& graph);
double average_degree(Index n_nodes, Index n_edges);
double edge_density(Index n_nodes, Index n_edges);

/// 2 - AD below 2, AD - K above K, zero in between.
double penalty_ad(double average_degree, Index K);
/// Isolate fraction in excess of 5%.
double penalty_if(double isolate_fraction);

/// Newman modularity on the unweighted adjacency. Throws EmptyGraph when the
/// graph has no edges.
double modularity(const SimilarityGraph& graph, const Partition& partition);

/// Louvain-style modularity maximization: local moves (largest positive gain,
/// ties to the lowest community id) alternating with aggregation until no
/// move improves. Node visit order per level is a permutation drawn from
/// (seed, level). Isolated nodes stay singletons.
Partition detect_communities(const SimilarityGraph& graph, std::uint64_t seed);

Partition connected_components(const SimilarityGraph& graph);

struct KTrace {
    Index K = 0;
    double isolate_fraction = 0;
    double average_degree = 0;
    double modularity = 0;
    double p_if = 0;
    double p_ad = 0;
    double score = 0;
    Index n_edges = 0;
    int n_communities = 0;
};

/// score = Q - 10 P_IF - P_AD.
double score_formula(double modularity, double p_if, double p_ad);

struct ScoredGraph {
    SimilarityGraph graph;
    Partition partition;
    KTrace trace;
};

/// Builds the mutual-kNN graph for K, detects communities and assembles the
/// trace. An edgeless graph gets modularity and score of -inf.
ScoredGraph build_and_score(const SimilarityMatrix<double>& S, Index K, std::uint64_t seed, int threads = 1);
KTrace score_k(const SimilarityMatrix<double>& S, Index K, std::uint64_t seed, int threads = 1);

struct KSelection {
    Index best_k = 0;
    std::vector<KTrace> traces;
};

/// argmax of score over traces in the given order; ties keep the smaller K.
Index best_k(const std::vector<KTrace>& traces);

KSelection select_k(const SimilarityMatrix<double>& S, Index k_min, Index k_max, std::uint64_t seed, int threads = 1);

struct ClusterSet {
    /// Retained communities' members, keyed by community label.
    std::map<int, std::vector<Index>> clusters;
    std::vector<Index> excluded;
};

ClusterSet finalize(const Partition& partition, Index min_cluster_size);

struct GraphSummary {
    Index n_nodes = 0;
    Index n_edges = 0;
    double average_degree = 0;
    double density = 0;
    double isolate_fraction = 0;
    Index non_isolated_nodes = 0;
    double non_isolated_average_degree = 0;
    double non_isolated_density = 0;
};

/// Statistics over all nodes, plus the same over the subgraph induced by the
/// non-isolated nodes.
GraphSummary graph_summary(const SimilarityGraph& graph);

/// `cluster` per node, 0 where the node is unclustered.
std::string to_graphml(const SimilarityGraph& graph, const std::vector<std::string>& ids,
                       const std::vector<int>& community, const std::vector<int>& cluster);
std::string edges_to_csv(const SimilarityGraph& graph, const std::vector<std::string>& ids);
std::string ktrace_to_csv(const std::vector<KTrace>& traces);

}  // namespace gowergraph
