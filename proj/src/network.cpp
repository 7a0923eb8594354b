#include "gowergraph/network.hpp"

#include <set>

#include "gowergraph/csv.hpp"

namespace gowergraph {

SimilarityGraph::SimilarityGraph(Index n_nodes, std::vector<Edge> edges) : edges_(std::move(edges)) {
    if (n_nodes < 0) {
        throw Error(Errc::invalid_argument, "graph node count must be >= 0");
    }
    for (auto& e : edges_) {
        if (e.u > e.v) std::swap(e.u, e.v);
        if (e.u < 0 || e.v >= n_nodes) {
            throw Error(Errc::invalid_argument, "edge endpoint outside the node set");
        }
        if (e.u == e.v) {
            throw Error(Errc::invalid_argument, "self-loops are not allowed");
        }
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (edges_[k].u == edges_[k - 1].u && edges_[k].v == edges_[k - 1].v) {
            throw Error(Errc::invalid_argument, "parallel edges are not allowed");
        }
    }
    adjacency_.assign(static_cast<std::size_t>(n_nodes), {});
    for (const auto& e : edges_) {
        adjacency_[static_cast<std::size_t>(e.u)].push_back(e.v);
        adjacency_[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

Index SimilarityGraph::max_degree() const {
    Index best = 0;
    for (const auto& list : adjacency_) best = std::max(best, static_cast<Index>(list.size()));
    return best;
}

bool SimilarityGraph::has_edge(Index a, Index b) const {
    const auto& list = neighbors(a);
    return std::binary_search(list.begin(), list.end(), b);
}

Partition::Partition(const std::vector<int>& labels) {
    std::map<int, int> relabel;
    assignment_.reserve(labels.size());
    for (int label : labels) {
        auto [it, inserted] = relabel.emplace(label, static_cast<int>(relabel.size()) + 1);
        assignment_.push_back(it->second);
    }
    n_communities_ = static_cast<int>(relabel.size());
}

std::map<int, std::vector<Index>> Partition::communities() const {
    std::map<int, std::vector<Index>> out;
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        out[assignment_[i]].push_back(static_cast<Index>(i));
    }
    return out;
}

double isolate_fraction(const SimilarityGraph& graph) {
    if (graph.n_nodes() < 1) {
        throw Error(Errc::invalid_argument, "isolate_fraction: empty graph");
    }
    Index isolated = 0;
    for (Index i = 0; i < graph.n_nodes(); ++i) {
        if (graph.degree(i) == 0) ++isolated;
    }
    return static_cast<double>(isolated) / static_cast<double>(graph.n_nodes());
}

double average_degree(Index n_nodes, Index n_edges) {
    if (n_nodes < 1) {
        throw Error(Errc::invalid_argument, "average_degree: empty graph");
    }
    return 2.0 * static_cast<double>(n_edges) / static_cast<double>(n_nodes);
}

double average_degree(const SimilarityGraph& graph) { return average_degree(graph.n_nodes(), graph.n_edges()); }

double edge_density(Index n_nodes, Index n_edges) {
    if (n_nodes < 2) return 0.0;
    const auto n = static_cast<double>(n_nodes);
    return static_cast<double>(n_edges) / (n * (n - 1) / 2);
}

double penalty_ad(double average_degree, Index K) {
    if (average_degree < 2) return 2 - average_degree;
    if (average_degree > static_cast<double>(K)) return average_degree - static_cast<double>(K);
    return 0;
}

double penalty_if(double isolate_fraction) { return std::max(0.0, isolate_fraction - 0.05); }

double score_formula(double modularity, double p_if, double p_ad) { return modularity - 10 * p_if - p_ad; }

double modularity(const SimilarityGraph& graph, const Partition& partition) {
    if (partition.size() != graph.n_nodes()) {
        throw Error(Errc::invalid_argument, "modularity: partition does not cover the graph");
    }
    const Index m = graph.n_edges();
    if (m == 0) {
        throw Error(Errc::empty_graph, "modularity undefined for a graph without edges");
    }
    const int c = partition.n_communities();
    std::vector<double> internal(static_cast<std::size_t>(c) + 1, 0.0);
    std::vector<double> degree_sum(static_cast<std::size_t>(c) + 1, 0.0);
    for (const auto& e : graph.edges()) {
        if (partition[e.u] == partition[e.v]) internal[static_cast<std::size_t>(partition[e.u])] += 1;
    }
    for (Index i = 0; i < graph.n_nodes(); ++i) {
        degree_sum[static_cast<std::size_t>(partition[i])] += static_cast<double>(graph.degree(i));
    }
    const auto md = static_cast<double>(m);
    double q = 0;
    for (std::size_t k = 1; k < internal.size(); ++k) {
        const double share = degree_sum[k] / (2 * md);
        q += internal[k] / md - share * share;
    }
    return q;
}

Partition connected_components(const SimilarityGraph& graph) {
    std::vector<int> label(static_cast<std::size_t>(graph.n_nodes()), -1);
    int next = 0;
    std::vector<Index> stack;
    for (Index s = 0; s < graph.n_nodes(); ++s) {
        if (label[static_cast<std::size_t>(s)] >= 0) continue;
        label[static_cast<std::size_t>(s)] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            Index u = stack.back();
            stack.pop_back();
            for (Index v : graph.neighbors(u)) {
                if (label[static_cast<std::size_t>(v)] < 0) {
                    label[static_cast<std::size_t>(v)] = next;
                    stack.push_back(v);
                }
            }
        }
        ++next;
    }
    return Partition(label);
}

namespace {

// Weighted graph used across aggregation levels. Self-loops are dropped since
// they move together with their node and never change a move's gain.
struct LevelGraph {
    std::vector<std::vector<std::pair<int, double>>> adjacency;
    std::vector<double> strength;
    double two_m = 0;
};

LevelGraph base_level(const SimilarityGraph& graph) {
    LevelGraph g;
    const auto n = static_cast<std::size_t>(graph.n_nodes());
    g.adjacency.resize(n);
    g.strength.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (Index j : graph.neighbors(static_cast<Index>(i))) {
            g.adjacency[i].emplace_back(static_cast<int>(j), 1.0);
        }
        g.strength[i] = static_cast<double>(g.adjacency[i].size());
    }
    g.two_m = 2.0 * static_cast<double>(graph.n_edges());
    return g;
}

// One local-moving phase. Returns true if any node changed community.
bool move_nodes(const LevelGraph& g, std::vector<int>& community, Rng& rng) {
    const auto n = g.adjacency.size();
    std::vector<double> total(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) total[static_cast<std::size_t>(community[i])] += g.strength[i];

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> link(n, 0.0);
    std::vector<int> touched;
    bool any = false;
    bool moved = true;
    while (moved) {
        moved = false;
        for (int node : order) {
            const auto i = static_cast<std::size_t>(node);
            if (g.adjacency[i].empty()) continue;
            const int current = community[i];
            const double k = g.strength[i];

            touched.clear();
            for (const auto& [j, w] : g.adjacency[i]) {
                const int c = community[static_cast<std::size_t>(j)];
                if (link[static_cast<std::size_t>(c)] == 0) touched.push_back(c);
                link[static_cast<std::size_t>(c)] += w;
            }
            total[static_cast<std::size_t>(current)] -= k;

            auto gain = [&](int c) { return link[static_cast<std::size_t>(c)] - total[static_cast<std::size_t>(c)] * k / g.two_m; };
            std::sort(touched.begin(), touched.end());
            int best = current;
            double best_gain = gain(current);
            for (int c : touched) {
                if (c == current) continue;
                const double candidate = gain(c);
                if (candidate > best_gain + 1e-12 * std::max(1.0, std::abs(best_gain))) {
                    best = c;
                    best_gain = candidate;
                }
            }

            total[static_cast<std::size_t>(best)] += k;
            for (int c : touched) link[static_cast<std::size_t>(c)] = 0;
            if (best != current) {
                community[i] = best;
                moved = true;
                any = true;
            }
        }
    }
    return any;
}

// Renumbers communities densely by first appearance; returns the count.
int compact(std::vector<int>& community) {
    std::map<int, int> relabel;
    for (auto& c : community) {
        auto [it, inserted] = relabel.emplace(c, static_cast<int>(relabel.size()));
        c = it->second;
    }
    return static_cast<int>(relabel.size());
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& community, int n_communities) {
    LevelGraph out;
    out.adjacency.resize(static_cast<std::size_t>(n_communities));
    out.strength.assign(static_cast<std::size_t>(n_communities), 0.0);
    out.two_m = g.two_m;
    std::vector<std::map<int, double>> links(static_cast<std::size_t>(n_communities));
    for (std::size_t i = 0; i < g.adjacency.size(); ++i) {
        const int ci = community[i];
        out.strength[static_cast<std::size_t>(ci)] += g.strength[i];
        for (const auto& [j, w] : g.adjacency[i]) {
            const int cj = community[static_cast<std::size_t>(j)];
            if (cj != ci) links[static_cast<std::size_t>(ci)][cj] += w;
        }
    }
    for (std::size_t c = 0; c < links.size(); ++c) {
        out.adjacency[c].assign(links[c].begin(), links[c].end());
    }
    return out;
}

}  // namespace

Partition detect_communities(const SimilarityGraph& graph, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(graph.n_nodes());
    if (n == 0) {
        throw Error(Errc::invalid_argument, "detect_communities: empty graph");
    }
    std::vector<int> membership(n);
    std::iota(membership.begin(), membership.end(), 0);
    if (graph.n_edges() == 0) {
        return Partition(membership);
    }

    LevelGraph level = base_level(graph);
    for (std::uint64_t depth = 0;; ++depth) {
        std::vector<int> community(level.adjacency.size());
        std::iota(community.begin(), community.end(), 0);
        auto rng = make_rng(seed, {tag("louvain"), depth});
        if (!move_nodes(level, community, rng)) {
            break;
        }
        const int count = compact(community);
        for (auto& m : membership) m = community[static_cast<std::size_t>(m)];
        level = aggregate(level, community, count);
    }

    Partition result(membership);
    if (modularity(graph, result) < 0) {
        return connected_components(graph);
    }
    return result;
}

ScoredGraph build_and_score(const SimilarityMatrix<double>& S, Index K, std::uint64_t seed, int threads) {
    ScoredGraph out;
    out.graph = mutual_knn(S, K, threads);
    out.partition = detect_communities(out.graph, seed);
    auto& t = out.trace;
    t.K = K;
    t.isolate_fraction = isolate_fraction(out.graph);
    t.average_degree = average_degree(out.graph);
    t.modularity = out.graph.n_edges() > 0 ? modularity(out.graph, out.partition) : -infinity;
    t.p_if = penalty_if(t.isolate_fraction);
    t.p_ad = penalty_ad(t.average_degree, K);
    t.score = score_formula(t.modularity, t.p_if, t.p_ad);
    t.n_edges = out.graph.n_edges();
    t.n_communities = out.partition.n_communities();
    return out;
}

KTrace score_k(const SimilarityMatrix<double>& S, Index K, std::uint64_t seed, int threads) {
    return build_and_score(S, K, seed, threads).trace;
}

Index best_k(const std::vector<KTrace>& traces) {
    if (traces.empty()) {
        throw Error(Errc::invalid_argument, "best_k: no traces");
    }
    const KTrace* best = &traces.front();
    for (const auto& t : traces) {
        if (t.score > best->score || (t.score == best->score && t.K < best->K)) best = &t;
    }
    return best->K;
}

KSelection select_k(const SimilarityMatrix<double>& S, Index k_min, Index k_max, std::uint64_t seed, int threads) {
    if (k_min < 1 || k_min > k_max || k_max > S.size() - 1) {
        throw Error(Errc::k_out_of_range, "K range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                                              "] invalid for n = " + std::to_string(S.size()));
    }
    KSelection out;
    out.traces.resize(static_cast<std::size_t>(k_max - k_min + 1));
    parallel_for(k_max - k_min + 1, threads, [&](Index k) {
        out.traces[static_cast<std::size_t>(k)] = score_k(S, k_min + k, seed, 1);
    });
    out.best_k = best_k(out.traces);
    return out;
}

ClusterSet finalize(const Partition& partition, Index min_cluster_size) {
    ClusterSet out;
    for (auto& [label, members] : partition.communities()) {
        if (static_cast<Index>(members.size()) >= min_cluster_size) {
            out.clusters.emplace(label, members);
        } else {
            out.excluded.insert(out.excluded.end(), members.begin(), members.end());
        }
    }
    std::sort(out.excluded.begin(), out.excluded.end());
    return out;
}

GraphSummary graph_summary(const SimilarityGraph& graph) {
    GraphSummary s;
    s.n_nodes = graph.n_nodes();
    s.n_edges = graph.n_edges();
    s.average_degree = average_degree(graph);
    s.density = edge_density(s.n_nodes, s.n_edges);
    s.isolate_fraction = isolate_fraction(graph);
    for (Index i = 0; i < graph.n_nodes(); ++i) {
        if (graph.degree(i) > 0) ++s.non_isolated_nodes;
    }
    if (s.non_isolated_nodes > 0) {
        s.non_isolated_average_degree = average_degree(s.non_isolated_nodes, s.n_edges);
        s.non_isolated_density = edge_density(s.non_isolated_nodes, s.n_edges);
    }
    return s;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::string to_graphml(const SimilarityGraph& graph, const std::vector<std::string>& ids,
                       const std::vector<int>& community, const std::vector<int>& cluster) {
    const auto n = static_cast<std::size_t>(graph.n_nodes());
    if (ids.size() != n || community.size() != n || cluster.size() != n) {
        throw Error(Errc::invalid_argument, "to_graphml: per-node vectors must match the node count");
    }
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" "
           "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
           "xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
           "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n";
    out += "  <key id=\"id\" for=\"node\" attr.name=\"id\" attr.type=\"string\"/>\n";
    out += "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"int\"/>\n";
    out += "  <key id=\"cluster\" for=\"node\" attr.name=\"cluster\" attr.type=\"int\"/>\n";
    out += "  <key id=\"similarity\" for=\"edge\" attr.name=\"similarity\" attr.type=\"double\"/>\n";
    out += "  <graph id=\"G\" edgedefault=\"undirected\">\n";
    for (std::size_t i = 0; i < n; ++i) {
        out += "    <node id=\"n" + std::to_string(i) + "\"><data key=\"id\">" + xml_escape(ids[i]) +
               "</data><data key=\"community\">" + std::to_string(community[i]) + "</data><data key=\"cluster\">" +
               std::to_string(cluster[i]) + "</data></node>\n";
    }
    for (const auto& e : graph.edges()) {
        out += "    <edge source=\"n" + std::to_string(e.u) + "\" target=\"n" + std::to_string(e.v) +
               "\"><data key=\"similarity\">" + format_double(e.similarity) + "</data></edge>\n";
    }
    out += "  </graph>\n</graphml>\n";
    return out;
}

std::string edges_to_csv(const SimilarityGraph& graph, const std::vector<std::string>& ids) {
    csv::Writer out;
    out.row({"source", "target", "similarity"});
    for (const auto& e : graph.edges()) {
        out.row({ids[static_cast<std::size_t>(e.u)], ids[static_cast<std::size_t>(e.v)], format_double(e.similarity)});
    }
    return out.str();
}

std::string ktrace_to_csv(const std::vector<KTrace>& traces) {
    csv::Writer out;
    out.row({"K", "IF", "AD", "Q", "P_IF", "P_AD", "score", "n_edges", "n_communities"});
    for (const auto& t : traces) {
        out.row({std::to_string(t.K), format_double(t.isolate_fraction), format_double(t.average_degree),
                 format_double(t.modularity), format_double(t.p_if), format_double(t.p_ad), format_double(t.score),
                 std::to_string(t.n_edges), std::to_string(t.n_communities)});
    }
    return out.str();
}

}  // namespace gowergraph
