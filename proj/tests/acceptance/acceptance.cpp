// Acceptance runner: one PASS/FAIL line per criterion, each checked against
// its tolerance and its wall-clock budget.
//
//   acceptance [--expect-fail N]...
//
// Exits 0 when every criterion not named by --expect-fail passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gowergraph/csv.hpp"
#include "gowergraph/dataset.hpp"
#include "gowergraph/inference.hpp"
#include "gowergraph/models.hpp"
#include "gowergraph/weights.hpp"
#include "json.hpp"
#include "../fixtures.hpp"
#include "../pipeline_fixture.hpp"

using namespace gowergraph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

/// Collects failed checks; the first few go into the report line.
class Checks {
public:
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        if (failures_++ < 3) notes_ << (failures_ > 1 ? "; " : "") << what;
    }
    void note(const std::string& text) { info_ << (info_.tellp() > 0 ? ", " : "") << text; }
    Outcome outcome() const {
        if (failures_ == 0) return {true, info_.str()};
        return {false, std::to_string(failures_) + " failed check(s): " + notes_.str() +
                           (info_.str().empty() ? std::string() : " [" + info_.str() + "]")};
    }

private:
    int failures_ = 0;
    std::ostringstream notes_;
    std::ostringstream info_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("gowergraph_acceptance_" + name); }

// 1. Gower against the double-loop oracle.
Outcome gower_oracle() {
    Checks c;
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<Index> rows(2, 50), width(1, 8);
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        const Index n = rows(rng), total = width(rng);
        const Index p = std::uniform_int_distribution<Index>(0, total)(rng);
        const auto m = fixture::random_mixed(rng, n, p, total - p);
        const auto D = gower_matrix(m.frame, m.weights);
        const auto want = oracle::gower(m.rows);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                worst = std::max(worst, std::abs(D(i, j) - want[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
            }
        }
    }
    c.expect(worst <= 1e-12, "max |D - oracle| = " + fmt(worst));
    c.note("50 tables, max |D - oracle| = " + fmt(worst));
    return c.outcome();
}

// 2. Mutual kNN edges are mutual, degrees bounded, edges a subset of kNN.
Outcome mutual_knn_soundness() {
    Checks c;
    std::mt19937_64 rng(1002);
    Index edges = 0;
    for (int t = 0; t < 20; ++t) {
        const Index n = std::uniform_int_distribution<Index>(11, 40)(rng);
        const auto S = fixture::random_similarity(rng, n, t % 2 == 1);
        const auto nested = fixture::to_nested(S.matrix());
        for (Index K = 1; K <= 10; ++K) {
            const auto g = mutual_knn(S, K);
            std::vector<std::set<long>> lists;
            for (Index i = 0; i < n; ++i) {
                const auto l = oracle::top_k(nested, i, K);
                lists.emplace_back(l.begin(), l.end());
            }
            c.expect(g.max_degree() <= K, "max degree above K");
            for (const auto& e : g.edges()) {
                const bool forward = lists[static_cast<std::size_t>(e.u)].count(e.v) > 0;
                const bool backward = lists[static_cast<std::size_t>(e.v)].count(e.u) > 0;
                c.expect(forward && backward, "edge not mutual");
                c.expect(forward || backward, "edge outside the directed kNN set");
            }
            Index mutual = 0;
            for (Index i = 0; i < n; ++i) {
                for (long j : lists[static_cast<std::size_t>(i)]) {
                    mutual += j > i && lists[static_cast<std::size_t>(j)].count(i) > 0;
                }
            }
            c.expect(mutual == g.n_edges(), "edge count differs from the mutual pair count");
            edges += g.n_edges();
        }
    }
    c.note("200 graphs, " + std::to_string(edges) + " edges checked");
    return c.outcome();
}

// 3. Modularity values and optimal recovery of two bridged cliques.
Outcome modularity_correctness() {
    Checks c;
    const SimilarityGraph two_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    const double q_two = modularity(two_edges, connected_components(two_edges));
    c.expect(q_two == 0.5, "Q(two edges) = " + fmt(q_two));

    std::mt19937_64 rng(1003);
    double worst = 0;
    int graphs = 0;
    while (graphs < 50) {
        const Index n = std::uniform_int_distribution<Index>(2, 12)(rng);
        const auto g = fixture::random_graph(rng, n, 0.35);
        if (g.n_edges() == 0) continue;
        ++graphs;
        const double single = modularity(g, Partition(std::vector<int>(static_cast<std::size_t>(n), 1)));
        c.expect(single == 0.0, "single-community Q = " + fmt(single));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (auto& l : labels) l = std::uniform_int_distribution<int>(0, 3)(rng);
        const double q = modularity(g, Partition(labels));
        worst = std::max(worst, std::abs(q - oracle::modularity(fixture::adjacency(g), labels)));
    }
    c.expect(worst <= 1e-12, "max |Q - oracle| = " + fmt(worst));

    const auto cliques = fixture::bridged_cliques();
    const auto best = oracle::exhaustive_modularity(fixture::adjacency(cliques));
    const auto found = detect_communities(cliques, 0);
    c.expect(best.argmax.size() == 1, "optimum not unique");
    c.expect(oracle::same_grouping(found.assignment(), best.argmax.front()), "bridged cliques not recovered");
    c.expect(oracle::same_grouping(found.assignment(), {0, 0, 0, 0, 1, 1, 1, 1}), "optimum is not the two cliques");
    c.note("max |Q - oracle| = " + fmt(worst) + ", cliques Q = " + fmt(modularity(cliques, found)) + " (optimum " +
           fmt(best.q) + ")");
    return c.outcome();
}

// 4. Penalty values and the score identity across sweeps.
Outcome penalty_formulas() {
    Checks c;
    c.expect(penalty_ad(1.5, 5) == 0.5, "penalty_ad(1.5, 5)");
    c.expect(penalty_ad(1.5, 9) == 0.5, "penalty_ad(1.5, 9)");
    c.expect(penalty_ad(6, 5) == 1.0, "penalty_ad(6, 5)");
    c.expect(penalty_if(0.10) == 0.05, "penalty_if(0.10) = " + fmt(penalty_if(0.10)));
    std::mt19937_64 rng(1004);
    int traces = 0;
    for (int t = 0; t < 6; ++t) {
        const auto S = fixture::random_similarity(rng, 30 + 5 * t, t % 2 == 1);
        for (const auto& tr : select_k(S, 1, 12, static_cast<std::uint64_t>(t)).traces) {
            ++traces;
            c.expect(tr.score == tr.modularity - 10 * tr.p_if - tr.p_ad, "score identity at K = " + std::to_string(tr.K));
            c.expect(tr.p_if == penalty_if(tr.isolate_fraction), "P_IF mismatch");
            c.expect(tr.p_ad == penalty_ad(tr.average_degree, tr.K), "P_AD mismatch");
        }
    }
    c.note(std::to_string(traces) + " traces");
    return c.outcome();
}

// 5. Aggregates quoted for the reference network and feature table.
Outcome reference_aggregates() {
    Checks c;
    const double ad = average_degree(772, 1173);
    const double dens = edge_density(772, 1173);
    c.expect(std::abs(ad - 3.039) <= 0.001, "average degree " + fmt(ad));
    c.expect(std::abs(dens - 0.00394) <= 0.00005, "density " + fmt(dens));
    // Any column with min 2, max 80 and mean 40.28.
    VectorXd aqi(5);
    aqi << 2, 80, 39.8, 39.8, 39.8;
    const double scaled = scale_minmax(aqi).values.mean();
    c.expect(std::abs(scaled - 0.491) <= 0.001, "scaled mean " + fmt(scaled));
    c.note("AD = " + fmt(ad) + ", density = " + fmt(dens) + ", scaled mean = " + fmt(scaled));
    return c.outcome();
}

// 6. PERMANOVA exact p, Monte Carlo agreement, relabeling, pair count.
Outcome permanova_exactness() {
    Checks c;
    MatrixXd d(8, 8);
    for (Index i = 0; i < 8; ++i) {
        for (Index j = 0; j < 8; ++j) d(i, j) = i == j ? 0.0 : (i / 4 == j / 4 ? 0.1 : 0.9);
    }
    const DissimilarityMatrix<double> D(d);
    const std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
    const auto exact = permanova(D, labels);
    c.expect(exact.exact && exact.p_value == 1.0 / 35.0, "exact p = " + fmt(exact.p_value));

    PermanovaOptions mc;
    mc.exact_max_n = 0;
    mc.n_permutations = 999;
    mc.seed = 2024;
    const auto sampled = permanova(D, labels, mc);
    const double se = std::sqrt(exact.p_value * (1 - exact.p_value) / 999.0);
    c.expect(std::abs(sampled.p_value - exact.p_value) <= 3 * se, "Monte Carlo p = " + fmt(sampled.p_value));
    const std::vector<int> renamed{7, 7, 7, 7, 3, 3, 3, 3};
    c.expect(permanova(D, renamed, mc).p_value == sampled.p_value, "relabeling changed p");
    c.expect(permanova(D, renamed).p_value == exact.p_value, "relabeling changed exact p");

    std::mt19937_64 rng(1006);
    const auto S = fixture::random_similarity(rng, 54);
    MatrixXd dd = MatrixXd::Ones(54, 54) - S.matrix();
    dd.diagonal().setZero();
    std::vector<int> many;
    for (int g = 0; g < 27; ++g) many.insert(many.end(), {g, g});
    PermanovaOptions few;
    few.n_permutations = 9;
    const auto pairs = pairwise_permanova(DissimilarityMatrix<double>(dd), many, few, Adjustment::bh);
    c.expect(pairs.pairs.size() == 351, "pairs = " + std::to_string(pairs.pairs.size()));
    c.note("exact p = " + fmt(exact.p_value) + ", MC p = " + fmt(sampled.p_value) + " (3 SE = " + fmt(3 * se) +
           "), pairs = " + std::to_string(pairs.pairs.size()));
    return c.outcome();
}

// 7. Cohen's d oracle, symmetry, invariances, planted feature rank.
Outcome effect_size() {
    Checks c;
    std::mt19937_64 rng(1007);
    std::normal_distribution<double> gauss(0, 1);
    std::uniform_int_distribution<int> size(2, 40);
    std::uniform_int_distribution<int> grid(-64, 64);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(static_cast<std::size_t>(size(rng))), b(static_cast<std::size_t>(size(rng)));
        const double shift = 2 * gauss(rng), spread = std::exp(gauss(rng));
        for (auto& x : a) x = shift + spread * gauss(rng);
        for (auto& x : b) x = spread * gauss(rng);
        const Eigen::Map<const VectorXd> va(a.data(), static_cast<Index>(a.size()));
        const Eigen::Map<const VectorXd> vb(b.data(), static_cast<Index>(b.size()));
        const double dv = cohens_d(va, vb);
        worst = std::max(worst, std::abs(dv - oracle::cohens_d(a, b)));
        c.expect(cohens_d(vb, va) == -dv, "antisymmetry");
        c.expect(cohens_d(VectorXd(va * 4.0), VectorXd(vb * 4.0)) == dv, "scale by 4");

        // Dyadic values with power-of-two sizes keep every sum exact, so a
        // shift must leave d unchanged to the bit.
        VectorXd ia(4 << (t % 3)), ib(8);
        for (auto& x : ia) x = grid(rng) / 8.0;
        for (auto& x : ib) x = grid(rng) / 8.0;
        const double di = cohens_d(ia, ib);
        c.expect(cohens_d(VectorXd(ia.array() + 5.0), VectorXd(ib.array() + 5.0)) == di, "shift by 5");
        c.expect(cohens_d(VectorXd(ia * 0.5), VectorXd(ib * 0.5)) == di, "scale by 1/2");
    }
    c.expect(worst <= 1e-12, "max |d - oracle| = " + fmt(worst));

    const Index n = 120;
    MatrixXd X(n, 8);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = 1 + static_cast<int>(i % 4);
        for (Index f = 0; f < 8; ++f) X(i, f) = gauss(rng);
        if (labels[static_cast<std::size_t>(i)] == 3) X(i, 5) += 3.0;
    }
    const std::vector<std::string> names{"f0", "f1", "f2", "f3", "f4", "planted", "f6", "f7"};
    const auto prof = effect_profile(X, names, labels, 4);
    c.expect(!prof.top.at(3).empty() && prof.top.at(3).front() == 5, "planted feature not ranked first");
    c.note("max |d - oracle| = " + fmt(worst) + ", planted d = " + fmt(prof.at(3, "planted")));
    return c.outcome();
}

// 8. Ridge oracle, linear and interaction fits, importance ratio, splits.
Outcome model_stage() {
    Checks c;
    std::mt19937_64 rng(1008);
    std::normal_distribution<double> gauss(0, 1);
    auto random = [&](Index r, Index k) {
        MatrixXd m(r, k);
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
        return m;
    };

    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        const MatrixXd X = random(30, 4);
        const VectorXd y = random(30, 1);
        const double lambda = t % 4 == 0 ? 0.0 : 0.1 * t;
        const auto fit = fit_ridge(X, y, lambda);
        std::vector<std::vector<double>> rows(30);
        for (Index r = 0; r < 30; ++r) {
            for (Index k = 0; k < 4; ++k) rows[static_cast<std::size_t>(r)].push_back(X(r, k));
        }
        const auto want = oracle::ridge(rows, std::vector<double>(y.data(), y.data() + 30), lambda);
        worst = std::max(worst, std::abs(fit.intercept - want[0]));
        for (Index k = 0; k < 4; ++k) worst = std::max(worst, std::abs(fit.coefficients[k] - want[static_cast<std::size_t>(k + 1)]));
    }
    c.expect(worst <= 1e-8, "ridge max |diff| = " + fmt(worst));

    const std::vector<std::string> names{"x1", "x2", "x3"};
    const MatrixXd X = random(200, 3);
    const VectorXd linear = 1.5 + (X * Eigen::Vector3d(2.0, -1.0, 0.5)).array();
    CVPlan plan;
    plan.seed = 8;
    const auto lin_splits = make_splits(linear, plan);
    const auto lin = cross_validate(RidgeParams{1e-6}, X, linear, names, lin_splits, 1);
    c.expect(lin.metrics.mean.r2 >= 0.999, "ridge linear R2 = " + fmt(lin.metrics.mean.r2));

    const VectorXd product = X.col(0).cwiseProduct(X.col(1));
    const auto prod_splits = make_splits(product, plan);
    CrossValidationOptions opts;
    opts.threads = 4;
    const auto gbrt = cross_validate(GbrtParams{}, X, product, names, prod_splits, 2, opts);
    const auto ridge = cross_validate(RidgeParams{}, X, product, names, prod_splits, 2, opts);
    c.expect(gbrt.metrics.mean.r2 > ridge.metrics.mean.r2,
             "GBRT R2 " + fmt(gbrt.metrics.mean.r2) + " <= ridge R2 " + fmt(ridge.metrics.mean.r2));

    // x1 drives the target, x3 is pure noise.
    VectorXd noisy = 3.0 * X.col(0);
    for (auto& v : noisy) v += 0.3 * gauss(rng);
    const auto imp = cross_validate(GbrtParams{}, X, noisy, names, make_splits(noisy, plan), 3, opts);
    const double informative = imp.values[0].mean, noise = std::max(imp.values[2].mean, 0.0);
    c.expect(informative > 5 * noise, "importance " + fmt(informative) + " vs noise " + fmt(noise));

    c.expect(lin_splits.size() == 25, "splits = " + std::to_string(lin_splits.size()));
    const auto bins = quantile_bins(std::vector<double>(linear.data(), linear.data() + linear.size()), plan.max_bins);
    for (const auto& s : lin_splits) {
        std::map<int, int> per_bin;
        for (Index r : s.validation) ++per_bin[bins[static_cast<std::size_t>(r)]];
        std::map<int, int> total;
        for (int b : bins) ++total[b];
        for (const auto& [bin, count] : total) {
            const double expected = static_cast<double>(count) / plan.folds;
            c.expect(std::abs(per_bin[bin] - expected) < 1.0 + 1e-9,
                     "bin " + std::to_string(bin) + " has " + std::to_string(per_bin[bin]) + " rows in a fold");
        }
    }
    c.note("ridge |diff| = " + fmt(worst) + ", linear R2 = " + fmt(lin.metrics.mean.r2) + ", GBRT/ridge R2 = " +
           fmt(gbrt.metrics.mean.r2) + "/" + fmt(ridge.metrics.mean.r2) + ", importance ratio = " +
           (noise > 0 ? fmt(informative / noise) : std::string("inf")));
    return c.outcome();
}

std::vector<int> planted_labels_for(const csv::Document& doc, std::size_t id_col, const std::map<std::string, int>& planted) {
    std::vector<int> out;
    for (const auto& row : doc.rows) out.push_back(planted.at(row[id_col]));
    return out;
}

// 9. End to end on three planted blobs.
Outcome planted_recovery() {
    Checks c;
    const auto pc = fixture::pipeline_case(scratch("planted"), 1);
    const auto manifest = run_pipeline(pc.config);
    const auto out = pc.config.output;

    std::map<std::string, int> planted;
    const auto& ids = pc.data.table.ids();
    for (std::size_t i = 0; i < ids.size(); ++i) planted[ids[i]] = pc.data.labels[i];

    const auto partition = csv::parse(read_file(out / "partition.csv"));
    std::vector<int> communities;
    for (const auto& row : partition.rows) communities.push_back(std::stoi(row[1]));
    const auto truth = planted_labels_for(partition, 0, planted);
    const double ari = adjusted_rand_index(communities, truth);
    c.expect(ari >= 0.9, "ARI = " + fmt(ari));

    const double perm = nlohmann::json::parse(read_file(out / "permanova.json")).at("p_value").get<double>();
    c.expect(perm <= 0.01, "PERMANOVA p = " + fmt(perm));

    // Planted medians of the target over clustered rows, then the majority
    // blob of each cluster along the tier order must follow them.
    const auto target = csv::parse(read_file(out / "clusters_target.csv"));
    std::map<int, std::vector<double>> by_blob;
    std::map<int, std::map<int, int>> votes;
    for (const auto& row : target.rows) {
        const int blob = planted.at(row[0]);
        by_blob[blob].push_back(std::stod(row[2]));
        ++votes[std::stoi(row[1])][blob];
    }
    std::vector<std::pair<double, int>> blob_rank;
    for (auto& [blob, values] : by_blob) blob_rank.emplace_back(-median(values), blob);
    std::sort(blob_rank.begin(), blob_rank.end());
    std::map<int, int> position;
    for (std::size_t i = 0; i < blob_rank.size(); ++i) position[blob_rank[i].second] = static_cast<int>(i);

    const auto tiers = csv::parse(read_file(out / "tiers.csv"));
    int last = -1;
    bool ordered = true;
    for (const auto& row : tiers.rows) {
        const auto& v = votes.at(std::stoi(row[0]));
        const int majority = std::max_element(v.begin(), v.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
        ordered = ordered && position.at(majority) >= last;
        last = position.at(majority);
    }
    c.expect(ordered, "tier order disagrees with planted medians");
    c.note("K = " + std::to_string(manifest.selected_k) + ", communities ARI = " + fmt(ari) + ", clusters = " +
           std::to_string(manifest.n_clusters) + ", p = " + fmt(perm));
    return c.outcome();
}

// 10. Byte-identical trees at 1 and 8 threads.
Outcome determinism() {
    Checks c;
    auto pc = fixture::pipeline_case(scratch("determinism"), 1);
    pc.config.threads = 1;
    pc.config.output = scratch("determinism") / "t1";
    const auto one = run_pipeline(pc.config);
    pc.config.threads = 8;
    pc.config.output = scratch("determinism") / "t8";
    const auto eight = run_pipeline(pc.config);
    c.expect(one.checksums == eight.checksums, "manifest checksums differ");
    for (const auto& [file, sum] : one.checksums) {
        c.expect(read_file(scratch("determinism") / "t1" / file) == read_file(scratch("determinism") / "t8" / file),
                 file + " differs");
    }
    c.note(std::to_string(one.checksums.size()) + " files identical");
    return c.outcome();
}

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--expect-fail" && i + 1 < argc) {
            expect_fail.insert(std::stoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--expect-fail N]...\n";
            return 2;
        }
    }
    setenv("GOWERGRAPH_LOG", "error", 0);

    double planted_seconds = 0;
    std::vector<Criterion> criteria{
        {1, "Gower oracle equivalence", 5, gower_oracle},
        {2, "mutual-kNN soundness", 5, mutual_knn_soundness},
        {3, "modularity correctness", 30, modularity_correctness},
        {4, "penalty and score formulas", 1, penalty_formulas},
        {5, "reference aggregates", 1, reference_aggregates},
        {6, "PERMANOVA exactness", 10, permanova_exactness},
        {7, "effect-size oracle", 5, effect_size},
        {8, "model stage", 60, model_stage},
        {9, "planted recovery end to end", 60, planted_recovery},
        {10, "determinism across thread counts", 0, determinism},
    };

    int unexpected = 0, passed = 0;
    for (auto& cr : criteria) {
        // Twice criterion 9's stated budget; the measured ratio is reported.
        if (cr.id == 10) cr.budget_seconds = 2 * criteria[8].budget_seconds;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cr.id == 9) planted_seconds = seconds;
        if (cr.id == 10 && planted_seconds > 0) o.detail += ", " + fmt(seconds / planted_seconds) + "x criterion 9";
        if (o.ok && seconds >= cr.budget_seconds) {
            o = {false, "over budget (" + fmt(seconds) + " s >= " + fmt(cr.budget_seconds) + " s); " + o.detail};
        }
        passed += o.ok;
        const bool expected = expect_fail.count(cr.id) > 0;
        if (!o.ok && !expected) ++unexpected;
        std::printf("%s  %2d  %-34s %8.3f s  %s%s\n", o.ok ? "PASS" : "FAIL", cr.id, cr.name.c_str(), seconds,
                    o.detail.c_str(), !o.ok && expected ? "  (expected)" : "");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", passed, criteria.size());
    return unexpected == 0 ? 0 : 1;
}
