#include "gowergraph/inference.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"

#include "gowergraph/csv.hpp"

namespace gowergraph {

namespace {

// Groups coded 0..g-1 by first appearance, so renaming groups leaves every
// computation bit-identical.
std::vector<int> canonical_codes(std::span<const int> labels, int& n_groups) {
    std::map<int, int> code;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto [it, inserted] = code.emplace(l, static_cast<int>(code.size()));
        out.push_back(it->second);
    }
    n_groups = static_cast<int>(code.size());
    return out;
}

struct SumsOfSquares {
    double total = 0;
    double within = 0;
};

double within_ss(const MatrixXd& d2, const std::vector<int>& codes, int n_groups, std::vector<double>& group_sum,
                 std::vector<Index>& group_size) {
    const auto n = static_cast<Index>(codes.size());
    std::fill(group_sum.begin(), group_sum.end(), 0.0);
    std::fill(group_size.begin(), group_size.end(), Index{0});
    for (Index i = 0; i < n; ++i) {
        const int gi = codes[static_cast<std::size_t>(i)];
        ++group_size[static_cast<std::size_t>(gi)];
        double acc = 0;
        for (Index j = i + 1; j < n; ++j) {
            if (codes[static_cast<std::size_t>(j)] == gi) acc += d2(i, j);
        }
        group_sum[static_cast<std::size_t>(gi)] += acc;
    }
    double within = 0;
    for (int g = 0; g < n_groups; ++g) {
        within += group_sum[static_cast<std::size_t>(g)] / static_cast<double>(group_size[static_cast<std::size_t>(g)]);
    }
    return within;
}

double pseudo_f(double ss_total, double ss_within, Index n, int g) {
    const double between = ss_total - ss_within;
    const double numerator = between / static_cast<double>(g - 1);
    const double denominator = ss_within / static_cast<double>(n - g);
    if (denominator == 0) {
        return numerator > 0 ? infinity : 0.0;
    }
    return numerator / denominator;
}

bool at_least(double f_perm, double f_obs) {
    if (std::isinf(f_obs)) return f_perm == f_obs;
    return f_perm >= f_obs - 1e-9 * std::max(1.0, std::abs(f_obs));
}

std::uint64_t arrangements(const std::vector<int>& codes, int n_groups, std::uint64_t cap) {
    std::vector<std::uint64_t> size(static_cast<std::size_t>(n_groups), 0);
    for (int c : codes) ++size[static_cast<std::size_t>(c)];
    // Multinomial as a product of binomials; bail out above `cap`.
    std::uint64_t total = 1;
    std::uint64_t placed = 0;
    for (auto s : size) {
        for (std::uint64_t k = 1; k <= s; ++k) {
            ++placed;
            total = total * placed / k;
            if (total > cap) return cap + 1;
        }
    }
    return total;
}

PermanovaResult permanova_core(const MatrixXd& d2, std::span<const int> labels, const PermanovaOptions& options,
                               std::uint64_t seed) {
    const auto n = static_cast<Index>(labels.size());
    int g = 0;
    const auto codes = canonical_codes(labels, g);
    if (g < 2) {
        throw Error(Errc::degenerate_groups, "PERMANOVA needs at least 2 groups");
    }
    if (n <= g) {
        throw Error(Errc::degenerate_groups, "PERMANOVA needs more rows than groups");
    }

    PermanovaResult r;
    r.n = n;
    r.n_groups = g;
    double upper = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) upper += d2(i, j);
    }
    r.ss_total = upper / static_cast<double>(n);
    std::vector<double> sums(static_cast<std::size_t>(g));
    std::vector<Index> sizes(static_cast<std::size_t>(g));
    r.ss_within = within_ss(d2, codes, g, sums, sizes);
    r.ss_between = r.ss_total - r.ss_within;
    r.pseudo_f = pseudo_f(r.ss_total, r.ss_within, n, g);

    const auto count = arrangements(codes, g, options.exact_max_arrangements);
    if (n <= options.exact_max_n && count <= options.exact_max_arrangements) {
        std::vector<int> arrangement = codes;
        std::sort(arrangement.begin(), arrangement.end());
        Index hits = 0, total = 0;
        do {
            const double f = pseudo_f(r.ss_total, within_ss(d2, arrangement, g, sums, sizes), n, g);
            if (at_least(f, r.pseudo_f)) ++hits;
            ++total;
        } while (std::next_permutation(arrangement.begin(), arrangement.end()));
        r.exact = true;
        r.n_permutations = total;
        r.p_value = static_cast<double>(hits) / static_cast<double>(total);
        return r;
    }

    if (options.n_permutations < 1) {
        throw Error(Errc::invalid_argument, "PERMANOVA needs at least one permutation");
    }
    std::vector<char> hit(static_cast<std::size_t>(options.n_permutations), 0);
    parallel_for(options.n_permutations, options.threads, [&](Index p) {
        std::vector<int> shuffled = codes;
        auto rng = make_rng(seed, {tag("permanova"), static_cast<std::uint64_t>(p)});
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::vector<double> local_sums(static_cast<std::size_t>(g));
        std::vector<Index> local_sizes(static_cast<std::size_t>(g));
        const double f = pseudo_f(r.ss_total, within_ss(d2, shuffled, g, local_sums, local_sizes), n, g);
        hit[static_cast<std::size_t>(p)] = at_least(f, r.pseudo_f) ? 1 : 0;
    });
    const auto hits = std::count(hit.begin(), hit.end(), 1);
    r.n_permutations = options.n_permutations;
    r.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.n_permutations + 1);
    return r;
}

}  // namespace

PermanovaResult permanova(const DissimilarityMatrix<double>& D, std::span<const int> labels,
                          const PermanovaOptions& options) {
    if (static_cast<Index>(labels.size()) != D.size()) {
        throw Error(Errc::invalid_argument, "PERMANOVA labels must cover every row of D");
    }
    const MatrixXd d2 = D.matrix().array().square();
    return permanova_core(d2, labels, options, options.seed);
}

std::vector<double> benjamini_hochberg(std::span<const double> p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const std::size_t idx = order[k];
        const double candidate = p_values[idx] * static_cast<double>(m) / static_cast<double>(k + 1);
        running = std::min(running, candidate);
        adjusted[idx] = std::min(1.0, std::max(running, p_values[idx]));
    }
    return adjusted;
}

PairwiseResults pairwise_permanova(const DissimilarityMatrix<double>& D, std::span<const int> labels,
                                   const PermanovaOptions& options, Adjustment adjust, double alpha) {
    if (static_cast<Index>(labels.size()) != D.size()) {
        throw Error(Errc::invalid_argument, "PERMANOVA labels must cover every row of D");
    }
    const std::set<int> groups(labels.begin(), labels.end());
    if (groups.size() < 2) {
        throw Error(Errc::degenerate_groups, "pairwise PERMANOVA needs at least 2 groups");
    }
    const MatrixXd d2 = D.matrix().array().square();

    PairwiseResults out;
    out.adjustment = adjust;
    out.alpha = alpha;
    for (auto a = groups.begin(); a != groups.end(); ++a) {
        for (auto b = std::next(a); b != groups.end(); ++b) {
            out.pairs.push_back({*a, *b, {}, std::nan("")});
        }
    }

    PermanovaOptions inner = options;
    inner.threads = 1;
    parallel_for(static_cast<Index>(out.pairs.size()), options.threads, [&](Index k) {
        auto& pair = out.pairs[static_cast<std::size_t>(k)];
        std::vector<Index> rows;
        std::vector<int> sub_labels;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == pair.group_a || labels[i] == pair.group_b) {
                rows.push_back(static_cast<Index>(i));
                sub_labels.push_back(labels[i]);
            }
        }
        MatrixXd sub(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < rows.size(); ++j) {
                sub(static_cast<Index>(i), static_cast<Index>(j)) = d2(rows[i], rows[j]);
            }
        }
        const auto seed = substream(options.seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(pair.group_a)),
                                                   static_cast<std::uint64_t>(static_cast<std::int64_t>(pair.group_b))});
        pair.result = permanova_core(sub, sub_labels, inner, seed);
    });

    if (adjust == Adjustment::bh) {
        std::vector<double> raw;
        for (const auto& p : out.pairs) raw.push_back(p.result.p_value);
        const auto adjusted = benjamini_hochberg(raw);
        for (std::size_t k = 0; k < out.pairs.size(); ++k) out.pairs[k].p_adjusted = adjusted[k];
    }
    for (const auto& p : out.pairs) {
        const double used = adjust == Adjustment::bh ? p.p_adjusted : p.result.p_value;
        if (used <= alpha) ++out.n_significant;
    }
    return out;
}

double EffectProfile::at(int cluster, const std::string& feature) const {
    auto it = std::find(features.begin(), features.end(), feature);
    if (it == features.end()) throw Error(Errc::invalid_argument, "no feature '" + feature + "' in profile");
    return d(it - features.begin(), cluster_column(cluster));
}

Index EffectProfile::cluster_column(int cluster) const {
    auto it = std::find(clusters.begin(), clusters.end(), cluster);
    if (it == clusters.end()) throw Error(Errc::invalid_argument, "no cluster " + std::to_string(cluster) + " in profile");
    return it - clusters.begin();
}

EffectProfile effect_profile(const MatrixXd& values, std::span<const std::string> names, std::span<const int> labels,
                             int m) {
    if (static_cast<Index>(names.size()) != values.cols() || static_cast<Index>(labels.size()) != values.rows()) {
        throw Error(Errc::invalid_argument, "effect_profile: shape mismatch");
    }
    EffectProfile out;
    out.features.assign(names.begin(), names.end());
    const std::set<int> clusters(labels.begin(), labels.end());
    if (clusters.size() < 2) {
        throw Error(Errc::degenerate_groups, "effect_profile needs at least 2 clusters");
    }
    out.clusters.assign(clusters.begin(), clusters.end());
    out.d.resize(values.cols(), static_cast<Index>(out.clusters.size()));

    for (std::size_t k = 0; k < out.clusters.size(); ++k) {
        std::vector<Index> in_rows, out_rows;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            (labels[i] == out.clusters[k] ? in_rows : out_rows).push_back(static_cast<Index>(i));
        }
        for (Index f = 0; f < values.cols(); ++f) {
            VectorXd a(static_cast<Index>(in_rows.size())), b(static_cast<Index>(out_rows.size()));
            for (std::size_t i = 0; i < in_rows.size(); ++i) a[static_cast<Index>(i)] = values(in_rows[i], f);
            for (std::size_t i = 0; i < out_rows.size(); ++i) b[static_cast<Index>(i)] = values(out_rows[i], f);
            out.d(f, static_cast<Index>(k)) = cohens_d(a, b);
        }

        std::vector<std::size_t> order(names.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            const double ax = std::abs(out.d(static_cast<Index>(x), static_cast<Index>(k)));
            const double ay = std::abs(out.d(static_cast<Index>(y), static_cast<Index>(k)));
            return ax > ay || (ax == ay && names[x] < names[y]);
        });
        order.resize(std::min<std::size_t>(static_cast<std::size_t>(std::max(m, 0)), order.size()));
        out.top[out.clusters[k]] = std::move(order);
    }
    return out;
}

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::HAT: return "HAT";
        case Tier::MAT: return "MAT";
        case Tier::LAT: return "LAT";
    }
    return "LAT";
}

TierAssignment assign_tiers(const std::map<int, double>& medians, double t1, double t2) {
    if (!(t1 < t2)) {
        throw Error(Errc::bad_thresholds, "tier thresholds need t1 < t2");
    }
    TierAssignment out;
    out.t1 = t1;
    out.t2 = t2;
    out.medians = medians;
    for (const auto& [cluster, med] : medians) {
        out.tiers[cluster] = med < t1 ? Tier::LAT : (med < t2 ? Tier::MAT : Tier::HAT);
        out.order.push_back(cluster);
    }
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](int a, int b) { return medians.at(a) > medians.at(b); });
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw Error(Errc::invalid_argument, "median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(Errc::invalid_argument, "spearman: need equal lengths >= 2");
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const Eigen::Map<const VectorXd> a(rx.data(), static_cast<Index>(rx.size()));
    const Eigen::Map<const VectorXd> b(ry.data(), static_cast<Index>(ry.size()));
    const VectorXd ca = a.array() - a.mean();
    const VectorXd cb = b.array() - b.mean();
    const double denom = ca.norm() * cb.norm();
    if (denom == 0) return 0.0;
    return std::clamp(ca.dot(cb) / denom, -1.0, 1.0);
}

TrendTable trend_table(const EffectProfile& profile, const std::vector<int>& ordering) {
    if (std::set<int>(ordering.begin(), ordering.end()) != std::set<int>(profile.clusters.begin(), profile.clusters.end()) ||
        ordering.size() != profile.clusters.size()) {
        throw Error(Errc::invalid_argument, "trend_table: ordering must list each profiled cluster once");
    }
    TrendTable out;
    out.features = profile.features;
    out.ordering = ordering;
    out.d.resize(profile.d.rows(), static_cast<Index>(ordering.size()));
    for (std::size_t k = 0; k < ordering.size(); ++k) {
        out.d.col(static_cast<Index>(k)) = profile.d.col(profile.cluster_column(ordering[k]));
    }
    out.spearman.resize(out.d.rows());
    std::vector<double> position(ordering.size());
    std::iota(position.begin(), position.end(), 1.0);
    for (Index f = 0; f < out.d.rows(); ++f) {
        std::vector<double> row(ordering.size());
        for (std::size_t k = 0; k < ordering.size(); ++k) row[k] = out.d(f, static_cast<Index>(k));
        out.spearman[f] = ordering.size() < 2 ? 0.0 : spearman(position, row);
    }
    return out;
}

std::vector<ClusterComposition> cluster_composition(std::span<const int> labels, std::span<const std::string> values) {
    if (labels.size() != values.size()) {
        throw Error(Errc::invalid_argument, "cluster_composition: metadata must cover every clustered row");
    }
    std::map<int, std::map<std::string, Index>> counts;
    for (std::size_t i = 0; i < labels.size(); ++i) ++counts[labels[i]][values[i]];
    std::vector<ClusterComposition> out;
    for (const auto& [cluster, by_value] : counts) {
        ClusterComposition c;
        c.cluster = cluster;
        for (const auto& [value, count] : by_value) {
            c.counts.emplace_back(value, count);
            c.size += count;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<int> relabel_by_median(const std::map<int, std::vector<Index>>& clusters, const VectorXd& target, Index n) {
    std::vector<std::pair<double, int>> ranked;
    for (const auto& [community, members] : clusters) {
        std::vector<double> values;
        for (Index i : members) values.push_back(target[i]);
        ranked.emplace_back(median(values), community);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::vector<int> out(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        for (Index i : clusters.at(ranked[k].second)) out[static_cast<std::size_t>(i)] = static_cast<int>(k) + 1;
    }
    return out;
}

std::string permanova_to_json(const PermanovaResult& r) {
    nlohmann::json doc{{"test", "PERMANOVA"},
                       {"n", r.n},
                       {"n_groups", r.n_groups},
                       {"pseudo_f", std::isinf(r.pseudo_f) ? nlohmann::json("inf") : nlohmann::json(r.pseudo_f)},
                       {"p_value", r.p_value},
                       {"n_permutations", r.n_permutations},
                       {"exact", r.exact},
                       {"ss_total", r.ss_total},
                       {"ss_within", r.ss_within},
                       {"ss_between", r.ss_between}};
    return doc.dump(2) + "\n";
}

std::string pairwise_to_csv(const PairwiseResults& results) {
    csv::Writer out;
    out.row({"i", "j", "F", "p", "p_adj", "neg_log10_p"});
    for (const auto& p : results.pairs) {
        const bool adjusted = results.adjustment == Adjustment::bh;
        const double used = adjusted ? p.p_adjusted : p.result.p_value;
        out.row({std::to_string(p.group_a), std::to_string(p.group_b), format_double(p.result.pseudo_f),
                 format_double(p.result.p_value), adjusted ? format_double(p.p_adjusted) : "",
                 format_double(-std::log10(used))});
    }
    return out.str();
}

std::string effects_to_csv(const EffectProfile& profile) {
    csv::Writer out;
    out.row({"cluster", "feature", "d", "rank"});
    for (std::size_t k = 0; k < profile.clusters.size(); ++k) {
        const int cluster = profile.clusters[k];
        const auto& top = profile.top.at(cluster);
        for (std::size_t f = 0; f < profile.features.size(); ++f) {
            auto it = std::find(top.begin(), top.end(), f);
            out.row({std::to_string(cluster), profile.features[f],
                     format_double(profile.d(static_cast<Index>(f), static_cast<Index>(k))),
                     it == top.end() ? "" : std::to_string(it - top.begin() + 1)});
        }
    }
    return out.str();
}

std::string tiers_to_csv(const TierAssignment& tiers) {
    csv::Writer out;
    out.row({"cluster", "median", "tier"});
    for (int cluster : tiers.order) {
        out.row({std::to_string(cluster), format_double(tiers.medians.at(cluster)),
                 std::string(to_string(tiers.tiers.at(cluster)))});
    }
    return out.str();
}

std::string trends_to_csv(const TrendTable& trends) {
    csv::Writer out;
    std::vector<std::string> header{"feature"};
    for (int c : trends.ordering) header.push_back("cluster_" + std::to_string(c));
    header.push_back("spearman");
    out.row(header);
    for (Index f = 0; f < trends.d.rows(); ++f) {
        std::vector<std::string> cells{trends.features[static_cast<std::size_t>(f)]};
        for (Index k = 0; k < trends.d.cols(); ++k) cells.push_back(format_double(trends.d(f, k)));
        cells.push_back(format_double(trends.spearman[f]));
        out.row(cells);
    }
    return out.str();
}

std::string composition_to_csv(const std::vector<ClusterComposition>& composition) {
    csv::Writer out;
    out.row({"cluster", "size", "value", "count"});
    for (const auto& c : composition) {
        for (const auto& [value, count] : c.counts) {
            out.row({std::to_string(c.cluster), std::to_string(c.size), value, std::to_string(count)});
        }
    }
    return out.str();
}

}  // namespace gowergraph
