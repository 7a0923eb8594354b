#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gowergraph/core.hpp"
#include "gowergraph/similarity.hpp"

namespace gowergraph {

struct PermanovaResult {
    double pseudo_f = 0;
    double p_value = 1;
    /// Permutations drawn, or arrangements enumerated when `exact`.
    Index n_permutations = 0;
    Index n = 0;
    int n_groups = 0;
    double ss_total = 0;
    double ss_within = 0;
    double ss_between = 0;
    bool exact = false;
};

struct PermanovaOptions {
    Index n_permutations = 999;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Enumerate every distinct relabeling when n <= exact_max_n and the
    /// number of arrangements is at most exact_max_arrangements.
    Index exact_max_n = 10;
    std::uint64_t exact_max_arrangements = 50000;
};

/// One-way PERMANOVA on a dissimilarity matrix. `labels[i]` is the group of
/// row i; group names are arbitrary integers.
PermanovaResult permanova(const DissimilarityMatrix<double>& D, std::span<const int> labels,
                          const PermanovaOptions& options = {});

enum class Adjustment { none, bh };

struct PairwiseComparison {
    int group_a = 0;
    int group_b = 0;
    PermanovaResult result;
    double p_adjusted = std::nan("");
};

struct PairwiseResults {
    std::vector<PairwiseComparison> pairs;
    Adjustment adjustment = Adjustment::none;
    double alpha = 0.05;
    int n_significant = 0;
};

/// PERMANOVA on the rows of every unordered pair of groups, with the pair's
/// seed derived from (seed, a, b).
PairwiseResults pairwise_permanova(const DissimilarityMatrix<double>& D, std::span<const int> labels,
                                   const PermanovaOptions& options = {}, Adjustment adjust = Adjustment::none,
                                   double alpha = 0.05);

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
std::vector<double> benjamini_hochberg(std::span<const double> p_values);

/// Standardized mean difference with pooled sample SD; positive when `in`
/// exceeds `out`. Zero pooled variance gives +/-inf, or 0 for equal means.
template <typename DerivedA, typename DerivedB>
double cohens_d(const Eigen::DenseBase<DerivedA>& in, const Eigen::DenseBase<DerivedB>& out) {
    const Index n1 = in.size();
    const Index n2 = out.size();
    if (n1 < 2 || n2 < 2) {
        throw Error(Errc::insufficient_samples, "cohens_d: each side needs at least 2 values");
    }
    const double m1 = static_cast<double>(in.sum()) / static_cast<double>(n1);
    const double m2 = static_cast<double>(out.sum()) / static_cast<double>(n2);
    const double ss1 = (in.derived().array().template cast<double>() - m1).square().sum();
    const double ss2 = (out.derived().array().template cast<double>() - m2).square().sum();
    const double pooled = std::sqrt((ss1 + ss2) / static_cast<double>(n1 + n2 - 2));
    const double delta = m1 - m2;
    if (pooled == 0) {
        if (delta == 0) return 0.0;
        return delta > 0 ? infinity : -infinity;
    }
    return delta / pooled;
}

struct EffectProfile {
    std::vector<std::string> features;
    std::vector<int> clusters;
    /// features.size() x clusters.size(); column k belongs to clusters[k].
    MatrixXd d;
    /// Per cluster: feature indices of the top-m by |d| (ties by name).
    std::map<int, std::vector<std::size_t>> top;

    double at(int cluster, const std::string& feature) const;
    Index cluster_column(int cluster) const;
};

/// Cohen's d of every column for each cluster against all other rows.
/// `labels[i]` is row i's cluster.
EffectProfile effect_profile(const MatrixXd& values, std::span<const std::string> names, std::span<const int> labels,
                             int m = 4);

enum class Tier { HAT, MAT, LAT };
std::string_view to_string(Tier tier);

struct TierAssignment {
    double t1 = 13;
    double t2 = 27;
    std::map<int, double> medians;
    std::map<int, Tier> tiers;
    /// Clusters by descending median (ties by label).
    std::vector<int> order;
};

/// LAT below t1, MAT in [t1, t2), HAT at or above t2.
TierAssignment assign_tiers(const std::map<int, double>& medians, double t1 = 13, double t2 = 27);

double median(std::vector<double> values);

struct TrendTable {
    std::vector<std::string> features;
    std::vector<int> ordering;
    MatrixXd d;
    /// Spearman correlation of cluster position in `ordering` with d; 0 when
    /// either side is constant.
    VectorXd spearman;
};

TrendTable trend_table(const EffectProfile& profile, const std::vector<int>& ordering);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct ClusterComposition {
    int cluster = 0;
    Index size = 0;
    std::vector<std::pair<std::string, Index>> counts;
};

/// Per-cluster counts of a metadata column, sorted by value.
std::vector<ClusterComposition> cluster_composition(std::span<const int> labels, std::span<const std::string> values);

/// Cluster labels 1..C ordered by descending median target, ties by the
/// lower original community; 0 for rows outside every retained cluster.
std::vector<int> relabel_by_median(const std::map<int, std::vector<Index>>& clusters, const VectorXd& target, Index n);

std::string permanova_to_json(const PermanovaResult& result);
std::string pairwise_to_csv(const PairwiseResults& results);
std::string effects_to_csv(const EffectProfile& profile);
std::string tiers_to_csv(const TierAssignment& tiers);
std::string trends_to_csv(const TrendTable& trends);
std::string composition_to_csv(const std::vector<ClusterComposition>& composition);

}  // namespace gowergraph
