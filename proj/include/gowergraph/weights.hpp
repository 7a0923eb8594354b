#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gowergraph/core.hpp"
#include "gowergraph/models.hpp"

namespace gowergraph {

struct CVPlan {
    int folds = 5;
    int repeats = 5;
    int max_bins = 10;
    std::uint64_t seed = 0;
};

struct Split {
    int repeat = 0;
    int fold = 0;
    std::vector<Index> train;
    std::vector<Index> validation;
};

/// Repeated stratified k-fold. Each repeat shuffles rows from (seed, repeat),
/// orders them by bin, and deals them round-robin to folds, so every fold
/// holds within one row of its share of each bin.
std::vector<Split> make_splits(std::span<const int> bins, const CVPlan& plan);
/// Bins the target with quantile_bins(target, plan.max_bins) first.
std::vector<Split> make_splits(const VectorXd& target, const CVPlan& plan);

struct Metrics {
    double r2 = 0;
    double mae = 0;
    double rmse = 0;
};

template <typename DerivedA, typename DerivedB>
Metrics metrics(const Eigen::MatrixBase<DerivedA>& truth, const Eigen::MatrixBase<DerivedB>& predicted) {
    if (truth.size() == 0 || truth.size() != predicted.size()) {
        throw Error(Errc::invalid_argument, "metrics: need equal nonzero lengths");
    }
    const double mean = truth.mean();
    const double ss_tot = (truth.array() - mean).square().sum();
    if (ss_tot == 0) {
        throw Error(Errc::zero_variance_truth, "metrics: R^2 undefined for constant truth");
    }
    const auto error = (truth - predicted).array();
    const double ss_res = error.square().sum();
    const auto n = static_cast<double>(truth.size());
    return {1.0 - ss_res / ss_tot, error.abs().sum() / n, std::sqrt(ss_res / n)};
}

struct MetricsSummary {
    std::vector<Metrics> splits;
    Metrics mean;
    Metrics std;
};

MetricsSummary summarize(std::vector<Metrics> splits);

struct FeatureImportance {
    double mean = 0;
    double std = 0;
};

/// R^2 drop per column when that column alone is shuffled, averaged over
/// `repeats` permutations drawn from (seed, column, repeat). std is across
/// the repeats.
std::vector<FeatureImportance> permutation_importance(const Model& model, const MatrixXd& X_val, const VectorXd& y_val,
                                                      int repeats, std::uint64_t seed);

struct ModelImportance {
    std::string model;
    std::vector<std::string> columns;
    /// Mean and population std across the folds x repeats splits.
    std::vector<FeatureImportance> values;
    MetricsSummary metrics;
};

struct CrossValidationOptions {
    int permutation_repeats = 5;
    int threads = 1;
};

/// Fits `config` on every split and scores permutation importance on the
/// validation fold. Split randomness comes from (plan.seed, model, repeat,
/// fold), so results are identical at any thread count.
ModelImportance cross_validate(const ModelConfig& config, const MatrixXd& X, const VectorXd& y,
                               std::span<const std::string> columns, std::span<const Split> splits,
                               std::uint64_t seed, const CrossValidationOptions& options = {});

enum class WeightProvenance { derived, imported };

struct WeightVector {
    std::map<std::string, double> weights;
    WeightProvenance provenance = WeightProvenance::derived;

    double at(const std::string& feature) const;
    void validate() const;
};

struct AveragedImportance {
    /// Feature-wise mean of the selected models' means, per design column.
    std::map<std::string, double> per_column;
    /// Clamped at zero and summed into parent features, before renormalizing.
    std::map<std::string, double> folded;
    WeightVector weights;
};

/// `parents` maps each design column to the feature it came from. `models`
/// selects which tables to average; empty selects all.
AveragedImportance average_importance(std::span<const ModelImportance> tables, std::span<const std::string> models,
                                      const std::map<std::string, std::string>& parents);

/// 1 / (1 - R^2) of each column regressed (OLS with intercept) on the others;
/// perfect collinearity gives +inf.
VectorXd vif(const MatrixXd& X);

/// Pearson correlation; entries involving a constant column are NaN except
/// the unit diagonal.
MatrixXd correlation_matrix(const MatrixXd& X);

std::string weights_to_json(const std::vector<ModelImportance>& tables, const AveragedImportance& averaged,
                            std::uint64_t seed);
std::string weights_to_json(const WeightVector& weights);
/// Reads the "averaged" object of a weights document.
WeightVector weights_from_json(std::string_view text, WeightProvenance provenance = WeightProvenance::imported);

}  // namespace gowergraph
