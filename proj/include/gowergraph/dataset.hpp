#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gowergraph/core.hpp"

namespace gowergraph {

enum class ColumnKind { numeric, categorical };
enum class ColumnRole { feature, target, population, id, metadata };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(ColumnRole role);

struct SchemaEntry {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    ColumnRole role = ColumnRole::feature;
    double weight = 1.0;
};

/// Column declarations. Construction validates: unique names, exactly one
/// target and one id, at most one population column, at least one feature,
/// nonnegative weights.
class FeatureSchema {
public:
    explicit FeatureSchema(std::vector<SchemaEntry> entries);

    static FeatureSchema from_json(std::string_view text);
    static FeatureSchema load(const std::filesystem::path& path);
    std::string to_json() const;

    const std::vector<SchemaEntry>& entries() const { return entries_; }
    const SchemaEntry& at(std::string_view name) const;
    bool contains(std::string_view name) const;

    const SchemaEntry& id() const;
    const SchemaEntry& target() const;
    const SchemaEntry* population() const;
    std::vector<SchemaEntry> features() const;
    std::vector<SchemaEntry> metadata() const;

    /// The schema of a prepared table: population dropped, target stays numeric.
    FeatureSchema prepared() const;

private:
    std::vector<SchemaEntry> entries_;
};

using NumericColumn = std::vector<double>;
using CategoricalColumn = std::vector<std::string>;
using Column = std::variant<NumericColumn, CategoricalColumn>;
using ColumnMap = std::map<std::string, Column, std::less<>>;

class Table {
public:
    Table() = default;
    Table(std::vector<std::string> ids, ColumnMap columns);

    Index n_rows() const { return static_cast<Index>(ids_.size()); }
    const std::vector<std::string>& ids() const { return ids_; }
    const ColumnMap& columns() const { return columns_; }

    bool has(std::string_view name) const;
    const NumericColumn& numeric(std::string_view name) const;
    const CategoricalColumn& categorical(std::string_view name) const;
    void set(const std::string& name, Column column);
    void erase(const std::string& name);

    Table select_rows(std::span<const Index> rows) const;

private:
    void validate() const;

    std::vector<std::string> ids_;
    ColumnMap columns_;
};

enum class MissingPolicy { strict, drop };

struct LoadResult {
    Table table;
    Index dropped_rows = 0;
};

/// Cells that count as missing: empty, NA, NaN, nan, null.
bool is_missing_token(std::string_view cell);

LoadResult load_table(const std::filesystem::path& path, const FeatureSchema& schema,
                      MissingPolicy policy = MissingPolicy::strict);
LoadResult parse_table(const std::string& csv_text, const FeatureSchema& schema,
                       MissingPolicy policy = MissingPolicy::strict);
std::string table_to_csv(const Table& table, const FeatureSchema& schema);

/// Events per 10,000 population.
double normalize_target(double count, double population);

template <typename Scalar>
struct MinMaxScaled {
    Vector<Scalar> values;
    Scalar min;
    Scalar max;
};

template <typename Scalar>
Scalar minmax_transform(Scalar x, Scalar min, Scalar max) {
    return max > min ? (x - min) / (max - min) : Scalar(0);
}

template <typename Scalar>
Scalar minmax_inverse(Scalar scaled, Scalar min, Scalar max) {
    return scaled * (max - min) + min;
}

/// Min-max scaling to [0, 1]. A constant column maps to all zeros.
template <typename Derived>
MinMaxScaled<typename Derived::Scalar> scale_minmax(const Eigen::DenseBase<Derived>& column) {
    using Scalar = typename Derived::Scalar;
    if (column.size() == 0) {
        throw Error(Errc::invalid_argument, "scale_minmax: empty column");
    }
    if (!column.derived().array().isFinite().all()) {
        throw Error(Errc::invalid_argument, "scale_minmax: non-finite value");
    }
    const Scalar lo = column.minCoeff();
    const Scalar hi = column.maxCoeff();
    Vector<Scalar> out(column.size());
    for (Index i = 0; i < column.size(); ++i) {
        out[i] = minmax_transform<Scalar>(column.derived()(i), lo, hi);
    }
    return {std::move(out), lo, hi};
}

/// n x categories.size() indicator matrix; throws UnknownCategory.
MatrixXd one_hot(std::span<const std::string> column, std::span<const std::string> categories);

/// Sorted unique labels.
std::vector<std::string> category_levels(std::span<const std::string> column);

/// Quantile bin labels 0..b-1 with b <= max_bins. Edges sit at the empirical
/// quantiles k/max_bins (linear interpolation), duplicate edges are merged,
/// bins are left-open except the first, and empty bins are dropped so every
/// label is used.
std::vector<int> quantile_bins(std::span<const double> target, int max_bins = 10);

struct ScaleParams {
    double min = 0;
    double max = 0;
};

struct PrepareOptions {
    bool log_target = false;
};

/// Prepared data: numeric features scaled to [0,1], the target replaced by its
/// rate (never scaled), the population column consumed.
struct ScaledTable {
    Table table;
    std::map<std::string, ScaleParams> scale_params;
    std::map<std::string, std::vector<std::string>> onehot_map;

    VectorXd target(const FeatureSchema& schema) const;
};

ScaledTable prepare_table(const Table& raw, const FeatureSchema& schema, const PrepareOptions& options = {});

std::string scale_params_to_json(const ScaledTable& scaled);
/// Rebuilds a ScaledTable from its CSV + JSON audit artifacts.
ScaledTable read_scaled_table(const std::filesystem::path& csv_path, const std::filesystem::path& params_path,
                              const FeatureSchema& schema);

/// Model-ready matrix: scaled numeric features followed by one-hot indicators.
/// Indicator columns are named "<feature>_<level>".
struct DesignMatrix {
    MatrixXd values;
    std::vector<std::string> columns;
    std::vector<std::string> parents;
};

DesignMatrix design_matrix(const ScaledTable& scaled, const FeatureSchema& schema);

}  // namespace gowergraph
