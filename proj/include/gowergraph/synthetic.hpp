#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gowergraph/core.hpp"
#include "gowergraph/dataset.hpp"

namespace gowergraph {

struct SyntheticSpec {
    std::vector<Index> sizes{20, 20, 20};
    int n_numeric = 6;
    int n_categorical = 2;
    int n_levels = 3;
    /// Distance between blob centers, in units of the within-blob noise SD.
    double shift = 6.0;
    /// Probability that a categorical cell takes its blob's home level.
    double alignment = 0.9;
    double noise = 1.0;
    /// Per-blob target rate per 10,000; cycled when shorter than `sizes`.
    std::vector<double> base_rates{40, 20, 5};
    /// Relative SD of a row's rate around its blob's base rate.
    double rate_noise = 0.05;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Table table;
    FeatureSchema schema{{{"id", ColumnKind::categorical, ColumnRole::id},
                          {"count", ColumnKind::numeric, ColumnRole::target},
                          {"x1", ColumnKind::numeric, ColumnRole::feature}}};
    /// Planted blob of each row, from 0.
    std::vector<int> labels;
};

/// Mixed-type table with planted blobs. Numeric feature f of blob b is
/// centered at shift * ((b + f) mod blobs); categorical cells favor level
/// (b + f) mod n_levels. The target is a count over a population column whose
/// rate scatters around the blob's base rate, so it correlates with every
/// feature through blob membership. A "state" metadata column carries no
/// signal.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace gowergraph
