#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gowergraph/core.hpp"
#include "gowergraph/models.hpp"
#include "gowergraph/weights.hpp"

namespace gowergraph {

inline constexpr const char* tool_version = "0.1.0";

enum class WeightSource { derive, import, schema };

struct WeightsConfig {
    WeightSource source = WeightSource::derive;
    std::vector<ModelConfig> models{RidgeParams{}, ForestParams{}, GbrtParams{}};
    CVPlan cv;
    int permutation_repeats = 5;
    std::filesystem::path import_path;
};

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path schema;
    WeightsConfig weights;
    Index k_min = 2;
    /// Clamped to n - 1 at run time.
    Index k_max = 30;
    Index min_cluster_size = 5;
    double t1 = 13;
    double t2 = 27;
    Index n_permutations = 999;
    std::uint64_t seed = 0;
    std::filesystem::path output;
    int threads = 1;
    bool log_target = false;
    bool strict_missing = true;
    bool bh_adjust = false;
    /// Metadata column tabulated per cluster; the first metadata column when unset.
    std::optional<std::string> composition_column;
    int top_m = 4;
    bool emit_matrix_csv = false;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Throws Errc::config on malformed or invalid values.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
/// Checks invariants that do not need the data: required fields, ranges,
/// referenced paths present.
void validate(const PipelineConfig& config);
std::string config_to_json(const PipelineConfig& config);

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"dataset", "weights", "similarity", "network", "inference"};
    return names;
}

/// Files a stage writes, relative to the output directory.
std::vector<std::string> stage_outputs(const std::string& stage, const PipelineConfig& config);

struct StageResult {
    std::string stage;
    std::vector<std::string> files;
    double seconds = 0;
};

/// Runs one stage against the artifacts already in config.output. Throws
/// Errc::missing_upstream when an upstream artifact is absent, and wraps any
/// other failure as Errc::stage_failure naming the stage.
StageResult run_stage(const std::string& stage, const PipelineConfig& config);

struct RunManifest {
    std::string config_json;
    std::map<std::string, double> timings;
    Index total_rows = 0;
    Index clustered_rows = 0;
    Index excluded_rows = 0;
    Index selected_k = 0;
    int n_clusters = 0;
    std::string version = tool_version;
    /// Relative path -> "fnv1a64:<hex>" for every file except the manifest.
    std::map<std::string, std::string> checksums;
};

RunManifest run_pipeline(const PipelineConfig& config);

std::string manifest_to_json(const RunManifest& manifest);
/// Checksums of every regular file below `dir` except manifest.json.
std::map<std::string, std::string> checksum_tree(const std::filesystem::path& dir);
/// Problems found re-checking dir/manifest.json; empty when everything matches.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace gowergraph
