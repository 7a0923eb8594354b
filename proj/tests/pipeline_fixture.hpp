#pragma once

// Writes a planted-blob dataset to disk and returns a config that runs the
// whole pipeline on it.

#include <filesystem>

#include "gowergraph/csv.hpp"
#include "gowergraph/dataset.hpp"
#include "gowergraph/pipeline.hpp"
#include "gowergraph/synthetic.hpp"

namespace fixture {

struct PipelineCase {
    gowergraph::SyntheticData data;
    gowergraph::PipelineConfig config;
};

inline PipelineCase pipeline_case(const std::filesystem::path& dir, std::uint64_t seed,
                                  const gowergraph::SyntheticSpec& base = {}) {
    namespace gg = gowergraph;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    gg::SyntheticSpec spec = base;
    spec.seed = seed;
    PipelineCase out{gg::generate_synthetic(spec), {}};
    gg::write_file(dir / "data.csv", gg::table_to_csv(out.data.table, out.data.schema));
    gg::write_file(dir / "schema.json", out.data.schema.to_json());
    out.config.input = dir / "data.csv";
    out.config.schema = dir / "schema.json";
    out.config.output = dir / "out";
    out.config.seed = seed;
    return out;
}

}  // namespace fixture
