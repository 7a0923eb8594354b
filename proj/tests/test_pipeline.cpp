#include "doctest.h"

#include <fstream>
#include <set>

#include "oracles.hpp"
#include "pipeline_fixture.hpp"

using namespace gowergraph;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("gowergraph_pipeline_" + name); }

std::set<std::string> files_in(const fs::path& dir) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out.insert(fs::relative(e.path(), dir).generic_string());
    }
    return out;
}

/// Fast settings for tests that do not care about the model sweep.
PipelineConfig quick(PipelineConfig c) {
    c.weights.models = {RidgeParams{}};
    c.n_permutations = 99;
    return c;
}

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::io;
}

}  // namespace

TEST_CASE("full run writes every declared output and a matching manifest") {
    const auto dir = scratch("smoke");
    const auto pc = fixture::pipeline_case(dir, 3);
    const auto manifest = run_pipeline(pc.config);
    CHECK(manifest.total_rows == 60);
    CHECK(manifest.clustered_rows + manifest.excluded_rows == 60);
    CHECK(manifest.n_clusters >= 2);
    CHECK(manifest.timings.size() == 5);

    std::set<std::string> declared;
    for (const auto& stage : stage_names()) {
        for (const auto& f : stage_outputs(stage, pc.config)) declared.insert(f);
    }
    auto present = files_in(pc.config.output);
    CHECK(present.erase("manifest.json") == 1);
    CHECK(present == declared);
    std::set<std::string> summed;
    for (const auto& [file, sum] : manifest.checksums) {
        summed.insert(file);
        CHECK(sum.rfind("fnv1a64:", 0) == 0);
    }
    CHECK(summed == declared);
    CHECK(verify_manifest(pc.config.output).empty());

    SUBCASE("verify reports tampering") {
        const auto out = pc.config.output;
        std::ofstream(out / "tiers.csv", std::ios::app) << "x\n";
        fs::remove(out / "edges.csv");
        std::ofstream(out / "stray.txt") << "hi\n";
        const auto problems = verify_manifest(out);
        CHECK(problems == std::vector<std::string>{"missing: edges.csv", "modified: tiers.csv", "unexpected: stray.txt"});
    }
    fs::remove_all(dir);
}

TEST_CASE("config parsing and validation") {
    const auto dir = scratch("config");
    auto pc = fixture::pipeline_case(dir, 1);
    validate(pc.config);

    auto c = pc.config;
    c.k_min = 10;
    c.k_max = 4;
    CHECK(code_of([&] { validate(c); }) == Errc::config);
    c = pc.config;
    c.t1 = 30;
    CHECK(code_of([&] { validate(c); }) == Errc::config);
    c = pc.config;
    c.input = dir / "absent.csv";
    CHECK(code_of([&] { validate(c); }) == Errc::config);

    CHECK(code_of([&] { parse_config("{", dir); }) == Errc::config);
    CHECK(code_of([&] { parse_config(R"({"input": "data.csv"})", dir); }) == Errc::config);
    CHECK(code_of([&] { parse_config(R"({"seed": 1, "weights": {"source": "guess"}})", dir); }) == Errc::config);
    CHECK(code_of([&] { parse_config(R"({"seed": "one"})", dir); }) == Errc::config);

    const auto parsed = parse_config(R"({"input": "data.csv", "schema": "schema.json", "output": "o", "seed": 9,
        "k_max": 12, "tiers": {"t1": 10, "t2": 20}, "flags": {"bh_adjust": false},
        "weights": {"source": "schema", "models": ["ridge"]}})",
                                     dir);
    CHECK(parsed.input == dir / "data.csv");
    CHECK(parsed.seed == 9);
    CHECK(parsed.k_max == 12);
    CHECK(parsed.t1 == 10);
    CHECK_FALSE(parsed.bh_adjust);
    CHECK(parsed.weights.source == WeightSource::schema);
    CHECK(parsed.weights.models.size() == 1);
    validate(parsed);
    const auto round = parse_config(config_to_json(parsed), dir);
    CHECK(config_to_json(round) == config_to_json(parsed));
    fs::remove_all(dir);
}

TEST_CASE("stages run individually against upstream artifacts") {
    const auto dir = scratch("stages");
    const auto pc = fixture::pipeline_case(dir, 4);
    const auto config = quick(pc.config);

    CHECK(code_of([&] { run_stage("similarity", config); }) == Errc::missing_upstream);
    run_stage("dataset", config);
    const auto after_dataset = files_in(config.output);
    CHECK(code_of([&] { run_stage("network", config); }) == Errc::missing_upstream);

    const auto weights = run_stage("weights", config);
    CHECK(weights.files == std::vector<std::string>{"weights.json"});
    auto added = files_in(config.output);
    for (const auto& f : after_dataset) added.erase(f);
    CHECK(added == std::set<std::string>{"weights.json"});

    run_stage("similarity", config);
    run_stage("network", config);
    run_stage("inference", config);
    const auto before = checksum_tree(config.output);

    SUBCASE("re-running inference with new thresholds touches only its outputs") {
        auto changed = config;
        changed.t1 = 1;
        changed.t2 = 2;
        run_stage("inference", changed);
        const auto after = checksum_tree(config.output);
        const auto inference_files = stage_outputs("inference", config);
        const std::set<std::string> owned(inference_files.begin(), inference_files.end());
        for (const auto& [file, sum] : before) {
            if (!owned.count(file)) CHECK(after.at(file) == sum);
        }
        CHECK(after.at("tiers.csv") != before.at("tiers.csv"));
    }
    SUBCASE("a failing stage names itself") {
        write_file(config.output / "partition.csv", "id,community,cluster\nnobody,1,1\n");
        try {
            run_stage("inference", config);
            FAIL("inference ran on a foreign partition");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::stage_failure);
            CHECK(std::string(e.what()).find("inference") != std::string::npos);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("weights from the schema and from a file") {
    const auto dir = scratch("weights");
    const auto pc = fixture::pipeline_case(dir, 5);
    auto config = quick(pc.config);
    config.weights.source = WeightSource::schema;
    run_stage("dataset", config);
    run_stage("weights", config);
    const auto schema_weights = read_file(config.output / "weights.json");

    auto imported = config;
    imported.weights.source = WeightSource::import;
    imported.weights.import_path = dir / "w.json";
    write_file(dir / "w.json", schema_weights);
    run_stage("weights", imported);
    CHECK(read_file(config.output / "weights.json").find("imported") != std::string::npos);

    WeightVector partial;
    partial.weights = {{"x1", 1.0}};
    write_file(dir / "w.json", weights_to_json(partial));
    try {
        run_stage("weights", imported);
        FAIL("partial weights accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::stage_failure);
        CHECK(std::string(e.what()).find("FeatureSetMismatch") != std::string::npos);
    }
    write_file(dir / "w.json", "{");
    CHECK(code_of([&] { run_stage("weights", imported); }) == Errc::config);
    fs::remove_all(dir);
}

TEST_CASE("output trees do not depend on the thread count") {
    const auto dir = scratch("threads");
    auto pc = fixture::pipeline_case(dir, 6);
    auto config = quick(pc.config);
    config.threads = 1;
    config.output = dir / "t1";
    const auto one = run_pipeline(config);
    config.threads = 8;
    config.output = dir / "t8";
    const auto eight = run_pipeline(config);
    CHECK(one.checksums == eight.checksums);
    fs::remove_all(dir);
}

TEST_CASE("synthetic generator") {
    SyntheticSpec spec;
    spec.seed = 12;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(table_to_csv(a.table, a.schema) == table_to_csv(b.table, b.schema));
    CHECK(a.labels == b.labels);
    CHECK(a.labels.size() == 60);
    spec.seed = 13;
    const auto c = generate_synthetic(spec);
    CHECK(table_to_csv(a.table, a.schema) != table_to_csv(c.table, c.schema));

    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int t = 0; t < 30; ++t) {
        std::vector<int> x(25), y(25);
        for (auto& v : x) v = pick(rng);
        for (auto& v : y) v = pick(rng);
        CHECK(adjusted_rand_index(x, y) == doctest::Approx(oracle::ari(x, y)).epsilon(1e-12));
    }
    CHECK(adjusted_rand_index(std::vector<int>{0, 0, 1, 1}, std::vector<int>{5, 5, 2, 2}) == 1.0);
}
