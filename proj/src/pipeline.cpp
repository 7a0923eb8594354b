#include "gowergraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "json.hpp"

#include "gowergraph/csv.hpp"
#include "gowergraph/dataset.hpp"
#include "gowergraph/inference.hpp"
#include "gowergraph/network.hpp"
#include "gowergraph/similarity.hpp"

namespace gowergraph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
    if (!doc.contains(key) || doc[key].is_null()) return;
    try {
        out = doc[key].get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::config, std::string("config key '") + key + "': " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

ModelConfig parse_model(const json& weights, const std::string& name) {
    ModelConfig config;
    try {
        config = default_model(name);
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
    if (!weights.contains(name)) return config;
    const json& h = weights[name];
    if (!h.is_object()) throw Error(Errc::config, "config key '" + name + "' must be an object");
    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, RidgeParams>) {
                read_opt(h, "lambda", p.lambda);
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                read_opt(h, "n_trees", p.n_trees);
                read_opt(h, "max_depth", p.max_depth);
                read_opt(h, "min_leaf", p.min_leaf);
                read_opt(h, "feature_fraction", p.feature_fraction);
            } else {
                read_opt(h, "n_stages", p.n_stages);
                read_opt(h, "learning_rate", p.learning_rate);
                read_opt(h, "max_depth", p.max_depth);
                read_opt(h, "min_leaf", p.min_leaf);
            }
        },
        config);
    try {
        validate(config);
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
    return config;
}

json model_to_json(const ModelConfig& config) {
    return std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, RidgeParams>) {
                return {{"lambda", p.lambda}};
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                return {{"n_trees", p.n_trees},
                        {"max_depth", p.max_depth},
                        {"min_leaf", p.min_leaf},
                        {"feature_fraction", p.feature_fraction}};
            } else {
                return {{"n_stages", p.n_stages},
                        {"learning_rate", p.learning_rate},
                        {"max_depth", p.max_depth},
                        {"min_leaf", p.min_leaf}};
            }
        },
        config);
}

std::string_view source_name(WeightSource s) {
    switch (s) {
        case WeightSource::derive: return "derive";
        case WeightSource::import: return "import";
        case WeightSource::schema: return "schema";
    }
    return "derive";
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(Errc::config, "config must be a JSON object");

    PipelineConfig c;
    std::string input, schema, output;
    read_opt(doc, "input", input);
    read_opt(doc, "schema", schema);
    read_opt(doc, "output", output);
    c.input = resolve(base_dir, input);
    c.schema = resolve(base_dir, schema);
    c.output = resolve(base_dir, output);
    if (!doc.contains("seed")) throw Error(Errc::config, "config needs a 'seed'");
    read_opt(doc, "seed", c.seed);
    read_opt(doc, "k_min", c.k_min);
    read_opt(doc, "k_max", c.k_max);
    read_opt(doc, "min_cluster_size", c.min_cluster_size);
    read_opt(doc, "n_permutations", c.n_permutations);
    read_opt(doc, "threads", c.threads);
    read_opt(doc, "top_m", c.top_m);
    read_opt(doc, "emit_matrix_csv", c.emit_matrix_csv);
    if (doc.contains("composition_column") && !doc["composition_column"].is_null()) {
        std::string col;
        read_opt(doc, "composition_column", col);
        c.composition_column = col;
    }
    if (doc.contains("tiers")) {
        read_opt(doc["tiers"], "t1", c.t1);
        read_opt(doc["tiers"], "t2", c.t2);
    }
    if (doc.contains("flags")) {
        read_opt(doc["flags"], "log_target", c.log_target);
        read_opt(doc["flags"], "strict_missing", c.strict_missing);
        read_opt(doc["flags"], "bh_adjust", c.bh_adjust);
    }
    if (doc.contains("weights")) {
        const json& w = doc["weights"];
        std::string source = "derive";
        read_opt(w, "source", source);
        if (source == "derive") {
            c.weights.source = WeightSource::derive;
        } else if (source == "import") {
            c.weights.source = WeightSource::import;
        } else if (source == "schema") {
            c.weights.source = WeightSource::schema;
        } else {
            throw Error(Errc::config, "weights.source must be derive, import or schema");
        }
        std::string path;
        read_opt(w, "path", path);
        c.weights.import_path = resolve(base_dir, path);
        if (w.contains("models")) {
            std::vector<std::string> names;
            read_opt(w, "models", names);
            c.weights.models.clear();
            for (const auto& n : names) c.weights.models.push_back(parse_model(w, n));
        } else {
            for (auto& m : c.weights.models) m = parse_model(w, std::string(model_name(m)));
        }
        if (w.contains("cv")) {
            read_opt(w["cv"], "folds", c.weights.cv.folds);
            read_opt(w["cv"], "repeats", c.weights.cv.repeats);
            read_opt(w["cv"], "max_bins", c.weights.cv.max_bins);
        }
        read_opt(w, "permutation_repeats", c.weights.permutation_repeats);
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw Error(Errc::config, e.what());
    }
    return parse_config(text, path.parent_path());
}

void validate(const PipelineConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(Errc::config, msg); };
    if (c.input.empty() || !fs::exists(c.input)) fail("input file not found: '" + c.input.string() + "'");
    if (c.schema.empty() || !fs::exists(c.schema)) fail("schema file not found: '" + c.schema.string() + "'");
    if (c.output.empty()) fail("config needs an 'output' directory");
    if (c.k_min < 1) fail("k_min must be >= 1");
    if (c.k_min > c.k_max) fail("k_min must not exceed k_max");
    if (c.min_cluster_size < 2) fail("min_cluster_size must be >= 2");
    if (!(c.t1 < c.t2)) fail("tier thresholds need t1 < t2");
    if (c.n_permutations < 1) fail("n_permutations must be >= 1");
    if (c.threads < 1) fail("threads must be >= 1");
    if (c.top_m < 1) fail("top_m must be >= 1");
    if (c.weights.source == WeightSource::derive) {
        if (c.weights.models.empty()) fail("weights.models must list at least one model");
        if (c.weights.cv.folds < 2 || c.weights.cv.repeats < 1 || c.weights.cv.max_bins < 1) {
            fail("weights.cv needs folds >= 2, repeats >= 1, max_bins >= 1");
        }
        if (c.weights.permutation_repeats < 1) fail("weights.permutation_repeats must be >= 1");
    }
    if (c.weights.source == WeightSource::import &&
        (c.weights.import_path.empty() || !fs::exists(c.weights.import_path))) {
        fail("weights file not found: '" + c.weights.import_path.string() + "'");
    }
}

std::string config_to_json(const PipelineConfig& c) {
    json models = json::array();
    json w{{"source", source_name(c.weights.source)},
           {"cv", {{"folds", c.weights.cv.folds}, {"repeats", c.weights.cv.repeats}, {"max_bins", c.weights.cv.max_bins}}},
           {"permutation_repeats", c.weights.permutation_repeats}};
    for (const auto& m : c.weights.models) {
        models.push_back(model_name(m));
        w[std::string(model_name(m))] = model_to_json(m);
    }
    w["models"] = models;
    if (!c.weights.import_path.empty()) w["path"] = c.weights.import_path.string();
    json doc{{"input", c.input.string()},
             {"schema", c.schema.string()},
             {"output", c.output.string()},
             {"seed", c.seed},
             {"weights", w},
             {"k_min", c.k_min},
             {"k_max", c.k_max},
             {"min_cluster_size", c.min_cluster_size},
             {"tiers", {{"t1", c.t1}, {"t2", c.t2}}},
             {"n_permutations", c.n_permutations},
             {"threads", c.threads},
             {"top_m", c.top_m},
             {"emit_matrix_csv", c.emit_matrix_csv},
             {"flags", {{"log_target", c.log_target}, {"strict_missing", c.strict_missing}, {"bh_adjust", c.bh_adjust}}}};
    doc["composition_column"] = c.composition_column ? json(*c.composition_column) : json(nullptr);
    return doc.dump(2) + "\n";
}

std::vector<std::string> stage_outputs(const std::string& stage, const PipelineConfig& config) {
    if (stage == "dataset") {
        return {"scaled_table.csv", "scale_params.json", "dataset.json", "diagnostics_vif.csv",
                "diagnostics_correlation.csv"};
    }
    if (stage == "weights") return {"weights.json"};
    if (stage == "similarity") {
        std::vector<std::string> out{"dissimilarity.bin", "dissimilarity.json"};
        if (config.emit_matrix_csv) {
            out.push_back("dissimilarity.csv");
            out.push_back("similarity.csv");
        }
        return out;
    }
    if (stage == "network") {
        return {"ktrace.csv", "graph.graphml", "edges.csv", "partition.csv", "graph_summary.json"};
    }
    if (stage == "inference") {
        return {"permanova.json", "pairwise.csv", "effects.csv", "tiers.csv",
                "trends.csv",     "composition.csv", "clusters_target.csv"};
    }
    throw Error(Errc::config, "unknown stage '" + stage + "'");
}

namespace {

struct Context {
    const PipelineConfig& config;
    FeatureSchema schema;

    fs::path path(const std::string& name) const { return config.output / name; }

    fs::path upstream(const std::string& name) const {
        auto p = path(name);
        if (!fs::exists(p)) {
            throw Error(Errc::missing_upstream, "missing upstream artifact '" + name + "'");
        }
        return p;
    }

    std::uint64_t seed(const char* stage) const { return substream(config.seed, {tag(stage)}); }

    ScaledTable scaled() const {
        return read_scaled_table(upstream("scaled_table.csv"), upstream("scale_params.json"), schema);
    }
};

std::string table_csv(const std::vector<std::string>& names, const MatrixXd& values, const std::string& first) {
    csv::Writer out;
    std::vector<std::string> header{first};
    header.insert(header.end(), names.begin(), names.end());
    out.row(header);
    for (Index i = 0; i < values.rows(); ++i) {
        std::vector<std::string> cells{names[static_cast<std::size_t>(i)]};
        for (Index j = 0; j < values.cols(); ++j) cells.push_back(format_double(values(i, j)));
        out.row(cells);
    }
    return out.str();
}

void dataset_stage(const Context& ctx) {
    const auto policy = ctx.config.strict_missing ? MissingPolicy::strict : MissingPolicy::drop;
    const auto loaded = load_table(ctx.config.input, ctx.schema, policy);
    if (loaded.table.n_rows() < 3) {
        throw Error(Errc::too_few_rows, "need at least 3 rows after loading");
    }
    const auto scaled = prepare_table(loaded.table, ctx.schema, {ctx.config.log_target});
    write_file(ctx.path("scaled_table.csv"), table_to_csv(scaled.table, ctx.schema.prepared()));
    write_file(ctx.path("scale_params.json"), scale_params_to_json(scaled));

    std::vector<std::string> numeric;
    for (const auto& e : ctx.schema.features()) {
        if (e.kind == ColumnKind::numeric) numeric.push_back(e.name);
    }
    MatrixXd X(scaled.table.n_rows(), static_cast<Index>(numeric.size()));
    for (std::size_t f = 0; f < numeric.size(); ++f) {
        const auto& col = scaled.table.numeric(numeric[f]);
        X.col(static_cast<Index>(f)) = Eigen::Map<const VectorXd>(col.data(), X.rows());
    }
    csv::Writer vif_out;
    vif_out.row({"feature", "vif"});
    if (!numeric.empty()) {
        const VectorXd v = vif(X);
        for (std::size_t f = 0; f < numeric.size(); ++f) {
            vif_out.row({numeric[f], format_double(v[static_cast<Index>(f)])});
        }
    }
    write_file(ctx.path("diagnostics_vif.csv"), vif_out.str());
    write_file(ctx.path("diagnostics_correlation.csv"),
               table_csv(numeric, numeric.empty() ? MatrixXd() : correlation_matrix(X), "feature"));

    json info{{"rows_loaded", loaded.table.n_rows()},
              {"rows_dropped", loaded.dropped_rows},
              {"features", ctx.schema.features().size()},
              {"log_target", ctx.config.log_target}};
    write_file(ctx.path("dataset.json"), info.dump(2) + "\n");
}

void weights_stage(const Context& ctx) {
    const auto& wc = ctx.config.weights;
    if (wc.source == WeightSource::import) {
        auto weights = weights_from_json(read_file(wc.import_path));
        weights.provenance = WeightProvenance::imported;
        std::set<std::string> expected;
        for (const auto& e : ctx.schema.features()) expected.insert(e.name);
        std::set<std::string> got;
        for (const auto& [name, w] : weights.weights) got.insert(name);
        if (expected != got) {
            throw Error(Errc::feature_set_mismatch, "imported weights do not cover exactly the schema features");
        }
        write_file(ctx.path("weights.json"), weights_to_json(weights));
        return;
    }
    if (wc.source == WeightSource::schema) {
        WeightVector weights;
        for (const auto& e : ctx.schema.features()) weights.weights[e.name] = e.weight;
        weights.provenance = WeightProvenance::imported;
        weights.validate();
        write_file(ctx.path("weights.json"), weights_to_json(weights));
        return;
    }

    const auto scaled = ctx.scaled();
    const auto design = design_matrix(scaled, ctx.schema);
    const VectorXd y = scaled.target(ctx.schema);
    const auto seed = ctx.seed("weights");
    CVPlan plan = wc.cv;
    plan.seed = substream(seed, {tag("cv")});
    const auto splits = make_splits(y, plan);

    std::vector<ModelImportance> tables;
    for (const auto& model : wc.models) {
        log(LogLevel::debug, "weights: cross-validating " + std::string(model_name(model)));
        tables.push_back(cross_validate(model, design.values, y, design.columns, splits, seed,
                                        {wc.permutation_repeats, ctx.config.threads}));
    }
    std::map<std::string, std::string> parents;
    for (std::size_t c = 0; c < design.columns.size(); ++c) parents[design.columns[c]] = design.parents[c];
    const auto averaged = average_importance(tables, {}, parents);
    write_file(ctx.path("weights.json"), weights_to_json(tables, averaged, ctx.config.seed));
}

void similarity_stage(const Context& ctx) {
    const auto scaled = ctx.scaled();
    const auto weights = weights_from_json(read_file(ctx.upstream("weights.json")));
    const auto frame = mixed_frame(scaled, ctx.schema);
    const auto D = gower_matrix(frame, gower_weights(frame, weights), ctx.config.threads);
    write_dissimilarity(ctx.path("dissimilarity.bin"), ctx.path("dissimilarity.json"), D, scaled.table.ids());
    if (ctx.config.emit_matrix_csv) {
        write_file(ctx.path("dissimilarity.csv"), matrix_to_csv(D.matrix(), scaled.table.ids()));
        write_file(ctx.path("similarity.csv"), matrix_to_csv(to_similarity(D).matrix(), scaled.table.ids()));
    }
}

struct PartitionFile {
    std::vector<std::string> ids;
    std::vector<int> community;
    std::vector<int> cluster;
};

PartitionFile read_partition(const fs::path& path) {
    const auto doc = csv::read(path);
    if (doc.header != std::vector<std::string>{"id", "community", "cluster"}) {
        throw Error(Errc::io, path.string() + ": unexpected header");
    }
    PartitionFile out;
    for (const auto& row : doc.rows) {
        out.ids.push_back(row[0]);
        out.community.push_back(std::stoi(row[1]));
        out.cluster.push_back(std::stoi(row[2]));
    }
    return out;
}

void network_stage(const Context& ctx) {
    const auto loaded = read_dissimilarity(ctx.upstream("dissimilarity.bin"), ctx.upstream("dissimilarity.json"));
    const auto scaled = ctx.scaled();
    if (loaded.ids != scaled.table.ids()) {
        throw Error(Errc::io, "dissimilarity ids do not match the scaled table");
    }
    const Index n = loaded.matrix.size();
    const Index k_max = std::min(ctx.config.k_max, n - 1);
    if (ctx.config.k_min > k_max) {
        throw Error(Errc::k_out_of_range, "k_min exceeds n - 1 = " + std::to_string(n - 1));
    }
    const auto S = to_similarity(loaded.matrix);
    const auto seed = ctx.seed("network");
    const auto selection = select_k(S, ctx.config.k_min, k_max, seed, ctx.config.threads);
    const auto best = build_and_score(S, selection.best_k, seed, ctx.config.threads);
    const auto clusters = finalize(best.partition, ctx.config.min_cluster_size);
    const auto cluster = relabel_by_median(clusters.clusters, scaled.target(ctx.schema), n);

    write_file(ctx.path("ktrace.csv"), ktrace_to_csv(selection.traces));
    write_file(ctx.path("graph.graphml"), to_graphml(best.graph, loaded.ids, best.partition.assignment(), cluster));
    write_file(ctx.path("edges.csv"), edges_to_csv(best.graph, loaded.ids));
    csv::Writer part;
    part.row({"id", "community", "cluster"});
    for (Index i = 0; i < n; ++i) {
        part.row({loaded.ids[static_cast<std::size_t>(i)], std::to_string(best.partition[i]),
                  std::to_string(cluster[static_cast<std::size_t>(i)])});
    }
    write_file(ctx.path("partition.csv"), part.str());

    const auto s = graph_summary(best.graph);
    json summary{{"selected_k", selection.best_k},
                 {"modularity", best.trace.modularity},
                 {"score", best.trace.score},
                 {"n_communities", best.partition.n_communities()},
                 {"n_clusters", clusters.clusters.size()},
                 {"clustered_rows", n - static_cast<Index>(clusters.excluded.size())},
                 {"excluded_rows", clusters.excluded.size()},
                 {"n_nodes", s.n_nodes},
                 {"n_edges", s.n_edges},
                 {"average_degree", s.average_degree},
                 {"density", s.density},
                 {"isolate_fraction", s.isolate_fraction},
                 {"non_isolated_nodes", s.non_isolated_nodes},
                 {"non_isolated_average_degree", s.non_isolated_average_degree},
                 {"non_isolated_density", s.non_isolated_density}};
    write_file(ctx.path("graph_summary.json"), summary.dump(2) + "\n");
}

void inference_stage(const Context& ctx) {
    const auto loaded = read_dissimilarity(ctx.upstream("dissimilarity.bin"), ctx.upstream("dissimilarity.json"));
    const auto partition = read_partition(ctx.upstream("partition.csv"));
    const auto scaled = ctx.scaled();
    if (partition.ids != loaded.ids || partition.ids != scaled.table.ids()) {
        throw Error(Errc::io, "partition ids do not match upstream artifacts");
    }

    std::vector<Index> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < partition.cluster.size(); ++i) {
        if (partition.cluster[i] > 0) {
            rows.push_back(static_cast<Index>(i));
            labels.push_back(partition.cluster[i]);
        }
    }
    const auto m = static_cast<Index>(rows.size());
    MatrixXd sub(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) sub(a, b) = loaded.matrix(rows[static_cast<std::size_t>(a)], rows[static_cast<std::size_t>(b)]);
    }
    const DissimilarityMatrix<double> D(std::move(sub));

    const auto seed = ctx.seed("inference");
    PermanovaOptions opts;
    opts.n_permutations = ctx.config.n_permutations;
    opts.threads = ctx.config.threads;
    opts.seed = substream(seed, {tag("global")});
    const auto global = permanova(D, labels, opts);
    write_file(ctx.path("permanova.json"), permanova_to_json(global));

    opts.seed = substream(seed, {tag("pairwise")});
    const auto pairs =
        pairwise_permanova(D, labels, opts, ctx.config.bh_adjust ? Adjustment::bh : Adjustment::none);
    write_file(ctx.path("pairwise.csv"), pairwise_to_csv(pairs));

    const auto design = design_matrix(scaled, ctx.schema);
    MatrixXd values(m, design.values.cols());
    for (Index a = 0; a < m; ++a) values.row(a) = design.values.row(rows[static_cast<std::size_t>(a)]);
    const auto profile = effect_profile(values, design.columns, labels, ctx.config.top_m);
    write_file(ctx.path("effects.csv"), effects_to_csv(profile));

    const VectorXd target = scaled.target(ctx.schema);
    std::map<int, std::vector<double>> by_cluster;
    for (Index a = 0; a < m; ++a) by_cluster[labels[static_cast<std::size_t>(a)]].push_back(target[rows[static_cast<std::size_t>(a)]]);
    std::map<int, double> medians;
    for (const auto& [c, v] : by_cluster) medians[c] = median(v);
    const auto tiers = assign_tiers(medians, ctx.config.t1, ctx.config.t2);
    write_file(ctx.path("tiers.csv"), tiers_to_csv(tiers));
    write_file(ctx.path("trends.csv"), trends_to_csv(trend_table(profile, tiers.order)));

    std::optional<std::string> column = ctx.config.composition_column;
    if (!column) {
        const auto meta = ctx.schema.metadata();
        if (!meta.empty()) column = meta.front().name;
    }
    if (column) {
        const auto& entry = ctx.schema.at(*column);
        std::vector<std::string> cells;
        for (Index r : rows) {
            cells.push_back(entry.kind == ColumnKind::categorical
                                ? scaled.table.categorical(*column)[static_cast<std::size_t>(r)]
                                : format_double(scaled.table.numeric(*column)[static_cast<std::size_t>(r)]));
        }
        write_file(ctx.path("composition.csv"), composition_to_csv(cluster_composition(labels, cells)));
    } else {
        write_file(ctx.path("composition.csv"), composition_to_csv({}));
    }

    csv::Writer targets;
    targets.row({"id", "cluster", "target"});
    for (Index a = 0; a < m; ++a) {
        const auto r = rows[static_cast<std::size_t>(a)];
        targets.row({partition.ids[static_cast<std::size_t>(r)], std::to_string(labels[static_cast<std::size_t>(a)]),
                     format_double(target[r])});
    }
    write_file(ctx.path("clusters_target.csv"), targets.str());
}

}  // namespace

StageResult run_stage(const std::string& stage, const PipelineConfig& config) {
    const auto outputs = stage_outputs(stage, config);
    const auto start = std::chrono::steady_clock::now();
    try {
        Context ctx{config, FeatureSchema::load(config.schema)};
        fs::create_directories(config.output);
        if (stage == "dataset") dataset_stage(ctx);
        if (stage == "weights") weights_stage(ctx);
        if (stage == "similarity") similarity_stage(ctx);
        if (stage == "network") network_stage(ctx);
        if (stage == "inference") inference_stage(ctx);
    } catch (const Error& e) {
        if (e.code() == Errc::missing_upstream || e.code() == Errc::config) throw;
        throw Error(Errc::stage_failure,
                    "stage '" + stage + "' failed: " + std::string(errc_name(e.code())) + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(Errc::stage_failure, "stage '" + stage + "' failed: " + e.what());
    }
    for (const auto& f : outputs) {
        const auto p = config.output / f;
        if (!fs::exists(p) || fs::file_size(p) == 0) {
            throw Error(Errc::stage_failure, "stage '" + stage + "' did not produce '" + f + "'");
        }
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    log(LogLevel::info, "stage " + stage + " done in " + format_double(elapsed.count()) + " s");
    return {stage, outputs, elapsed.count()};
}

std::map<std::string, std::string> checksum_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        out[rel] = "fnv1a64:" + hex64(fnv1a64(read_file(entry.path())));
    }
    return out;
}

RunManifest run_pipeline(const PipelineConfig& config) {
    validate(config);
    RunManifest manifest;
    manifest.config_json = config_to_json(config);
    for (const auto& stage : stage_names()) {
        manifest.timings[stage] = run_stage(stage, config).seconds;
    }
    const auto summary = json::parse(read_file(config.output / "graph_summary.json"));
    manifest.total_rows = summary.at("n_nodes").get<Index>();
    manifest.clustered_rows = summary.at("clustered_rows").get<Index>();
    manifest.excluded_rows = summary.at("excluded_rows").get<Index>();
    manifest.selected_k = summary.at("selected_k").get<Index>();
    manifest.n_clusters = summary.at("n_clusters").get<int>();
    manifest.checksums = checksum_tree(config.output);
    write_file(config.output / "manifest.json", manifest_to_json(manifest));
    return manifest;
}

std::string manifest_to_json(const RunManifest& m) {
    json doc{{"version", m.version},
             {"config", json::parse(m.config_json)},
             {"timings_seconds", m.timings},
             {"counts", {{"total_rows", m.total_rows}, {"clustered_rows", m.clustered_rows}, {"excluded_rows", m.excluded_rows}}},
             {"selected_k", m.selected_k},
             {"n_clusters", m.n_clusters},
             {"checksums", m.checksums}};
    return doc.dump(2) + "\n";
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    json doc;
    try {
        doc = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw Error(Errc::io, "manifest.json: " + std::string(e.what()));
    }
    const auto recorded = doc.at("checksums").get<std::map<std::string, std::string>>();
    const auto actual = checksum_tree(dir);
    std::vector<std::string> problems;
    for (const auto& [file, sum] : recorded) {
        auto it = actual.find(file);
        if (it == actual.end()) {
            problems.push_back("missing: " + file);
        } else if (it->second != sum) {
            problems.push_back("modified: " + file);
        }
    }
    for (const auto& [file, sum] : actual) {
        if (!recorded.count(file)) problems.push_back("unexpected: " + file);
    }
    return problems;
}

}  // namespace gowergraph
