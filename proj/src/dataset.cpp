#include "gowergraph/dataset.hpp"

#include <charconv>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "gowergraph/csv.hpp"

namespace gowergraph {

using nlohmann::json;

std::string_view to_string(ColumnKind kind) { return kind == ColumnKind::numeric ? "numeric" : "categorical"; }

std::string_view to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::feature: return "feature";
        case ColumnRole::target: return "target";
        case ColumnRole::population: return "population";
        case ColumnRole::id: return "id";
        case ColumnRole::metadata: return "metadata";
    }
    return "feature";
}

namespace {

ColumnKind parse_kind(const std::string& s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "categorical") return ColumnKind::categorical;
    throw Error(Errc::invalid_schema, "unknown column kind '" + s + "'");
}

ColumnRole parse_role(const std::string& s) {
    if (s == "feature") return ColumnRole::feature;
    if (s == "target") return ColumnRole::target;
    if (s == "population") return ColumnRole::population;
    if (s == "id") return ColumnRole::id;
    if (s == "metadata") return ColumnRole::metadata;
    throw Error(Errc::invalid_schema, "unknown column role '" + s + "'");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_real(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<SchemaEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> names;
    int targets = 0, ids = 0, populations = 0, features = 0;
    for (const auto& e : entries_) {
        if (e.name.empty()) {
            throw Error(Errc::invalid_schema, "schema entry with empty name");
        }
        if (!names.insert(e.name).second) {
            throw Error(Errc::invalid_schema, "duplicate schema name '" + e.name + "'");
        }
        if (!(e.weight >= 0) || !std::isfinite(e.weight)) {
            throw Error(Errc::invalid_schema, "weight of '" + e.name + "' must be finite and >= 0");
        }
        switch (e.role) {
            case ColumnRole::target: ++targets; break;
            case ColumnRole::id: ++ids; break;
            case ColumnRole::population: ++populations; break;
            case ColumnRole::feature: ++features; break;
            case ColumnRole::metadata: break;
        }
        if ((e.role == ColumnRole::target || e.role == ColumnRole::population) && e.kind != ColumnKind::numeric) {
            throw Error(Errc::invalid_schema, "'" + e.name + "' must be numeric");
        }
    }
    if (targets != 1) throw Error(Errc::invalid_schema, "schema needs exactly one target column");
    if (ids != 1) throw Error(Errc::invalid_schema, "schema needs exactly one id column");
    if (populations > 1) throw Error(Errc::invalid_schema, "schema allows at most one population column");
    if (features < 1) throw Error(Errc::invalid_schema, "schema needs at least one feature column");
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_schema, std::string("schema JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw Error(Errc::invalid_schema, "schema JSON must be an array of {name, kind, role, weight}");
    }
    std::vector<SchemaEntry> entries;
    for (const auto& item : doc) {
        try {
            SchemaEntry e;
            e.name = item.at("name").get<std::string>();
            e.kind = parse_kind(item.value("kind", std::string("numeric")));
            e.role = parse_role(item.value("role", std::string("feature")));
            e.weight = item.value("weight", 1.0);
            entries.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw Error(Errc::invalid_schema, std::string("schema entry: ") + e.what());
        }
    }
    return FeatureSchema(std::move(entries));
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

std::string FeatureSchema::to_json() const {
    json doc = json::array();
    for (const auto& e : entries_) {
        doc.push_back({{"name", e.name},
                       {"kind", std::string(to_string(e.kind))},
                       {"role", std::string(to_string(e.role))},
                       {"weight", e.weight}});
    }
    return doc.dump(2) + "\n";
}

const SchemaEntry& FeatureSchema::at(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e;
    }
    throw Error(Errc::missing_column, "schema has no column '" + std::string(name) + "'");
}

bool FeatureSchema::contains(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

const SchemaEntry& FeatureSchema::id() const {
    return *std::find_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.role == ColumnRole::id; });
}

const SchemaEntry& FeatureSchema::target() const {
    return *std::find_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.role == ColumnRole::target; });
}

const SchemaEntry* FeatureSchema::population() const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.role == ColumnRole::population; });
    return it == entries_.end() ? nullptr : &*it;
}

std::vector<SchemaEntry> FeatureSchema::features() const {
    std::vector<SchemaEntry> out;
    std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
                 [](const auto& e) { return e.role == ColumnRole::feature; });
    return out;
}

std::vector<SchemaEntry> FeatureSchema::metadata() const {
    std::vector<SchemaEntry> out;
    std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
                 [](const auto& e) { return e.role == ColumnRole::metadata; });
    return out;
}

FeatureSchema FeatureSchema::prepared() const {
    std::vector<SchemaEntry> out;
    std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
                 [](const auto& e) { return e.role != ColumnRole::population; });
    return FeatureSchema(std::move(out));
}

Table::Table(std::vector<std::string> ids, ColumnMap columns) : ids_(std::move(ids)), columns_(std::move(columns)) {
    validate();
}

void Table::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) {
            throw Error(Errc::duplicate_id, "duplicate id '" + id + "'");
        }
    }
    for (const auto& [name, column] : columns_) {
        std::size_t len = std::visit([](const auto& c) { return c.size(); }, column);
        if (len != ids_.size()) {
            throw Error(Errc::invalid_argument, "column '" + name + "' has " + std::to_string(len) + " rows, expected " +
                                                    std::to_string(ids_.size()));
        }
        if (auto* num = std::get_if<NumericColumn>(&column)) {
            for (std::size_t r = 0; r < num->size(); ++r) {
                if (!std::isfinite((*num)[r])) {
                    throw Error(Errc::non_numeric_cell,
                                "non-finite value in column '" + name + "' row " + std::to_string(r));
                }
            }
        }
    }
}

bool Table::has(std::string_view name) const { return columns_.find(name) != columns_.end(); }

const NumericColumn& Table::numeric(std::string_view name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) throw Error(Errc::missing_column, "missing column '" + std::string(name) + "'");
    if (auto* c = std::get_if<NumericColumn>(&it->second)) return *c;
    throw Error(Errc::invalid_argument, "column '" + std::string(name) + "' is not numeric");
}

const CategoricalColumn& Table::categorical(std::string_view name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) throw Error(Errc::missing_column, "missing column '" + std::string(name) + "'");
    if (auto* c = std::get_if<CategoricalColumn>(&it->second)) return *c;
    throw Error(Errc::invalid_argument, "column '" + std::string(name) + "' is not categorical");
}

void Table::set(const std::string& name, Column column) {
    std::size_t len = std::visit([](const auto& c) { return c.size(); }, column);
    if (len != ids_.size()) {
        throw Error(Errc::invalid_argument, "column '" + name + "' length mismatch");
    }
    columns_.insert_or_assign(name, std::move(column));
}

void Table::erase(const std::string& name) {
    auto it = columns_.find(name);
    if (it != columns_.end()) columns_.erase(it);
}

Table Table::select_rows(std::span<const Index> rows) const {
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (Index r : rows) ids.push_back(ids_.at(static_cast<std::size_t>(r)));
    ColumnMap cols;
    for (const auto& [name, column] : columns_) {
        cols.emplace(name, std::visit(
                               [&](const auto& c) -> Column {
                                   std::decay_t<decltype(c)> out;
                                   out.reserve(rows.size());
                                   for (Index r : rows) out.push_back(c.at(static_cast<std::size_t>(r)));
                                   return out;
                               },
                               column));
    }
    return Table(std::move(ids), std::move(cols));
}

bool is_missing_token(std::string_view cell) {
    cell = trim(cell);
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

LoadResult parse_table(const std::string& csv_text, const FeatureSchema& schema, MissingPolicy policy) {
    const auto doc = csv::parse(csv_text);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < doc.header.size(); ++c) {
        position.emplace(std::string(trim(doc.header[c])), c);
    }
    std::vector<std::size_t> source;
    for (const auto& e : schema.entries()) {
        auto it = position.find(e.name);
        if (it == position.end()) {
            throw Error(Errc::missing_column, "input lacks column '" + e.name + "'");
        }
        source.push_back(it->second);
    }

    const auto& entries = schema.entries();
    std::vector<std::string> ids;
    std::vector<Column> columns;
    for (const auto& e : entries) {
        if (e.kind == ColumnKind::numeric) {
            columns.emplace_back(NumericColumn{});
        } else {
            columns.emplace_back(CategoricalColumn{});
        }
    }

    Index dropped = 0;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const auto& row = doc.rows[r];
        bool missing = false;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (is_missing_token(row[source[k]])) {
                if (policy == MissingPolicy::strict) {
                    throw Error(Errc::missing_cell,
                                "missing value in row " + std::to_string(r + 1) + ", column '" + entries[k].name + "'");
                }
                missing = true;
            }
        }
        if (missing) {
            ++dropped;
            continue;
        }
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& cell = row[source[k]];
            if (entries[k].role == ColumnRole::id) {
                ids.emplace_back(trim(cell));
            }
            if (entries[k].kind == ColumnKind::numeric) {
                auto value = parse_real(cell);
                if (!value) {
                    throw Error(Errc::non_numeric_cell, "non-numeric cell '" + cell + "' in row " +
                                                            std::to_string(r + 1) + ", column '" + entries[k].name + "'");
                }
                std::get<NumericColumn>(columns[k]).push_back(*value);
            } else {
                std::get<CategoricalColumn>(columns[k]).emplace_back(trim(cell));
            }
        }
    }
    if (dropped > 0) {
        log(LogLevel::info, "dropped " + std::to_string(dropped) + " rows with missing cells");
    }

    ColumnMap map;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (entries[k].role != ColumnRole::id) {
            map.emplace(entries[k].name, std::move(columns[k]));
        }
    }
    return {Table(std::move(ids), std::move(map)), dropped};
}

LoadResult load_table(const std::filesystem::path& path, const FeatureSchema& schema, MissingPolicy policy) {
    if (!std::filesystem::exists(path)) {
        throw Error(Errc::io, "input file not found: " + path.string());
    }
    return parse_table(read_file(path), schema, policy);
}

std::string table_to_csv(const Table& table, const FeatureSchema& schema) {
    csv::Writer out;
    std::vector<const SchemaEntry*> cols;
    std::vector<std::string> header;
    for (const auto& e : schema.entries()) {
        if (e.role == ColumnRole::id || table.has(e.name)) {
            cols.push_back(&e);
            header.push_back(e.name);
        }
    }
    out.row(header);
    for (Index r = 0; r < table.n_rows(); ++r) {
        std::vector<std::string> cells;
        for (const auto* e : cols) {
            if (e->role == ColumnRole::id) {
                cells.push_back(table.ids()[r]);
            } else if (e->kind == ColumnKind::numeric) {
                cells.push_back(format_double(table.numeric(e->name)[r]));
            } else {
                cells.push_back(table.categorical(e->name)[r]);
            }
        }
        out.row(cells);
    }
    return out.str();
}

double normalize_target(double count, double population) {
    if (!(population > 0)) {
        throw Error(Errc::nonpositive_population, "population must be > 0, got " + format_double(population));
    }
    return count / population * 10000.0;
}

MatrixXd one_hot(std::span<const std::string> column, std::span<const std::string> categories) {
    MatrixXd out = MatrixXd::Zero(static_cast<Index>(column.size()), static_cast<Index>(categories.size()));
    for (std::size_t r = 0; r < column.size(); ++r) {
        auto it = std::find(categories.begin(), categories.end(), column[r]);
        if (it == categories.end()) {
            throw Error(Errc::unknown_category, "unknown category '" + column[r] + "'");
        }
        out(static_cast<Index>(r), it - categories.begin()) = 1.0;
    }
    return out;
}

std::vector<std::string> category_levels(std::span<const std::string> column) {
    std::set<std::string> unique(column.begin(), column.end());
    return {unique.begin(), unique.end()};
}

std::vector<int> quantile_bins(std::span<const double> target, int max_bins) {
    if (target.empty()) {
        throw Error(Errc::invalid_argument, "quantile_bins: empty column");
    }
    if (max_bins < 1) {
        throw Error(Errc::invalid_argument, "quantile_bins: max_bins must be >= 1");
    }
    std::vector<double> sorted(target.begin(), target.end());
    std::sort(sorted.begin(), sorted.end());
    const double last = static_cast<double>(sorted.size() - 1);

    std::vector<double> edges;
    for (int k = 0; k <= max_bins; ++k) {
        const double pos = last * k / max_bins;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        const double q = sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
        if (edges.empty() || q > edges.back()) {
            edges.push_back(q);
        }
    }

    // Interior edges split values into (e_{k-1}, e_k]; values <= e_1 go to bin 0.
    std::vector<int> raw(target.size());
    const int n_raw = std::max<int>(1, static_cast<int>(edges.size()) - 1);
    for (std::size_t i = 0; i < target.size(); ++i) {
        auto it = std::lower_bound(edges.begin() + 1, edges.end() - (edges.size() > 1 ? 1 : 0), target[i]);
        raw[i] = std::min<int>(static_cast<int>(it - (edges.begin() + 1)), n_raw - 1);
    }

    std::vector<int> remap(n_raw, -1);
    std::vector<bool> used(n_raw, false);
    for (int b : raw) used[b] = true;
    int next = 0;
    for (int b = 0; b < n_raw; ++b) {
        if (used[b]) remap[b] = next++;
    }
    for (auto& b : raw) b = remap[b];
    return raw;
}

VectorXd ScaledTable::target(const FeatureSchema& schema) const {
    const auto& col = table.numeric(schema.target().name);
    return Eigen::Map<const VectorXd>(col.data(), static_cast<Index>(col.size()));
}

ScaledTable prepare_table(const Table& raw, const FeatureSchema& schema, const PrepareOptions& options) {
    ScaledTable out;
    out.table = raw;

    const auto& target_name = schema.target().name;
    NumericColumn rate = raw.numeric(target_name);
    if (const auto* pop = schema.population()) {
        const auto& population = raw.numeric(pop->name);
        for (std::size_t r = 0; r < rate.size(); ++r) {
            rate[r] = normalize_target(rate[r], population[r]);
        }
        out.table.erase(pop->name);
    }
    if (options.log_target) {
        for (auto& v : rate) {
            if (v <= -1.0) {
                throw Error(Errc::invalid_argument, "log1p target transform needs values > -1");
            }
            v = std::log1p(v);
        }
    }
    out.table.set(target_name, std::move(rate));

    for (const auto& e : schema.features()) {
        if (e.kind == ColumnKind::numeric) {
            const auto& col = raw.numeric(e.name);
            if (col.empty()) {
                throw Error(Errc::too_few_rows, "table has no rows");
            }
            auto scaled = scale_minmax(Eigen::Map<const VectorXd>(col.data(), static_cast<Index>(col.size())));
            out.scale_params[e.name] = {scaled.min, scaled.max};
            out.table.set(e.name, NumericColumn(scaled.values.data(), scaled.values.data() + scaled.values.size()));
        } else {
            out.onehot_map[e.name] = category_levels(raw.categorical(e.name));
        }
    }
    return out;
}

std::string scale_params_to_json(const ScaledTable& scaled) {
    json doc;
    doc["scale_params"] = json::object();
    for (const auto& [name, p] : scaled.scale_params) {
        doc["scale_params"][name] = {{"min", p.min}, {"max", p.max}};
    }
    doc["onehot_map"] = json::object();
    for (const auto& [name, levels] : scaled.onehot_map) {
        doc["onehot_map"][name] = levels;
    }
    return doc.dump(2) + "\n";
}

ScaledTable read_scaled_table(const std::filesystem::path& csv_path, const std::filesystem::path& params_path,
                              const FeatureSchema& schema) {
    ScaledTable out;
    out.table = load_table(csv_path, schema.prepared(), MissingPolicy::strict).table;
    json doc;
    try {
        doc = json::parse(read_file(params_path));
        for (const auto& [name, p] : doc.at("scale_params").items()) {
            out.scale_params[name] = {p.at("min").get<double>(), p.at("max").get<double>()};
        }
        for (const auto& [name, levels] : doc.at("onehot_map").items()) {
            out.onehot_map[name] = levels.get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::io, params_path.string() + ": " + e.what());
    }
    for (const auto& e : schema.features()) {
        if (e.kind == ColumnKind::categorical && !out.onehot_map.count(e.name)) {
            throw Error(Errc::io, params_path.string() + ": no levels for '" + e.name + "'");
        }
    }
    return out;
}

DesignMatrix design_matrix(const ScaledTable& scaled, const FeatureSchema& schema) {
    DesignMatrix out;
    const Index n = scaled.table.n_rows();
    std::vector<VectorXd> blocks;
    for (const auto& e : schema.features()) {
        if (e.kind == ColumnKind::numeric) {
            const auto& col = scaled.table.numeric(e.name);
            blocks.push_back(Eigen::Map<const VectorXd>(col.data(), n));
            out.columns.push_back(e.name);
            out.parents.push_back(e.name);
        }
    }
    for (const auto& e : schema.features()) {
        if (e.kind == ColumnKind::categorical) {
            const auto& levels = scaled.onehot_map.at(e.name);
            MatrixXd indicators = one_hot(scaled.table.categorical(e.name), levels);
            for (std::size_t l = 0; l < levels.size(); ++l) {
                blocks.push_back(indicators.col(static_cast<Index>(l)));
                out.columns.push_back(e.name + "_" + levels[l]);
                out.parents.push_back(e.name);
            }
        }
    }
    out.values.resize(n, static_cast<Index>(blocks.size()));
    for (std::size_t c = 0; c < blocks.size(); ++c) {
        out.values.col(static_cast<Index>(c)) = blocks[c];
    }
    return out;
}

}  // namespace gowergraph
