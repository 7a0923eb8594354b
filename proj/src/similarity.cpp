#include "gowergraph/similarity.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"

#include "gowergraph/csv.hpp"
#include "gowergraph/dataset.hpp"
#include "gowergraph/weights.hpp"

namespace gowergraph {

using nlohmann::json;

MixedFrame<double> mixed_frame(const ScaledTable& scaled, const FeatureSchema& schema) {
    MixedFrame<double> frame;
    const Index n = scaled.table.n_rows();
    std::vector<SchemaEntry> numeric, categorical;
    for (const auto& e : schema.features()) {
        (e.kind == ColumnKind::numeric ? numeric : categorical).push_back(e);
    }
    frame.numeric.resize(n, static_cast<Index>(numeric.size()));
    for (std::size_t f = 0; f < numeric.size(); ++f) {
        const auto& col = scaled.table.numeric(numeric[f].name);
        frame.numeric.col(static_cast<Index>(f)) = Eigen::Map<const VectorXd>(col.data(), n);
        frame.numeric_names.push_back(numeric[f].name);
    }
    frame.categorical.resize(n, static_cast<Index>(categorical.size()));
    for (std::size_t f = 0; f < categorical.size(); ++f) {
        const auto& col = scaled.table.categorical(categorical[f].name);
        const auto& levels = scaled.onehot_map.at(categorical[f].name);
        for (Index r = 0; r < n; ++r) {
            auto it = std::find(levels.begin(), levels.end(), col[static_cast<std::size_t>(r)]);
            if (it == levels.end()) {
                throw Error(Errc::unknown_category, "unknown category '" + col[static_cast<std::size_t>(r)] + "'");
            }
            frame.categorical(r, static_cast<Index>(f)) = static_cast<int>(it - levels.begin());
        }
        frame.categorical_names.push_back(categorical[f].name);
    }
    return frame;
}

GowerWeights<double> gower_weights(const MixedFrame<double>& frame, const WeightVector& weights) {
    GowerWeights<double> out;
    out.numeric.resize(static_cast<Index>(frame.numeric_names.size()));
    out.categorical.resize(static_cast<Index>(frame.categorical_names.size()));
    for (std::size_t f = 0; f < frame.numeric_names.size(); ++f) {
        out.numeric[static_cast<Index>(f)] = weights.at(frame.numeric_names[f]);
    }
    for (std::size_t f = 0; f < frame.categorical_names.size(); ++f) {
        out.categorical[static_cast<Index>(f)] = weights.at(frame.categorical_names[f]);
    }
    if (!(out.total() > 0)) {
        throw Error(Errc::zero_total_weight, "gower: feature weights sum to zero");
    }
    return out;
}

std::string matrix_to_csv(const MatrixXd& values, const std::vector<std::string>& ids) {
    csv::Writer out;
    std::vector<std::string> header{"id"};
    header.insert(header.end(), ids.begin(), ids.end());
    out.row(header);
    for (Index i = 0; i < values.rows(); ++i) {
        std::vector<std::string> cells{ids[static_cast<std::size_t>(i)]};
        for (Index j = 0; j < values.cols(); ++j) {
            cells.push_back(format_double(values(i, j)));
        }
        out.row(cells);
    }
    return out.str();
}

namespace {

constexpr const char* layout_name = "upper_triangle_row_major_f64le";

void append_le(std::string& out, double value) {
    auto bits = std::bit_cast<std::uint64_t>(value);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
}

double read_le(const char* bytes) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) {
        bits = (bits << 8) | static_cast<unsigned char>(bytes[b]);
    }
    return std::bit_cast<double>(bits);
}

}  // namespace

void write_dissimilarity(const std::filesystem::path& bin_path, const std::filesystem::path& sidecar_path,
                         const DissimilarityMatrix<double>& D, const std::vector<std::string>& ids) {
    const Index n = D.size();
    if (static_cast<Index>(ids.size()) != n) {
        throw Error(Errc::invalid_argument, "write_dissimilarity: id count mismatch");
    }
    std::string bytes;
    bytes.reserve(static_cast<std::size_t>(n * (n - 1) / 2 * 8));
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            append_le(bytes, D(i, j));
        }
    }
    write_file(bin_path, bytes);
    json sidecar{{"n", n}, {"ids", ids}, {"layout", layout_name}, {"checksum", "fnv1a64:" + hex64(fnv1a64(bytes))}};
    write_file(sidecar_path, sidecar.dump(2) + "\n");
}

LoadedDissimilarity read_dissimilarity(const std::filesystem::path& bin_path, const std::filesystem::path& sidecar_path) {
    json sidecar;
    try {
        sidecar = json::parse(read_file(sidecar_path));
    } catch (const json::exception& e) {
        throw Error(Errc::io, sidecar_path.string() + ": " + e.what());
    }
    const auto n = sidecar.at("n").get<Index>();
    const auto bytes = read_file(bin_path);
    if (static_cast<Index>(bytes.size()) != n * (n - 1) / 2 * 8) {
        throw Error(Errc::io, bin_path.string() + ": size does not match n = " + std::to_string(n));
    }
    if (sidecar.at("checksum").get<std::string>() != "fnv1a64:" + hex64(fnv1a64(bytes))) {
        throw Error(Errc::io, bin_path.string() + ": checksum mismatch");
    }
    MatrixXd values = MatrixXd::Zero(n, n);
    std::size_t offset = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            values(i, j) = values(j, i) = read_le(bytes.data() + offset);
            offset += 8;
        }
    }
    return {DissimilarityMatrix<double>(std::move(values)), sidecar.at("ids").get<std::vector<std::string>>()};
}

}  // namespace gowergraph
