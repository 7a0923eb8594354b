#include "gowergraph/weights.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"

#include "gowergraph/dataset.hpp"

namespace gowergraph {

using nlohmann::json;

std::vector<Split> make_splits(std::span<const int> bins, const CVPlan& plan) {
    if (plan.folds < 2 || plan.repeats < 1) {
        throw Error(Errc::invalid_argument, "CVPlan needs folds >= 2 and repeats >= 1");
    }
    const auto n = static_cast<Index>(bins.size());
    if (n < plan.folds) {
        throw Error(Errc::too_few_rows,
                    std::to_string(n) + " rows cannot fill " + std::to_string(plan.folds) + " folds");
    }

    std::vector<Split> splits;
    splits.reserve(static_cast<std::size_t>(plan.folds * plan.repeats));
    for (int rep = 0; rep < plan.repeats; ++rep) {
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        auto rng = make_rng(plan.seed, {tag("cv-shuffle"), static_cast<std::uint64_t>(rep)});
        std::shuffle(order.begin(), order.end(), rng);
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return bins[a] < bins[b]; });

        std::vector<int> fold_of(static_cast<std::size_t>(n));
        for (std::size_t p = 0; p < order.size(); ++p) {
            fold_of[static_cast<std::size_t>(order[p])] = static_cast<int>(p % static_cast<std::size_t>(plan.folds));
        }
        for (int f = 0; f < plan.folds; ++f) {
            Split s;
            s.repeat = rep;
            s.fold = f;
            for (Index i = 0; i < n; ++i) {
                (fold_of[static_cast<std::size_t>(i)] == f ? s.validation : s.train).push_back(i);
            }
            splits.push_back(std::move(s));
        }
    }
    return splits;
}

std::vector<Split> make_splits(const VectorXd& target, const CVPlan& plan) {
    auto bins = quantile_bins(std::span<const double>(target.data(), static_cast<std::size_t>(target.size())),
                              plan.max_bins);
    return make_splits(bins, plan);
}

MetricsSummary summarize(std::vector<Metrics> splits) {
    MetricsSummary out;
    out.splits = std::move(splits);
    const auto n = static_cast<double>(out.splits.size());
    if (out.splits.empty()) return out;
    for (const auto& m : out.splits) {
        out.mean.r2 += m.r2 / n;
        out.mean.mae += m.mae / n;
        out.mean.rmse += m.rmse / n;
    }
    for (const auto& m : out.splits) {
        out.std.r2 += (m.r2 - out.mean.r2) * (m.r2 - out.mean.r2) / n;
        out.std.mae += (m.mae - out.mean.mae) * (m.mae - out.mean.mae) / n;
        out.std.rmse += (m.rmse - out.mean.rmse) * (m.rmse - out.mean.rmse) / n;
    }
    out.std.r2 = std::sqrt(out.std.r2);
    out.std.mae = std::sqrt(out.std.mae);
    out.std.rmse = std::sqrt(out.std.rmse);
    return out;
}

namespace {

FeatureImportance mean_std(std::span<const double> values) {
    FeatureImportance out;
    if (values.empty()) return out;
    const auto n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / n);
    return out;
}

}  // namespace

std::vector<FeatureImportance> permutation_importance(const Model& model, const MatrixXd& X_val, const VectorXd& y_val,
                                                      int repeats, std::uint64_t seed) {
    if (X_val.rows() == 0) {
        throw Error(Errc::invalid_argument, "permutation_importance: empty validation set");
    }
    if (repeats < 1) {
        throw Error(Errc::invalid_argument, "permutation_importance: repeats must be >= 1");
    }
    const double baseline = metrics(y_val, predict(model, X_val)).r2;

    std::vector<FeatureImportance> out;
    MatrixXd shuffled = X_val;
    std::vector<Index> perm(static_cast<std::size_t>(X_val.rows()));
    std::vector<double> drops(static_cast<std::size_t>(repeats));
    for (Index f = 0; f < X_val.cols(); ++f) {
        for (int r = 0; r < repeats; ++r) {
            std::iota(perm.begin(), perm.end(), Index{0});
            auto rng = make_rng(seed, {static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(r)});
            std::shuffle(perm.begin(), perm.end(), rng);
            for (Index i = 0; i < X_val.rows(); ++i) {
                shuffled(i, f) = X_val(perm[static_cast<std::size_t>(i)], f);
            }
            drops[static_cast<std::size_t>(r)] = baseline - metrics(y_val, predict(model, shuffled)).r2;
        }
        shuffled.col(f) = X_val.col(f);
        out.push_back(mean_std(drops));
    }
    return out;
}

ModelImportance cross_validate(const ModelConfig& config, const MatrixXd& X, const VectorXd& y,
                               std::span<const std::string> columns, std::span<const Split> splits,
                               std::uint64_t seed, const CrossValidationOptions& options) {
    validate(config);
    if (static_cast<Index>(columns.size()) != X.cols() || X.rows() != y.size()) {
        throw Error(Errc::invalid_argument, "cross_validate: shape mismatch");
    }
    const auto name = model_name(config);
    const auto n_splits = static_cast<Index>(splits.size());
    std::vector<Metrics> split_metrics(splits.size());
    std::vector<std::vector<FeatureImportance>> split_importance(splits.size());

    auto rows_of = [&](const std::vector<Index>& idx, MatrixXd& Xs, VectorXd& ys) {
        Xs.resize(static_cast<Index>(idx.size()), X.cols());
        ys.resize(static_cast<Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            Xs.row(static_cast<Index>(k)) = X.row(idx[k]);
            ys[static_cast<Index>(k)] = y[idx[k]];
        }
    };

    parallel_for(n_splits, options.threads, [&](Index s) {
        const auto& split = splits[static_cast<std::size_t>(s)];
        MatrixXd X_train, X_val;
        VectorXd y_train, y_val;
        rows_of(split.train, X_train, y_train);
        rows_of(split.validation, X_val, y_val);
        const auto rep = static_cast<std::uint64_t>(split.repeat);
        const auto fold = static_cast<std::uint64_t>(split.fold);
        const Model model = fit(config, X_train, y_train, substream(seed, {tag(name), tag("fit"), rep, fold}));
        split_metrics[static_cast<std::size_t>(s)] = metrics(y_val, predict(model, X_val));
        split_importance[static_cast<std::size_t>(s)] = permutation_importance(
            model, X_val, y_val, options.permutation_repeats, substream(seed, {tag(name), tag("permute"), rep, fold}));
    });

    ModelImportance out;
    out.model = std::string(name);
    out.columns.assign(columns.begin(), columns.end());
    out.metrics = summarize(std::move(split_metrics));
    std::vector<double> per_split(splits.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        for (std::size_t s = 0; s < splits.size(); ++s) {
            per_split[s] = split_importance[s][c].mean;
        }
        out.values.push_back(mean_std(per_split));
    }
    return out;
}

double WeightVector::at(const std::string& feature) const {
    auto it = weights.find(feature);
    if (it == weights.end()) {
        throw Error(Errc::feature_set_mismatch, "no weight for feature '" + feature + "'");
    }
    return it->second;
}

void WeightVector::validate() const {
    bool positive = false;
    for (const auto& [name, w] : weights) {
        if (!(w >= 0) || !std::isfinite(w)) {
            throw Error(Errc::invalid_argument, "weight of '" + name + "' must be finite and >= 0");
        }
        positive = positive || w > 0;
    }
    if (!positive) {
        throw Error(Errc::zero_total_weight, "weight vector has no positive entry");
    }
}

AveragedImportance average_importance(std::span<const ModelImportance> tables, std::span<const std::string> models,
                                      const std::map<std::string, std::string>& parents) {
    std::vector<const ModelImportance*> chosen;
    for (const auto& t : tables) {
        if (models.empty() || std::find(models.begin(), models.end(), t.model) != models.end()) {
            chosen.push_back(&t);
        }
    }
    if (chosen.empty()) {
        throw Error(Errc::invalid_argument, "average_importance: no model tables selected");
    }
    const std::set<std::string> reference(chosen.front()->columns.begin(), chosen.front()->columns.end());
    for (const auto* t : chosen) {
        if (std::set<std::string>(t->columns.begin(), t->columns.end()) != reference ||
            t->columns.size() != reference.size()) {
            throw Error(Errc::feature_set_mismatch, "importance tables disagree on features ('" + t->model + "')");
        }
    }

    AveragedImportance out;
    for (const auto* t : chosen) {
        for (std::size_t c = 0; c < t->columns.size(); ++c) {
            out.per_column[t->columns[c]] += t->values[c].mean;
        }
    }
    for (auto& [name, v] : out.per_column) {
        v /= static_cast<double>(chosen.size());
    }

    for (const auto& [name, v] : out.per_column) {
        auto parent = parents.find(name);
        const std::string& feature = parent == parents.end() ? name : parent->second;
        out.folded[feature] += std::max(0.0, v);
    }
    double total = 0;
    for (const auto& [name, v] : out.folded) total += v;
    if (!(total > 0)) {
        throw Error(Errc::zero_total_weight, "all averaged importances are <= 0");
    }
    for (const auto& [name, v] : out.folded) {
        out.weights.weights[name] = v / total;
    }
    out.weights.provenance = WeightProvenance::derived;
    return out;
}

VectorXd vif(const MatrixXd& X) {
    if (X.cols() < 2 || X.rows() < 2) {
        throw Error(Errc::invalid_argument, "vif: needs >= 2 features and >= 2 rows");
    }
    const Index p = X.cols();
    VectorXd out(p);
    for (Index f = 0; f < p; ++f) {
        MatrixXd A(X.rows(), p);
        A.col(0).setOnes();
        for (Index c = 0, k = 1; c < p; ++c) {
            if (c != f) A.col(k++) = X.col(c);
        }
        const VectorXd target = X.col(f);
        const double ss_tot = (target.array() - target.mean()).square().sum();
        Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
        const VectorXd residual = target - A * qr.solve(target);
        const double ss_res = residual.squaredNorm();
        const double unexplained = ss_tot > 0 ? ss_res / ss_tot : 0.0;
        out[f] = unexplained <= 1e-10 ? infinity : 1.0 / unexplained;
    }
    return out;
}

MatrixXd correlation_matrix(const MatrixXd& X) {
    if (X.rows() < 2) {
        throw Error(Errc::invalid_argument, "correlation_matrix: needs >= 2 rows");
    }
    const MatrixXd centered = X.rowwise() - X.colwise().mean();
    const VectorXd norms = centered.colwise().norm().transpose();
    MatrixXd out = centered.transpose() * centered;
    for (Index i = 0; i < out.rows(); ++i) {
        for (Index j = 0; j < out.cols(); ++j) {
            if (i == j) {
                out(i, j) = 1.0;
            } else if (norms[i] == 0 || norms[j] == 0) {
                out(i, j) = std::numeric_limits<double>::quiet_NaN();
            } else {
                out(i, j) = std::clamp(out(i, j) / (norms[i] * norms[j]), -1.0, 1.0);
            }
        }
    }
    return out;
}

namespace {

json metrics_json(const MetricsSummary& m) {
    return {{"r2_mean", m.mean.r2}, {"r2_std", m.std.r2},   {"mae_mean", m.mean.mae},
            {"mae_std", m.std.mae}, {"rmse_mean", m.mean.rmse}, {"rmse_std", m.std.rmse},
            {"n_splits", m.splits.size()}};
}

}  // namespace

std::string weights_to_json(const std::vector<ModelImportance>& tables, const AveragedImportance& averaged,
                            std::uint64_t seed) {
    json doc;
    doc["models"] = json::array();
    doc["per_model"] = json::object();
    doc["metrics"] = json::object();
    for (const auto& t : tables) {
        doc["models"].push_back(t.model);
        json features = json::object();
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            features[t.columns[c]] = {{"mean", t.values[c].mean}, {"std", t.values[c].std}};
        }
        doc["per_model"][t.model] = features;
        doc["metrics"][t.model] = metrics_json(t.metrics);
    }
    doc["per_indicator"] = averaged.per_column;
    doc["averaged"] = averaged.weights.weights;
    doc["provenance"] = "derived";
    doc["seed"] = seed;
    return doc.dump(2) + "\n";
}

std::string weights_to_json(const WeightVector& weights) {
    json doc;
    doc["averaged"] = weights.weights;
    doc["provenance"] = weights.provenance == WeightProvenance::derived ? "derived" : "imported";
    return doc.dump(2) + "\n";
}

WeightVector weights_from_json(std::string_view text, WeightProvenance provenance) {
    WeightVector out;
    out.provenance = provenance;
    try {
        const json doc = json::parse(text);
        for (const auto& [name, w] : doc.at("averaged").items()) {
            out.weights[name] = w.get<double>();
        }
        if (doc.contains("provenance")) {
            out.provenance = doc["provenance"] == "derived" ? WeightProvenance::derived : WeightProvenance::imported;
        }
    } catch (const json::exception& e) {
        throw Error(Errc::config, std::string("weights JSON: ") + e.what());
    }
    out.validate();
    return out;
}

}  // namespace gowergraph
