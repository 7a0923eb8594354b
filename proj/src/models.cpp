#include "gowergraph/models.hpp"

#include <algorithm>
#include <numeric>

namespace gowergraph {

std::string_view model_name(const ModelConfig& config) {
    switch (config.index()) {
        case 0: return "ridge";
        case 1: return "random_forest";
        default: return "gbrt";
    }
}

ModelConfig default_model(std::string_view name) {
    if (name == "ridge") return RidgeParams{};
    if (name == "random_forest" || name == "rf") return ForestParams{};
    if (name == "gbrt") return GbrtParams{};
    throw Error(Errc::config, "unknown model '" + std::string(name) + "' (expected ridge, random_forest, gbrt)");
}

void validate(const ModelConfig& config) {
    auto fail = [](const std::string& msg) { throw Error(Errc::config, msg); };
    if (auto* r = std::get_if<RidgeParams>(&config)) {
        if (!(r->lambda >= 0)) fail("ridge lambda must be >= 0");
    } else if (auto* f = std::get_if<ForestParams>(&config)) {
        if (f->n_trees < 1) fail("random_forest n_trees must be >= 1");
        if (f->max_depth < 0) fail("random_forest max_depth must be >= 0");
        if (f->min_leaf < 1) fail("random_forest min_leaf must be >= 1");
        if (!(f->feature_fraction > 0 && f->feature_fraction <= 1)) fail("random_forest feature_fraction must be in (0, 1]");
    } else if (auto* g = std::get_if<GbrtParams>(&config)) {
        if (g->n_stages < 1) fail("gbrt n_stages must be >= 1");
        if (!(g->learning_rate > 0 && g->learning_rate <= 1)) fail("gbrt learning_rate must be in (0, 1]");
        if (g->max_depth < 0) fail("gbrt max_depth must be >= 0");
        if (g->min_leaf < 1) fail("gbrt min_leaf must be >= 1");
    }
}

RegressionTree RegressionTree::fit(const MatrixXd& X, const VectorXd& y, std::span<const Index> rows,
                                   const TreeParams& params, Rng& rng) {
    if (rows.empty()) {
        throw Error(Errc::invalid_argument, "RegressionTree::fit: no rows");
    }
    RegressionTree tree;
    std::vector<Index> work(rows.begin(), rows.end());
    tree.grow(X, y, work, 0, params, rng);
    return tree;
}

int RegressionTree::grow(const MatrixXd& X, const VectorXd& y, std::vector<Index>& rows, int depth,
                         const TreeParams& params, Rng& rng) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    double total = 0;
    for (Index r : rows) total += y[r];
    const auto n = static_cast<double>(rows.size());
    nodes_[id].value = total / n;

    const auto min_leaf = static_cast<std::size_t>(params.min_leaf);
    if (depth >= params.max_depth || rows.size() < 2 * min_leaf) {
        return id;
    }

    const int p = static_cast<int>(X.cols());
    std::vector<int> candidates(p);
    std::iota(candidates.begin(), candidates.end(), 0);
    if (params.feature_fraction < 1.0) {
        const int m = std::clamp(static_cast<int>(std::lround(params.feature_fraction * p)), 1, p);
        for (int i = 0; i < m; ++i) {
            std::uniform_int_distribution<int> pick(i, p - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
        }
        candidates.resize(m);
        std::sort(candidates.begin(), candidates.end());
    }

    const double parent_score = total * total / n;
    double best_gain = 0;
    int best_feature = -1;
    double best_threshold = 0;

    std::vector<Index> order(rows);
    for (int f : candidates) {
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            const double xa = X(a, f), xb = X(b, f);
            return xa < xb || (xa == xb && a < b);
        });
        double left_sum = 0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            left_sum += y[order[k]];
            const double here = X(order[k], f);
            const double next = X(order[k + 1], f);
            const std::size_t n_left = k + 1;
            if (here == next || n_left < min_leaf || order.size() - n_left < min_leaf) {
                continue;
            }
            const double right_sum = total - left_sum;
            const auto nl = static_cast<double>(n_left);
            const auto nr = n - nl;
            const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
            if (gain > best_gain * (1 + 1e-12) + 1e-15) {
                best_gain = gain;
                best_feature = f;
                double mid = here + (next - here) / 2;
                best_threshold = mid < next ? mid : here;
            }
        }
    }
    if (best_feature < 0) {
        return id;
    }

    std::vector<Index> left, right;
    for (Index r : rows) {
        (X(r, best_feature) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const int l = grow(X, y, left, depth + 1, params, rng);
    const int r = grow(X, y, right, depth + 1, params, rng);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int node = 0;
    while (nodes_[node].feature >= 0) {
        node = x[nodes_[node].feature] <= nodes_[node].threshold ? nodes_[node].left : nodes_[node].right;
    }
    return nodes_[node].value;
}

VectorXd RegressionTree::predict(const MatrixXd& X) const {
    VectorXd out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        out[i] = predict_row(X.row(i));
    }
    return out;
}

int RegressionTree::depth() const {
    std::vector<int> level(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (nodes_[i].feature >= 0) {
            level[nodes_[i].left] = level[i] + 1;
            level[nodes_[i].right] = level[i] + 1;
        }
    }
    return deepest;
}

RidgeModel fit_ridge_model(const MatrixXd& X, const VectorXd& y, const RidgeParams& params) {
    return {fit_ridge(X, y, params.lambda)};
}

ForestModel fit_forest(const MatrixXd& X, const VectorXd& y, const ForestParams& params, std::uint64_t seed) {
    validate(ModelConfig{params});
    if (X.rows() != y.size() || X.rows() == 0) {
        throw Error(Errc::invalid_argument, "fit_forest: X and y disagree in length");
    }
    const TreeParams tree_params{params.max_depth, params.min_leaf, params.feature_fraction};
    ForestModel model;
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    std::vector<Index> sample(static_cast<std::size_t>(X.rows()));
    for (int t = 0; t < params.n_trees; ++t) {
        auto rng = make_rng(seed, {static_cast<std::uint64_t>(t)});
        std::uniform_int_distribution<Index> draw(0, X.rows() - 1);
        for (auto& s : sample) s = draw(rng);
        std::sort(sample.begin(), sample.end());
        model.trees.push_back(RegressionTree::fit(X, y, sample, tree_params, rng));
    }
    return model;
}

GbrtModel fit_gbrt(const MatrixXd& X, const VectorXd& y, const GbrtParams& params, std::uint64_t seed) {
    validate(ModelConfig{params});
    if (X.rows() != y.size() || X.rows() == 0) {
        throw Error(Errc::invalid_argument, "fit_gbrt: X and y disagree in length");
    }
    const TreeParams tree_params{params.max_depth, params.min_leaf, 1.0};
    GbrtModel model;
    model.initial = y.mean();
    model.learning_rate = params.learning_rate;
    std::vector<Index> all(static_cast<std::size_t>(X.rows()));
    std::iota(all.begin(), all.end(), Index{0});

    VectorXd current = VectorXd::Constant(y.size(), model.initial);
    for (int s = 0; s < params.n_stages; ++s) {
        const VectorXd residual = y - current;
        auto rng = make_rng(seed, {static_cast<std::uint64_t>(s)});
        model.stages.push_back(RegressionTree::fit(X, residual, all, tree_params, rng));
        current += params.learning_rate * model.stages.back().predict(X);
    }
    return model;
}

Model fit(const ModelConfig& config, const MatrixXd& X, const VectorXd& y, std::uint64_t seed) {
    validate(config);
    return std::visit(
        [&](const auto& params) -> Model {
            using P = std::decay_t<decltype(params)>;
            if constexpr (std::is_same_v<P, RidgeParams>) {
                return fit_ridge_model(X, y, params);
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                return fit_forest(X, y, params, seed);
            } else {
                return fit_gbrt(X, y, params, seed);
            }
        },
        config);
}

VectorXd predict(const Model& model, const MatrixXd& X) {
    if (auto* ridge = std::get_if<RidgeModel>(&model)) {
        if (X.cols() != ridge->fit.coefficients.size()) {
            throw Error(Errc::invalid_argument, "predict: column count mismatch");
        }
        return (X * ridge->fit.coefficients).array() + ridge->fit.intercept;
    }
    if (auto* forest = std::get_if<ForestModel>(&model)) {
        VectorXd sum = VectorXd::Zero(X.rows());
        for (const auto& tree : forest->trees) sum += tree.predict(X);
        return sum / static_cast<double>(forest->trees.size());
    }
    const auto& gbrt = std::get<GbrtModel>(model);
    VectorXd out = VectorXd::Constant(X.rows(), gbrt.initial);
    for (const auto& tree : gbrt.stages) out += gbrt.learning_rate * tree.predict(X);
    return out;
}

}  // namespace gowergraph
