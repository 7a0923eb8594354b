#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gowergraph/core.hpp"

namespace gowergraph {

template <typename Scalar>
struct RidgeFit {
    Vector<Scalar> coefficients;
    Scalar intercept = 0;
};

/// Minimizes ||y - X b - c||^2 + lambda ||b||^2 with the intercept c left
/// unpenalized. Solved on centered data; lambda = 0 on a rank-deficient X
/// throws SingularSystem.
template <typename DerivedX, typename DerivedY>
RidgeFit<typename DerivedX::Scalar> fit_ridge(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
                                               typename DerivedX::Scalar lambda) {
    using Scalar = typename DerivedX::Scalar;
    if (X.cols() < 1 || X.rows() != y.size() || X.rows() == 0) {
        throw Error(Errc::invalid_argument, "fit_ridge: X must have >= 1 column and as many rows as y");
    }
    if (!(lambda >= 0)) {
        throw Error(Errc::invalid_argument, "fit_ridge: lambda must be >= 0");
    }
    const Vector<Scalar> x_mean = X.colwise().mean().transpose();
    const Scalar y_mean = y.mean();
    const Matrix<Scalar> Xc = X.rowwise() - x_mean.transpose();
    const Vector<Scalar> yc = y.array() - y_mean;

    RidgeFit<Scalar> fit;
    if (lambda == 0) {
        Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(Xc);
        if (qr.rank() < Xc.cols()) {
            throw Error(Errc::singular_system, "fit_ridge: rank-deficient design with lambda = 0");
        }
        fit.coefficients = qr.solve(yc);
    } else {
        Matrix<Scalar> gram = Xc.transpose() * Xc;
        gram.diagonal().array() += lambda;
        fit.coefficients = gram.ldlt().solve(Xc.transpose() * yc);
    }
    fit.intercept = y_mean - x_mean.dot(fit.coefficients);
    return fit;
}

struct RidgeParams {
    double lambda = 1.0;
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 8;
    int min_leaf = 2;
    double feature_fraction = 1.0 / 3.0;
};

struct GbrtParams {
    int n_stages = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_leaf = 1;
};

using ModelConfig = std::variant<RidgeParams, ForestParams, GbrtParams>;

std::string_view model_name(const ModelConfig& config);
ModelConfig default_model(std::string_view name);
void validate(const ModelConfig& config);

struct TreeParams {
    int max_depth = 3;
    int min_leaf = 1;
    double feature_fraction = 1.0;
};

/// CART regression tree grown by variance reduction. Split candidates are
/// midpoints between consecutive distinct values; equal gains keep the lower
/// feature index, then the lower threshold.
class RegressionTree {
public:
    struct Node {
        int feature = -1;
        double threshold = 0;
        int left = -1;
        int right = -1;
        double value = 0;
    };

    static RegressionTree fit(const MatrixXd& X, const VectorXd& y, std::span<const Index> rows, const TreeParams& params,
                              Rng& rng);

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    VectorXd predict(const MatrixXd& X) const;
    const std::vector<Node>& nodes() const { return nodes_; }
    int depth() const;

private:
    int grow(const MatrixXd& X, const VectorXd& y, std::vector<Index>& rows, int depth, const TreeParams& params, Rng& rng);

    std::vector<Node> nodes_;
};

struct RidgeModel {
    RidgeFit<double> fit;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
};

struct GbrtModel {
    double initial = 0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> stages;
};

using Model = std::variant<RidgeModel, ForestModel, GbrtModel>;

RidgeModel fit_ridge_model(const MatrixXd& X, const VectorXd& y, const RidgeParams& params);
/// Each tree: bootstrap sample plus per-split feature subsampling, randomness
/// from (seed, tree index).
ForestModel fit_forest(const MatrixXd& X, const VectorXd& y, const ForestParams& params, std::uint64_t seed);
GbrtModel fit_gbrt(const MatrixXd& X, const VectorXd& y, const GbrtParams& params, std::uint64_t seed);
Model fit(const ModelConfig& config, const MatrixXd& X, const VectorXd& y, std::uint64_t seed);

VectorXd predict(const Model& model, const MatrixXd& X);

}  // namespace gowergraph
