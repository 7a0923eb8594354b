#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "gowergraph/core.hpp"

namespace gowergraph {

class FeatureSchema;
struct ScaledTable;
struct WeightVector;

/// Mixed-type rows for Gower: numeric values and categorical level codes.
template <typename Scalar>
struct MixedFrame {
    Matrix<Scalar> numeric;
    Eigen::MatrixXi categorical;
    std::vector<std::string> numeric_names;
    std::vector<std::string> categorical_names;

    Index rows() const { return std::max(numeric.rows(), categorical.rows()); }
};

template <typename Scalar>
struct GowerWeights {
    Vector<Scalar> numeric;
    Vector<Scalar> categorical;

    Scalar total() const { return numeric.sum() + categorical.sum(); }
};

/// R_f = max - min per numeric column, over the whole frame.
template <typename Scalar>
Vector<Scalar> feature_ranges(const MixedFrame<Scalar>& frame) {
    if (frame.numeric.rows() == 0) {
        return Vector<Scalar>::Zero(frame.numeric.cols());
    }
    return (frame.numeric.colwise().maxCoeff() - frame.numeric.colwise().minCoeff()).transpose();
}

/// Weighted Gower dissimilarity of rows i and j. A numeric feature with zero
/// range contributes 0 to the numerator but keeps its weight in the
/// denominator.
template <typename Scalar>
Scalar gower_pair(const MixedFrame<Scalar>& frame, Index i, Index j, const GowerWeights<Scalar>& weights,
                  const Vector<Scalar>& ranges) {
    const Scalar total = weights.total();
    if (!(total > 0)) {
        throw Error(Errc::zero_total_weight, "gower: feature weights sum to zero");
    }
    Scalar sum = 0;
    for (Index f = 0; f < frame.numeric.cols(); ++f) {
        if (ranges[f] > 0) {
            sum += weights.numeric[f] * (std::abs(frame.numeric(i, f) - frame.numeric(j, f)) / ranges[f]);
        }
    }
    for (Index f = 0; f < frame.categorical.cols(); ++f) {
        if (frame.categorical(i, f) != frame.categorical(j, f)) {
            sum += weights.categorical[f];
        }
    }
    // The numerator and total sum in different orders; keep rounding inside [0, 1].
    return std::min(sum / total, Scalar(1));
}

/// Symmetric n x n matrix in [0, 1] with zero diagonal.
template <typename Scalar>
class DissimilarityMatrix {
public:
    DissimilarityMatrix() = default;
    explicit DissimilarityMatrix(Matrix<Scalar> values) : values_(std::move(values)) {
        if (values_.rows() != values_.cols()) {
            throw Error(Errc::invalid_argument, "dissimilarity matrix must be square");
        }
        for (Index i = 0; i < size(); ++i) {
            if (values_(i, i) != 0) throw Error(Errc::invalid_argument, "dissimilarity diagonal must be 0");
            for (Index j = i + 1; j < size(); ++j) {
                const Scalar d = values_(i, j);
                if (d != values_(j, i) || !(d >= 0 && d <= 1)) {
                    throw Error(Errc::invalid_argument, "dissimilarity must be symmetric and within [0, 1]");
                }
            }
        }
    }

    Index size() const { return values_.rows(); }
    Scalar operator()(Index i, Index j) const { return values_(i, j); }
    const Matrix<Scalar>& matrix() const { return values_; }

private:
    Matrix<Scalar> values_;
};

/// S_ij = 1 - D_ij off the diagonal, S_ii = 0.
template <typename Scalar>
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(Matrix<Scalar> values) : values_(std::move(values)) {
        if (values_.rows() != values_.cols()) {
            throw Error(Errc::invalid_argument, "similarity matrix must be square");
        }
        values_.diagonal().setZero();
    }

    Index size() const { return values_.rows(); }
    Scalar operator()(Index i, Index j) const { return values_(i, j); }
    const Matrix<Scalar>& matrix() const { return values_; }

private:
    Matrix<Scalar> values_;
};

template <typename Scalar>
DissimilarityMatrix<Scalar> gower_matrix(const MixedFrame<Scalar>& frame, const GowerWeights<Scalar>& weights,
                                         int threads = 1) {
    const Index n = frame.rows();
    if (n < 2) {
        throw Error(Errc::invalid_argument, "gower_matrix: needs at least 2 rows");
    }
    if (!(weights.total() > 0)) {
        throw Error(Errc::zero_total_weight, "gower: feature weights sum to zero");
    }
    const Vector<Scalar> ranges = feature_ranges(frame);
    Matrix<Scalar> out = Matrix<Scalar>::Zero(n, n);
    parallel_for(n, threads, [&](Index i) {
        for (Index j = i + 1; j < n; ++j) {
            out(i, j) = gower_pair(frame, i, j, weights, ranges);
        }
    });
    out.template triangularView<Eigen::StrictlyLower>() = out.transpose();
    return DissimilarityMatrix<Scalar>(std::move(out));
}

template <typename Scalar>
SimilarityMatrix<Scalar> to_similarity(const DissimilarityMatrix<Scalar>& D) {
    Matrix<Scalar> s = Matrix<Scalar>::Ones(D.size(), D.size()) - D.matrix();
    return SimilarityMatrix<Scalar>(std::move(s));
}

/// Gower inputs from a prepared table: numeric features as scaled, categorical
/// features coded by their level order. Columns keep schema order.
MixedFrame<double> mixed_frame(const ScaledTable& scaled, const FeatureSchema& schema);
GowerWeights<double> gower_weights(const MixedFrame<double>& frame, const WeightVector& weights);

/// Full square CSV with an id header row and an id first column.
std::string matrix_to_csv(const MatrixXd& values, const std::vector<std::string>& ids);

/// Strict upper triangle (i < j) in row-major order as little-endian float64,
/// plus a JSON sidecar {n, ids, layout, checksum}.
void write_dissimilarity(const std::filesystem::path& bin_path, const std::filesystem::path& sidecar_path,
                         const DissimilarityMatrix<double>& D, const std::vector<std::string>& ids);

struct LoadedDissimilarity {
    DissimilarityMatrix<double> matrix;
    std::vector<std::string> ids;
};

/// Verifies the sidecar checksum before rebuilding the matrix.
LoadedDissimilarity read_dissimilarity(const std::filesystem::path& bin_path, const std::filesystem::path& sidecar_path);

}  // namespace gowergraph
