#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace gowergraph {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

enum class Errc {
    missing_column,
    non_numeric_cell,
    missing_cell,
    duplicate_id,
    invalid_schema,
    nonpositive_population,
    unknown_category,
    too_few_rows,
    singular_system,
    zero_variance_truth,
    feature_set_mismatch,
    zero_total_weight,
    k_out_of_range,
    empty_graph,
    degenerate_groups,
    insufficient_samples,
    bad_thresholds,
    invalid_argument,
    io,
    config,
    missing_upstream,
    stage_failure,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

constexpr double infinity = std::numeric_limits<double>::infinity();

/// Mixes a base seed with a list of tags into an independent 64-bit seed
/// (splitmix64 finalizer). Every random stream in the library comes from here,
/// so a given (seed, tags...) always yields the same stream regardless of
/// scheduling.
std::uint64_t substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);
std::uint64_t tag(std::string_view name);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    return Rng(substream(seed, tags));
}

/// Runs body(i) for i in [0, n) across up to `threads` workers. Work items
/// must write only to their own slots; results are then schedule-independent.
void parallel_for(Index n, int threads, const std::function<void(Index)>& body);

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite.
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

enum class LogLevel { error = 0, info = 1, debug = 2 };
/// Level from GOWERGRAPH_LOG, default info.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

}  // namespace gowergraph
