#include "gowergraph/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace gowergraph {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::missing_column: return "MissingColumn";
        case Errc::non_numeric_cell: return "NonNumericCell";
        case Errc::missing_cell: return "MissingCell";
        case Errc::duplicate_id: return "DuplicateId";
        case Errc::invalid_schema: return "InvalidSchema";
        case Errc::nonpositive_population: return "NonpositivePopulation";
        case Errc::unknown_category: return "UnknownCategory";
        case Errc::too_few_rows: return "TooFewRows";
        case Errc::singular_system: return "SingularSystem";
        case Errc::zero_variance_truth: return "ZeroVarianceTruth";
        case Errc::feature_set_mismatch: return "FeatureSetMismatch";
        case Errc::zero_total_weight: return "ZeroTotalWeight";
        case Errc::k_out_of_range: return "KOutOfRange";
        case Errc::empty_graph: return "EmptyGraph";
        case Errc::degenerate_groups: return "DegenerateGroups";
        case Errc::insufficient_samples: return "InsufficientSamples";
        case Errc::bad_thresholds: return "BadThresholds";
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::io: return "IoError";
        case Errc::config: return "ConfigError";
        case Errc::missing_upstream: return "MissingUpstream";
        case Errc::stage_failure: return "StageFailure";
    }
    return "Unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t state = splitmix64(seed);
    for (auto t : tags) {
        state = splitmix64(state ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    }
    return state;
}

std::uint64_t tag(std::string_view name) { return fnv1a64(name); }

void parallel_for(Index n, int threads, const std::function<void(Index)>& body) {
    if (n <= 0) {
        return;
    }
    const Index workers = std::clamp<Index>(threads, 1, n);
    if (workers == 1) {
        for (Index i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_lock;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (Index w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (Index i = w; i < n; i += workers) {
                        body(i);
                    }
                } catch (...) {
                    std::lock_guard guard(failure_lock);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, end);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

LogLevel log_level() {
    const char* env = std::getenv("GOWERGRAPH_LOG");
    if (env == nullptr) {
        return LogLevel::info;
    }
    std::string_view v(env);
    if (v == "error") return LogLevel::error;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::info;
}

void log(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) {
        return;
    }
    static std::mutex lock;
    std::lock_guard guard(lock);
    static constexpr const char* names[] = {"error", "info", "debug"};
    std::cerr << "[gowergraph:" << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace gowergraph
