#include "gowergraph/synthetic.hpp"

#include <cstdio>
#include <map>

namespace gowergraph {

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    const auto blobs = static_cast<int>(spec.sizes.size());
    if (blobs < 1 || spec.n_numeric < 1 || spec.n_categorical < 0 || spec.n_levels < 2 || spec.base_rates.empty() ||
        !(spec.noise >= 0) || !(spec.alignment >= 0 && spec.alignment <= 1)) {
        throw Error(Errc::invalid_argument, "generate_synthetic: invalid spec");
    }
    auto rng = make_rng(spec.seed, {tag("synthetic")});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> level(0, spec.n_levels - 1);
    std::uniform_int_distribution<int> state(0, 4);
    std::uniform_real_distribution<double> population(5000, 50000);

    SyntheticData out;
    std::vector<std::string> ids;
    std::vector<NumericColumn> numeric(static_cast<std::size_t>(spec.n_numeric));
    std::vector<CategoricalColumn> categorical(static_cast<std::size_t>(spec.n_categorical));
    NumericColumn counts, populations;
    CategoricalColumn states;

    for (int b = 0; b < blobs; ++b) {
        const double base = spec.base_rates[static_cast<std::size_t>(b) % spec.base_rates.size()];
        for (Index r = 0; r < spec.sizes[static_cast<std::size_t>(b)]; ++r) {
            char id[16];
            std::snprintf(id, sizeof id, "r%04zu", ids.size() + 1);
            ids.emplace_back(id);
            out.labels.push_back(b);
            for (int f = 0; f < spec.n_numeric; ++f) {
                const double center = spec.shift * ((b + f) % blobs);
                numeric[static_cast<std::size_t>(f)].push_back(center + spec.noise * gauss(rng));
            }
            for (int f = 0; f < spec.n_categorical; ++f) {
                const int home = (b + f) % spec.n_levels;
                const int l = unit(rng) < spec.alignment ? home : level(rng);
                categorical[static_cast<std::size_t>(f)].push_back(std::string(1, static_cast<char>('a' + l)));
            }
            const double rate = std::max(0.0, base * (1.0 + spec.rate_noise * gauss(rng)));
            const double pop = std::round(population(rng));
            populations.push_back(pop);
            counts.push_back(rate * pop / 10000.0);
            states.push_back("S" + std::to_string(state(rng)));
        }
    }

    std::vector<SchemaEntry> entries{{"id", ColumnKind::categorical, ColumnRole::id},
                                     {"count", ColumnKind::numeric, ColumnRole::target},
                                     {"population", ColumnKind::numeric, ColumnRole::population}};
    ColumnMap columns;
    columns["count"] = std::move(counts);
    columns["population"] = std::move(populations);
    for (int f = 0; f < spec.n_numeric; ++f) {
        const auto name = "x" + std::to_string(f + 1);
        entries.push_back({name, ColumnKind::numeric, ColumnRole::feature});
        columns[name] = std::move(numeric[static_cast<std::size_t>(f)]);
    }
    for (int f = 0; f < spec.n_categorical; ++f) {
        const auto name = "c" + std::to_string(f + 1);
        entries.push_back({name, ColumnKind::categorical, ColumnRole::feature});
        columns[name] = std::move(categorical[static_cast<std::size_t>(f)]);
    }
    entries.push_back({"state", ColumnKind::categorical, ColumnRole::metadata});
    columns["state"] = std::move(states);

    out.schema = FeatureSchema(std::move(entries));
    out.table = Table(std::move(ids), std::move(columns));
    return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::invalid_argument, "adjusted_rand_index: label vectors differ in length");
    }
    auto choose2 = [](double x) { return x * (x - 1) / 2; };
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    double index = 0, sum_a = 0, sum_b = 0;
    for (const auto& [key, c] : joint) index += choose2(c);
    for (const auto& [key, c] : rows) sum_a += choose2(c);
    for (const auto& [key, c] : cols) sum_b += choose2(c);
    const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
    const double maximum = (sum_a + sum_b) / 2;
    if (maximum == expected) return 1.0;
    return (index - expected) / (maximum - expected);
}

}  // namespace gowergraph
