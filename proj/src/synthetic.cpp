#include "rdgnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "rdgnet/errors.hpp"

namespace rdgnet {

CompositionKG make_composition_kg(const CompositionConfig& config) {
    const int n = config.entities;
    const auto max_pairs = static_cast<long long>(n) * (n - 1);
    if (n < 3 || config.facts_per_relation < 1 || config.facts_per_relation > max_pairs) {
        throw ConfigError("invalid composition graph size");
    }
    if (config.train_fraction <= 0.0 || config.valid_fraction < 0.0 ||
        config.train_fraction + config.valid_fraction > 1.0) {
        throw ConfigError("invalid composition split fractions");
    }
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto draw = [&] {
            std::set<std::pair<int, int>> pairs;
            while (static_cast<int>(pairs.size()) < config.facts_per_relation) {
                const int a = pick(rng), b = pick(rng);
                if (a != b) pairs.emplace(a, b);
            }
            return std::vector<std::pair<int, int>>(pairs.begin(), pairs.end());
        };
        const auto f1 = draw();
        const auto f2 = draw();
        std::vector<std::vector<int>> r2_out(static_cast<std::size_t>(n));
        for (const auto& [b, c] : f2) r2_out[static_cast<std::size_t>(b)].push_back(c);
        std::set<std::pair<int, int>> composed;
        for (const auto& [a, b] : f1) {
            for (int c : r2_out[static_cast<std::size_t>(b)]) composed.emplace(a, c);
        }
        std::vector<std::pair<int, int>> f3(composed.begin(), composed.end());
        std::shuffle(f3.begin(), f3.end(), rng);
        const auto n3 = f3.size();
        const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(n3)));
        const auto n_valid = static_cast<std::size_t>(std::llround(config.valid_fraction * static_cast<double>(n3)));
        if (n_train <= static_cast<std::size_t>(config.facts_per_relation) || n_train + n_valid > n3) continue;

        CompositionKG out;
        for (int e = 0; e < n; ++e) out.vocab.entities.intern(config.entity_prefix + std::to_string(e));
        out.r1 = out.vocab.relations.intern("r1");
        out.r2 = out.vocab.relations.intern("r2");
        out.r3 = out.vocab.relations.intern("r3");
        for (const auto& [a, b] : f1) out.train.push_back({a, out.r1, b});
        for (const auto& [a, b] : f2) out.train.push_back({a, out.r2, b});
        for (std::size_t i = 0; i < n3; ++i) {
            const Triple t{f3[i].first, out.r3, f3[i].second};
            if (i < n_train) {
                out.train.push_back(t);
            } else if (i < n_train + n_valid) {
                out.valid.push_back(t);
            } else {
                out.test.push_back(t);
            }
        }
        return out;
    }
    throw ConfigError("could not draw a composition graph where r3 is the most frequent relation");
}

DatasetSplits to_splits(const CompositionKG& kg, bool add_inverses) {
    return make_splits(kg.vocab, kg.train, kg.valid, kg.test, add_inverses);
}

}  // namespace rdgnet
