#pragma once

#include <cstdint>
#include <string>

#include "rdgnet/kg_store.hpp"

namespace rdgnet {

// Random graph over r1 and r2 facts plus the rule r3(a, c) <=> exists b: r1(a, b) and r2(b, c).
// Every r1/r2 fact is training data; the r3 triples are split train/valid/test.
// Generation is retried until the training frequency of r3 exceeds that of r1 and r2.
struct CompositionConfig {
    int entities = 50;
    int facts_per_relation = 80;
    double train_fraction = 0.8;
    double valid_fraction = 0.1;
    std::uint64_t seed = 0;
    std::string entity_prefix = "e";
};

struct CompositionKG {
    VocabMap vocab;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    RelationId r1 = 0, r2 = 1, r3 = 2;
};

CompositionKG make_composition_kg(const CompositionConfig& config);
DatasetSplits to_splits(const CompositionKG& kg, bool add_inverses = true);

}  // namespace rdgnet
