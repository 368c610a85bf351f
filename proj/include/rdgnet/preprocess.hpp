#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rdgnet/kg_store.hpp"

namespace rdgnet {

using NamedTriple = std::array<std::string, 3>;

struct CanonicalizationOutput {
    std::vector<std::string> relations;  // extended relation list, index = id (gaps are empty names)
    RelationId interaction_relation = 0;
    std::vector<NamedTriple> triples;    // original triples followed by new interaction triples, deduplicated
    std::vector<std::string> entities;   // index = canonical id, lexicographic order
    std::size_t skipped_lines = 0;       // interaction lines with fewer than two tokens
};

// Relation list lines are `name` (id = line index) or `name\tid`.
std::vector<std::pair<std::string, RelationId>> parse_relation_list(std::istream& in);

// Interaction lines are whitespace-separated tokens: user followed by items.
CanonicalizationOutput canonicalize(std::span<const std::pair<std::string, RelationId>> relations,
                                    std::istream& train_interactions, std::span<const NamedTriple> kg_triples,
                                    std::istream& test_interactions, const std::string& interaction_name = "purchase");

struct PrunePartitionConfig {
    double rho = 0.075;
    double theta = 0.7;
    std::array<double, 3> alpha{0.8, 0.1, 0.1};
    double weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PrunePartitionResult {
    std::vector<Triple> kept;  // pruned triple set, input order
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    std::vector<double> normalized_degree;             // per input entity
    std::vector<std::int64_t> kept_per_relation;       // per input relation
    std::vector<std::int64_t> unique_per_relation;
    std::vector<char> entity_seen;                     // Phase II visibility
    std::vector<char> relation_seen;
    std::vector<EntityId> entity_map;                  // output id -> input id, ascending
    std::vector<RelationId> relation_map;
    std::size_t input_triples = 0;
    std::size_t unique_triples = 0;
    std::size_t phase2_train = 0;   // all-seen triples before enforcement
    std::size_t moves = 0;
    std::size_t attempts = 0;
    std::size_t target_train = 0;
    bool feasible = true;           // enforcement reached the target within the attempt cap
    std::size_t eval_without_unseen = 0;  // valid/test triples whose elements all occur in train
};

// Relation-balanced pruning followed by visibility partitioning and ratio enforcement.
PrunePartitionResult prune_partition(std::span<const Triple> triples, std::int32_t entity_count,
                                     std::int32_t relation_count, const PrunePartitionConfig& config);

// One JSON object on a single line.
void write_prune_metadata(std::ostream& out, const PrunePartitionResult& r, const PrunePartitionConfig& config);

enum class SplitKind { Transductive, EntityInductive, FullyInductive };
std::string split_kind_name(SplitKind k);

struct InductiveReport {
    std::vector<EntityId> shared_entities;     // between train and valid/test
    std::vector<RelationId> shared_relations;
    std::size_t inference_entities = 0;
    std::size_t inference_relations = 0;
    std::size_t new_entities = 0;
    std::size_t new_relations = 0;
    std::size_t duplicates_train_valid = 0;
    std::size_t duplicates_train_test = 0;
    std::size_t duplicates_valid_test = 0;
    SplitKind kind = SplitKind::Transductive;
};

// Ids must come from one shared vocabulary.
InductiveReport validate_inductive_split(std::span<const Triple> train, std::span<const Triple> valid,
                                         std::span<const Triple> test);

void write_inductive_report(std::ostream& out, const InductiveReport& r);

}  // namespace rdgnet
