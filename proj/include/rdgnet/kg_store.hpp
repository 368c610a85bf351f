#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rdgnet {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using FactIndex = std::int32_t;

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    auto operator<=>(const Triple&) const = default;
};

// Dense name <-> id table. Ids are assigned in first-seen order starting at 0.
class Vocab {
public:
    std::int32_t intern(std::string_view name);
    std::optional<std::int32_t> find(std::string_view name) const;
    const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
    std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::int32_t> ids_;
};

struct VocabMap {
    Vocab entities;
    Vocab relations;
    // When set, parse_triples refuses names it has not seen before.
    bool frozen = false;
    // Number of base relations once inverse augmentation is applied, 0 otherwise.
    std::int32_t inverse_offset = 0;

    std::string relation_name(RelationId r) const;
};

// Parses `head\trelation\ttail` lines. Blank lines and lines starting with '#'
// are skipped; CRLF endings are accepted. Extends `vocab` unless it is frozen.
std::vector<Triple> parse_triples(std::istream& in, VocabMap& vocab);
std::vector<Triple> parse_triples_file(const std::string& path, VocabMap& vocab);

void write_triples(std::ostream& out, std::span<const Triple> triples, const VocabMap& vocab);
// `name\tid` sorted by id.
void write_vocab(std::ostream& out, const Vocab& vocab);

// Stable removal of repeated triples, keeping the first occurrence.
std::vector<Triple> dedup_triples(std::span<const Triple> triples);

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Throws DataError when an id falls outside [0, entity_count) / [0, relation_count).
    static KnowledgeGraph build(std::span<const Triple> triples, std::int32_t entity_count,
                                std::int32_t relation_count, bool add_inverses);

    // Augments a non-augmented graph; a second augmentation is rejected with DataError.
    KnowledgeGraph with_inverses() const;

    std::int32_t entity_count() const { return entity_count_; }
    std::int32_t relation_count() const { return relation_count_; }
    std::int32_t base_relation_count() const { return base_relation_count_; }
    bool has_inverses() const { return has_inverses_; }
    std::size_t fact_count() const { return facts_.size(); }
    std::size_t base_fact_count() const { return base_fact_count_; }

    const std::vector<Triple>& facts() const { return facts_; }
    const Triple& fact(FactIndex i) const { return facts_[static_cast<std::size_t>(i)]; }

    // Facts with head == e, in fact-list order.
    std::span<const Triple> out(EntityId e) const;
    // Fact-list indices parallel to out(e).
    std::span<const FactIndex> out_fact_ids(EntityId e) const;

    const std::vector<std::int64_t>& relation_freq() const { return relation_freq_; }

    RelationId inverse_of(RelationId r) const;
    // Index of the augmented twin of a fact, or -1 without augmentation.
    FactIndex partner(FactIndex i) const;
    std::optional<FactIndex> find_fact(const Triple& t) const;

private:
    std::int32_t entity_count_ = 0;
    std::int32_t relation_count_ = 0;
    std::int32_t base_relation_count_ = 0;
    bool has_inverses_ = false;
    std::size_t base_fact_count_ = 0;
    std::vector<Triple> facts_;
    std::vector<std::int64_t> out_offsets_;
    std::vector<Triple> out_facts_;
    std::vector<FactIndex> out_ids_;
    std::vector<std::int64_t> relation_freq_;
};

// (head, relation) -> sorted set of true tails.
class KnownTrue {
public:
    void add(EntityId head, RelationId relation, EntityId tail);
    void finalize();
    bool contains(EntityId head, RelationId relation, EntityId tail) const;
    std::span<const EntityId> tails(EntityId head, RelationId relation) const;
    std::size_t key_count() const { return map_.size(); }
    std::size_t entry_count() const;

private:
    static std::uint64_t key(EntityId h, RelationId r) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(h)) << 32) |
               static_cast<std::uint32_t>(r);
    }
    std::unordered_map<std::uint64_t, std::vector<EntityId>> map_;
};

struct DatasetSplits {
    VocabMap vocab;
    KnowledgeGraph train;
    std::vector<Triple> train_triples;  // base direction, deduplicated
    std::vector<Triple> valid_queries;
    std::vector<Triple> test_queries;
    KnownTrue known_true;
};

// Deduplicates each split, builds the train graph and registers every triple
// (and its inverse-direction twin) in known_true.
DatasetSplits make_splits(VocabMap vocab, std::vector<Triple> train, std::vector<Triple> valid,
                          std::vector<Triple> test, bool add_inverses = true);

// Any stream pointer may be null (treated as empty). Entity and relation
// vocabularies are shared across the three files.
DatasetSplits load_splits(std::istream* train, std::istream* valid, std::istream* test,
                          bool add_inverses = true);
DatasetSplits load_splits_files(const std::string& train, const std::string& valid,
                                const std::string& test, bool add_inverses = true);

// Tail query (h, r, ?) plus inverse-head query (t, r^-1, ?) for every triple.
std::vector<Triple> both_directions(std::span<const Triple> triples, const KnowledgeGraph& kg);

}  // namespace rdgnet
