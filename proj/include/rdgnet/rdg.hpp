#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdgnet/kg_store.hpp"

namespace rdgnet {

struct RelationPair {
    RelationId from = 0;
    RelationId to = 0;
    // Number of fact pairs (e, from, e'), (e', to, e'') witnessing the edge.
    std::int64_t support = 0;

    bool operator==(const RelationPair&) const = default;
};

using RelationEdge = std::pair<RelationId, RelationId>;

// All 2-hop relation dependencies of the graph, sorted by (from, to).
// Self pairs (r, r) are included when witnessed.
std::vector<RelationPair> relation_adjacency(const KnowledgeGraph& kg);

// Precedence rank per relation (a permutation of 0..relation_count-1).
// Strongly connected components of the pair digraph are emitted in a
// topological order of the condensation; inside a component relations are
// sorted by descending frequency, then ascending id. Among components that
// are simultaneously ready, the one whose leading member sorts first wins.
std::vector<std::int32_t> compute_tau(std::int32_t relation_count, std::span<const RelationPair> pairs,
                                      std::span<const std::int64_t> relation_freq);

class RelationDependencyGraph {
public:
    RelationDependencyGraph() = default;
    RelationDependencyGraph(std::int32_t relation_count, std::vector<RelationPair> edges,
                            std::vector<std::int32_t> tau);

    std::int32_t relation_count() const { return relation_count_; }
    const std::vector<RelationPair>& edges() const { return edges_; }
    const std::vector<std::int32_t>& tau() const { return tau_; }

    // Predecessors u of v with (u, v) an edge and tau(u) < tau(v), ascending id.
    std::span<const RelationId> past_neighbors(RelationId v) const;
    // Offset of v's block in the flattened past-neighbor list.
    std::int64_t past_offset(RelationId v) const { return past_offsets_[static_cast<std::size_t>(v)]; }
    std::int64_t retained_edge_count() const { return static_cast<std::int64_t>(past_.size()); }
    std::int64_t self_pair_count() const;

    // Retained edges ordered by target, then source.
    std::vector<RelationEdge> retained_edges() const;

    // Copy with the listed retained edges dropped from the past-neighbor lists.
    // Edges and tau are left as they are.
    RelationDependencyGraph without(std::span<const RelationEdge> removed) const;

    // Relation ids reachable from `source` over retained edges within `hops` steps.
    std::vector<bool> reachable_within(RelationId source, int hops) const;

private:
    void index_past(const std::vector<std::vector<RelationId>>& lists);

    std::int32_t relation_count_ = 0;
    std::vector<RelationPair> edges_;
    std::vector<std::int32_t> tau_;
    std::vector<std::int64_t> past_offsets_;
    std::vector<RelationId> past_;
};

RelationDependencyGraph build_rdg(const KnowledgeGraph& kg);

struct MetaGraphStats {
    std::string method;  // rdg | ingram | ultra
    std::int32_t relations = 0;
    std::int64_t edges = 0;
    // ultra only
    std::optional<std::int64_t> h2h, h2t, t2h, t2t;
    // Counting convention, e.g. "undirected pairs".
    std::string convention;
};

// Undirected pair {r_i, r_j}, i != j, for every entity incident to both.
MetaGraphStats build_ingram_graph(const KnowledgeGraph& kg, std::vector<RelationEdge>* edges = nullptr);
// Directed typed edges (h2h, h2t, t2h, t2t) between distinct relations.
MetaGraphStats build_ultra_metagraph(const KnowledgeGraph& kg);
MetaGraphStats rdg_stats(const RelationDependencyGraph& rdg, bool count_self_pairs = false);

// `dataset,method,relations,edges[,h2h,h2t,t2h,t2t]`
void write_stats_header(std::ostream& out);
void write_stats_row(std::ostream& out, const std::string& dataset, const MetaGraphStats& s);

// `r_u\tr_v\tsupport` for every edge, and `relation\trank`.
void write_rdg_edges(std::ostream& out, const RelationDependencyGraph& rdg, const VocabMap* vocab = nullptr);
void write_rdg_tau(std::ostream& out, const RelationDependencyGraph& rdg, const VocabMap* vocab = nullptr);

}  // namespace rdgnet
