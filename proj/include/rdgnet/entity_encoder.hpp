#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "rdgnet/kg_store.hpp"
#include "rdgnet/model.hpp"
#include "rdgnet/rdg.hpp"
#include "rdgnet/relation_encoder.hpp"

namespace rdgnet {

// State of one query's entity propagation. Entities get local row ids in
// discovery order, so V^l is always the first visited_count[l] entries of
// visited and rows of `states`.
template <typename T>
struct QueryContext {
    EntityId e_q = 0;
    RelationId r_q = 0;
    RelationEmbeddings<T> relations;
    std::vector<EntityId> visited;
    std::vector<std::size_t> visited_count;  // one entry per completed layer, starting with V^0
    std::vector<std::int32_t> local_of;      // entity -> local row, -1 when unvisited
    Mat<T> states;                           // rows for V^{layer}
    int layer = 0;

    bool is_visited(EntityId e) const { return local_of[static_cast<std::size_t>(e)] >= 0; }
    // Zero vector for unvisited entities.
    Vec<T> state(EntityId e) const;
};

template <typename T>
struct EntityLayerTrace {
    struct Edge {
        std::int32_t src = 0;  // local row in the previous layer
        RelationId relation = 0;  // relation_count() for a self loop
        std::int32_t dst = 0;  // local row in this layer
    };
    Mat<T> prev_states;
    std::vector<Edge> edges;
    Mat<T> gate_pre;   // edges x d, W_gate [h_src || R[r] || R[r_q]]
    std::vector<T> gate;
    Mat<T> dropout;    // edges x d scaled keep-mask, empty without dropout
    Mat<T> acc;        // new rows x d
    Mat<T> pre;        // new rows x d
};

template <typename T>
struct PropagationTrace {
    RelationTrace<T> relation;
    std::vector<EntityLayerTrace<T>> layers;
};

struct PropagationOptions {
    // Facts ignored during propagation (the training query and its inverse).
    std::span<const FactIndex> masked_facts;
    double dropout = 0.0;
    std::mt19937_64* rng = nullptr;
};

// sigmoid(v_gate^T relu(W_gate [h_source || h_rel || h_query_rel])) for entity layer `layer` (0-based).
template <typename T>
T entity_attention(const Vec<T>& h_source, const Vec<T>& h_rel, const Vec<T>& h_query_rel,
                   const EntityEncoderParams<T>& params, int layer);

// V^0 = {e_q} with the all-ones indicator state. With self loops enabled the
// loop embedding is appended to the relation rows under id relation_count().
template <typename T>
QueryContext<T> start_query(const KnowledgeGraph& kg, EntityId e_q, RelationEmbeddings<T> relations,
                            const ModelParams<T>& params);

template <typename T>
void entity_layer(QueryContext<T>& ctx, const KnowledgeGraph& kg, const ModelParams<T>& params,
                  const PropagationOptions& options = {}, EntityLayerTrace<T>* trace = nullptr);

// Entity propagation given precomputed relation embeddings.
template <typename T>
QueryContext<T> propagate_entities(const KnowledgeGraph& kg, const RelationEmbeddings<T>& relations,
                                   const ModelParams<T>& params, EntityId e_q, const PropagationOptions& options = {},
                                   PropagationTrace<T>* trace = nullptr);

// Relation encoding followed by L_e entity layers.
template <typename T>
QueryContext<T> propagate(const KnowledgeGraph& kg, const RelationDependencyGraph& rdg, const ModelParams<T>& params,
                          EntityId e_q, RelationId r_q, const PropagationOptions& options = {},
                          PropagationTrace<T>* trace = nullptr);

// w_score^T h for every visited entity, local-row order.
template <typename T>
Vec<T> visited_scores(const QueryContext<T>& ctx, const ModelParams<T>& params);

// Visited entities with their scores, best first; ties by ascending id.
template <typename T>
std::vector<std::pair<EntityId, T>> score_candidates(const QueryContext<T>& ctx, const ModelParams<T>& params);

// Backward through the entity layers. `grad_states` is dLoss/dh^{L_e} for the
// visited rows. Parameter gradients go into `grads`, dLoss/dR_q into `grad_relations`
// (one row per graph relation; the self-loop gradient goes to grads.ent.w_loop).
template <typename T>
void entity_backward(const PropagationTrace<T>& trace, const QueryContext<T>& ctx, const ModelParams<T>& params,
                     const Mat<T>& grad_states, ModelParams<T>& grads, Mat<T>& grad_relations);

}  // namespace rdgnet
