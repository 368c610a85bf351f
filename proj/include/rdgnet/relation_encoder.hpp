#pragma once

#include <vector>

#include "rdgnet/model.hpp"
#include "rdgnet/rdg.hpp"

namespace rdgnet {

template <typename T>
struct RelationEmbeddings {
    RelationId query = 0;
    Mat<T> rows;  // relation_count x d
};

// Intermediate values of one relation encoding, kept for the backward pass.
template <typename T>
struct RelationTrace {
    RelationId query = 0;
    std::vector<Mat<T>> states;                   // L_r + 1 entries, relation_count x d
    std::vector<Mat<T>> pre;                      // per layer, pre-activation
    std::vector<std::vector<Mat<T>>> projected;   // [layer][head], states * w_att^T
    std::vector<std::vector<std::vector<T>>> alpha;  // [layer][head], flat attention weights
    std::vector<std::vector<char>> active;        // L_r + 1 entries, rows that may be non-zero
};

// Attention weights of relation v occupy [attention_slot(v), attention_slot(v) + |past(v)| + 1);
// the past neighbors come first in past_neighbors() order and the self weight last.
inline std::int64_t attention_slot(const RelationDependencyGraph& rdg, RelationId v) {
    return rdg.past_offset(v) + v;
}
inline std::size_t attention_size(const RelationDependencyGraph& rdg) {
    return static_cast<std::size_t>(rdg.retained_edge_count() + rdg.relation_count());
}

// Row r_q is all ones, every other row zero. Throws DataError if r_q is out of range.
template <typename T>
Mat<T> init_relation_states(std::int32_t relation_count, RelationId r_q, int dim);

// Softmax of att^T [W_att h_u || W_att h_v] over past(v) and v itself, for every v.
template <typename T>
std::vector<T> relation_attention(const Mat<T>& states, const RelationDependencyGraph& rdg,
                                  const RelationEncoderParams<T>& params, int head);

// One round of multi-head message passing (layer is 0-based).
template <typename T>
Mat<T> relation_layer(const Mat<T>& states, const RelationDependencyGraph& rdg, const ModelParams<T>& params,
                      int layer);

template <typename T>
RelationEmbeddings<T> encode_relations(const RelationDependencyGraph& rdg, RelationId r_q,
                                       const ModelParams<T>& params, RelationTrace<T>* trace = nullptr);

// Accumulates parameter gradients into `grads` given dLoss/dR_q.
template <typename T>
void relation_backward(const RelationTrace<T>& trace, const RelationDependencyGraph& rdg,
                       const ModelParams<T>& params, const Mat<T>& grad_rows, ModelParams<T>& grads);

}  // namespace rdgnet
