#include "rdgnet/entity_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdgnet/errors.hpp"

namespace rdgnet {

namespace {

template <typename T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
void check_finite(const Mat<T>& m, int layer, const char* what) {
    if (!m.allFinite()) {
        throw NumericError(std::string("non-finite ") + what + " in entity layer " + std::to_string(layer + 1));
    }
}

}  // namespace

template <typename T>
Vec<T> QueryContext<T>::state(EntityId e) const {
    const auto local = local_of[static_cast<std::size_t>(e)];
    if (local < 0 || local >= states.rows()) return Vec<T>::Zero(states.cols());
    return states.row(local).transpose();
}

template <typename T>
T entity_attention(const Vec<T>& h_source, const Vec<T>& h_rel, const Vec<T>& h_query_rel,
                   const EntityEncoderParams<T>& params, int layer) {
    const auto& w = params.w_gate.at(static_cast<std::size_t>(layer));
    const auto d = h_source.size();
    Vec<T> x(3 * d);
    x << h_source, h_rel, h_query_rel;
    const Vec<T> hidden = (w * x).cwiseMax(T(0));
    return sigmoid(params.v_gate[static_cast<std::size_t>(layer)].dot(hidden));
}

template <typename T>
QueryContext<T> start_query(const KnowledgeGraph& kg, EntityId e_q, RelationEmbeddings<T> relations,
                            const ModelParams<T>& params) {
    if (e_q < 0 || e_q >= kg.entity_count()) throw DataError("query entity " + std::to_string(e_q) + " out of range");
    if (relations.rows.rows() != kg.relation_count()) throw DataError("relation embeddings do not match the graph");
    if (params.dims.self_loop) {
        relations.rows.conservativeResize(relations.rows.rows() + 1, Eigen::NoChange);
        relations.rows.row(kg.relation_count()) = params.ent.w_loop.transpose();
    }
    QueryContext<T> ctx;
    ctx.e_q = e_q;
    ctx.r_q = relations.query;
    const auto d = relations.rows.cols();
    ctx.relations = std::move(relations);
    ctx.local_of.assign(static_cast<std::size_t>(kg.entity_count()), -1);
    ctx.local_of[static_cast<std::size_t>(e_q)] = 0;
    ctx.visited.push_back(e_q);
    ctx.visited_count.push_back(1);
    ctx.states = Mat<T>::Ones(1, d);
    return ctx;
}

template <typename T>
void entity_layer(QueryContext<T>& ctx, const KnowledgeGraph& kg, const ModelParams<T>& params,
                  const PropagationOptions& options, EntityLayerTrace<T>* trace) {
    const int layer = ctx.layer;
    if (layer >= params.dims.entity_layers) throw ConfigError("entity layer out of range");
    const int d = params.dims.dim;
    const auto& rel = ctx.relations.rows;
    const RelationId loop = kg.relation_count();
    if (rel.rows() != loop + (params.dims.self_loop ? 1 : 0)) throw DataError("relation embeddings do not match the graph");
    const auto& w_gate = params.ent.w_gate[static_cast<std::size_t>(layer)];
    const auto& v_gate = params.ent.v_gate[static_cast<std::size_t>(layer)];
    const auto& w_msg = params.ent.w_msg[static_cast<std::size_t>(layer)];

    const auto n_prev = static_cast<std::int32_t>(ctx.visited_count.back());
    const Mat<T>& prev = ctx.states;

    // Gate pre-activation splits into source, relation and query-relation parts.
    const Mat<T> src_part = prev * w_gate.leftCols(d).transpose();
    const Mat<T> rel_part = rel * w_gate.middleCols(d, d).transpose();
    const Vec<T> query_part = w_gate.rightCols(d) * rel.row(ctx.r_q).transpose();

    std::vector<typename EntityLayerTrace<T>::Edge> edges;
    for (std::int32_t s = 0; s < n_prev; ++s) {
        const auto e = ctx.visited[static_cast<std::size_t>(s)];
        if (params.dims.self_loop) edges.push_back({s, loop, s});
        const auto facts = kg.out(e);
        const auto ids = kg.out_fact_ids(e);
        for (std::size_t i = 0; i < facts.size(); ++i) {
            if (std::find(options.masked_facts.begin(), options.masked_facts.end(), ids[i]) != options.masked_facts.end()) {
                continue;
            }
            const auto tail = facts[i].tail;
            auto& local = ctx.local_of[static_cast<std::size_t>(tail)];
            if (local < 0) {
                local = static_cast<std::int32_t>(ctx.visited.size());
                ctx.visited.push_back(tail);
            }
            edges.push_back({s, facts[i].relation, local});
        }
    }
    const auto n_new = static_cast<Eigen::Index>(ctx.visited.size());
    const auto n_edges = static_cast<Eigen::Index>(edges.size());

    const bool use_dropout = options.dropout > 0.0;
    if (use_dropout && !options.rng) throw ConfigError("dropout requires a random generator");
    Mat<T> gate_pre(n_edges, d);
    std::vector<T> gate(edges.size());
    Mat<T> dropout;
    if (use_dropout) dropout.resize(n_edges, d);
    Mat<T> acc = Mat<T>::Zero(n_new, d);
    Vec<T> message(d);
    std::bernoulli_distribution keep(1.0 - options.dropout);
    const T keep_scale = use_dropout ? static_cast<T>(1.0 / (1.0 - options.dropout)) : T(1);

    for (Eigen::Index k = 0; k < n_edges; ++k) {
        const auto& edge = edges[static_cast<std::size_t>(k)];
        gate_pre.row(k) = src_part.row(edge.src) + rel_part.row(edge.relation) + query_part.transpose();
        const T g = sigmoid(v_gate.dot(gate_pre.row(k).cwiseMax(T(0)).transpose()));
        gate[static_cast<std::size_t>(k)] = g;
        message = prev.row(edge.src).transpose() + rel.row(edge.relation).transpose();
        if (use_dropout) {
            for (int j = 0; j < d; ++j) dropout(k, j) = keep(*options.rng) ? keep_scale : T(0);
            message = message.cwiseProduct(dropout.row(k).transpose());
        }
        acc.row(edge.dst).noalias() += g * message.transpose();
    }

    Mat<T> pre = acc * w_msg.transpose();
    check_finite(pre, layer, "pre-activation");
    Mat<T> next(n_new, d);
    for (Eigen::Index i = 0; i < n_new; ++i) {
        for (int j = 0; j < d; ++j) next(i, j) = activate(params.dims.entity_act, pre(i, j));
    }

    if (trace) {
        trace->prev_states = prev;
        trace->edges = std::move(edges);
        trace->gate_pre = std::move(gate_pre);
        trace->gate = std::move(gate);
        trace->dropout = std::move(dropout);
        trace->acc = std::move(acc);
        trace->pre = std::move(pre);
    }
    ctx.states = std::move(next);
    ctx.visited_count.push_back(ctx.visited.size());
    ++ctx.layer;
}

template <typename T>
QueryContext<T> propagate_entities(const KnowledgeGraph& kg, const RelationEmbeddings<T>& relations,
                                   const ModelParams<T>& params, EntityId e_q, const PropagationOptions& options,
                                   PropagationTrace<T>* trace) {
    auto ctx = start_query(kg, e_q, relations, params);
    if (trace) trace->layers.assign(static_cast<std::size_t>(params.dims.entity_layers), {});
    for (int l = 0; l < params.dims.entity_layers; ++l) {
        entity_layer(ctx, kg, params, options, trace ? &trace->layers[static_cast<std::size_t>(l)] : nullptr);
    }
    return ctx;
}

template <typename T>
QueryContext<T> propagate(const KnowledgeGraph& kg, const RelationDependencyGraph& rdg, const ModelParams<T>& params,
                          EntityId e_q, RelationId r_q, const PropagationOptions& options,
                          PropagationTrace<T>* trace) {
    if (rdg.relation_count() != kg.relation_count()) throw DataError("RDG does not match the graph's relations");
    auto relations = encode_relations(rdg, r_q, params, trace ? &trace->relation : nullptr);
    return propagate_entities(kg, relations, params, e_q, options, trace);
}

template <typename T>
Vec<T> visited_scores(const QueryContext<T>& ctx, const ModelParams<T>& params) {
    return ctx.states * params.ent.w_score;
}

template <typename T>
std::vector<std::pair<EntityId, T>> score_candidates(const QueryContext<T>& ctx, const ModelParams<T>& params) {
    const Vec<T> scores = visited_scores(ctx, params);
    std::vector<std::pair<EntityId, T>> out;
    out.reserve(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) out.emplace_back(ctx.visited[static_cast<std::size_t>(i)], scores[i]);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

template <typename T>
void entity_backward(const PropagationTrace<T>& trace, const QueryContext<T>& ctx, const ModelParams<T>& params,
                     const Mat<T>& grad_states, ModelParams<T>& grads, Mat<T>& grad_relations) {
    const int d = params.dims.dim;
    const auto& rel = ctx.relations.rows;
    const auto n_base = rel.rows() - (params.dims.self_loop ? 1 : 0);
    if (grad_relations.rows() != n_base || grad_relations.cols() != d) grad_relations = Mat<T>::Zero(n_base, d);
    // Includes the self-loop row, which is split off at the end.
    Mat<T> grad_rows = Mat<T>::Zero(rel.rows(), d);

    Mat<T> grad = grad_states;
    Vec<T> message(d), grad_msg(d), grad_hidden(d);
    for (int l = params.dims.entity_layers - 1; l >= 0; --l) {
        const auto& lt = trace.layers[static_cast<std::size_t>(l)];
        const auto& w_gate = params.ent.w_gate[static_cast<std::size_t>(l)];
        const auto& v_gate = params.ent.v_gate[static_cast<std::size_t>(l)];
        const auto& w_msg = params.ent.w_msg[static_cast<std::size_t>(l)];
        auto& g_gate = grads.ent.w_gate[static_cast<std::size_t>(l)];

        Mat<T> grad_pre(lt.pre.rows(), d);
        for (Eigen::Index i = 0; i < lt.pre.rows(); ++i) {
            for (int j = 0; j < d; ++j) grad_pre(i, j) = grad(i, j) * activate_grad(params.dims.entity_act, lt.pre(i, j));
        }
        grads.ent.w_msg[static_cast<std::size_t>(l)].noalias() += grad_pre.transpose() * lt.acc;
        const Mat<T> grad_acc = grad_pre * w_msg;

        const auto n_prev = lt.prev_states.rows();
        Mat<T> grad_prev = Mat<T>::Zero(n_prev, d);
        Mat<T> grad_src = Mat<T>::Zero(n_prev, d);
        Mat<T> grad_rel = Mat<T>::Zero(rel.rows(), d);
        Vec<T> grad_query = Vec<T>::Zero(d);
        const bool use_dropout = lt.dropout.size() > 0;

        for (std::size_t k = 0; k < lt.edges.size(); ++k) {
            const auto& edge = lt.edges[k];
            const auto kk = static_cast<Eigen::Index>(k);
            const T g = lt.gate[k];
            message = lt.prev_states.row(edge.src).transpose() + rel.row(edge.relation).transpose();
            grad_msg = grad_acc.row(edge.dst).transpose();
            if (use_dropout) {
                message = message.cwiseProduct(lt.dropout.row(kk).transpose());
                grad_msg = grad_msg.cwiseProduct(lt.dropout.row(kk).transpose());
            }
            const T grad_g = grad_acc.row(edge.dst).dot(message.transpose());
            grad_prev.row(edge.src).noalias() += g * grad_msg.transpose();
            grad_rows.row(edge.relation).noalias() += g * grad_msg.transpose();

            const T grad_t = grad_g * g * (T(1) - g);
            const auto z = lt.gate_pre.row(kk);
            grads.ent.v_gate[static_cast<std::size_t>(l)].noalias() += grad_t * z.cwiseMax(T(0)).transpose();
            for (int j = 0; j < d; ++j) grad_hidden[j] = z[j] > T(0) ? grad_t * v_gate[j] : T(0);
            grad_src.row(edge.src).noalias() += grad_hidden.transpose();
            grad_rel.row(edge.relation).noalias() += grad_hidden.transpose();
            grad_query += grad_hidden;
        }

        g_gate.leftCols(d).noalias() += grad_src.transpose() * lt.prev_states;
        grad_prev.noalias() += grad_src * w_gate.leftCols(d);
        g_gate.middleCols(d, d).noalias() += grad_rel.transpose() * rel;
        grad_rows.noalias() += grad_rel * w_gate.middleCols(d, d);
        g_gate.rightCols(d).noalias() += grad_query * rel.row(ctx.r_q);
        grad_rows.row(ctx.r_q).noalias() += (w_gate.rightCols(d).transpose() * grad_query).transpose();

        if (!grad_prev.allFinite()) throw NumericError("non-finite gradient in entity layer " + std::to_string(l + 1));
        grad = std::move(grad_prev);
    }
    grad_relations += grad_rows.topRows(n_base);
    if (params.dims.self_loop) grads.ent.w_loop += grad_rows.row(n_base).transpose();
}

#define RDGNET_INSTANTIATE(T)                                                                                         \
    template struct QueryContext<T>;                                                                                  \
    template T entity_attention<T>(const Vec<T>&, const Vec<T>&, const Vec<T>&, const EntityEncoderParams<T>&, int); \
    template QueryContext<T> start_query<T>(const KnowledgeGraph&, EntityId, RelationEmbeddings<T>,                   \
                                            const ModelParams<T>&);                                                    \
    template void entity_layer<T>(QueryContext<T>&, const KnowledgeGraph&, const ModelParams<T>&,                     \
                                  const PropagationOptions&, EntityLayerTrace<T>*);                                    \
    template QueryContext<T> propagate_entities<T>(const KnowledgeGraph&, const RelationEmbeddings<T>&,                \
                                                   const ModelParams<T>&, EntityId, const PropagationOptions&,         \
                                                   PropagationTrace<T>*);                                              \
    template QueryContext<T> propagate<T>(const KnowledgeGraph&, const RelationDependencyGraph&,                      \
                                          const ModelParams<T>&, EntityId, RelationId, const PropagationOptions&,     \
                                          PropagationTrace<T>*);                                                       \
    template Vec<T> visited_scores<T>(const QueryContext<T>&, const ModelParams<T>&);                                 \
    template std::vector<std::pair<EntityId, T>> score_candidates<T>(const QueryContext<T>&, const ModelParams<T>&);  \
    template void entity_backward<T>(const PropagationTrace<T>&, const QueryContext<T>&, const ModelParams<T>&,       \
                                     const Mat<T>&, ModelParams<T>&, Mat<T>&);

RDGNET_INSTANTIATE(float)
RDGNET_INSTANTIATE(double)
#undef RDGNET_INSTANTIATE

}  // namespace rdgnet
