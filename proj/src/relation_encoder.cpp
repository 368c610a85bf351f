#include "rdgnet/relation_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdgnet/errors.hpp"

namespace rdgnet {

template <typename T>
Mat<T> init_relation_states(std::int32_t relation_count, RelationId r_q, int dim) {
    if (r_q < 0 || r_q >= relation_count) {
        throw DataError("query relation " + std::to_string(r_q) + " outside [0, " + std::to_string(relation_count) + ")");
    }
    Mat<T> s = Mat<T>::Zero(relation_count, dim);
    s.row(r_q).setOnes();
    return s;
}

namespace {

template <typename T>
std::vector<T> attention_from_projection(const Mat<T>& projected, const RelationDependencyGraph& rdg,
                                         const Vec<T>& att) {
    const auto d = projected.cols();
    const Vec<T> src_part = att.head(d);
    const Vec<T> dst_part = att.tail(d);
    const Vec<T> src_score = projected * src_part;
    const Vec<T> dst_score = projected * dst_part;

    std::vector<T> alpha(attention_size(rdg));
    std::vector<T> logits;
    for (RelationId v = 0; v < rdg.relation_count(); ++v) {
        const auto past = rdg.past_neighbors(v);
        logits.clear();
        for (auto u : past) logits.push_back(src_score[u] + dst_score[v]);
        logits.push_back(src_score[v] + dst_score[v]);
        const T mx = *std::max_element(logits.begin(), logits.end());
        T total = 0;
        for (auto& x : logits) {
            x = std::exp(x - mx);
            total += x;
        }
        auto* out = alpha.data() + attention_slot(rdg, v);
        for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] / total;
    }
    return alpha;
}

template <typename T>
void check_finite(const Mat<T>& m, int layer, const char* what) {
    if (!m.allFinite()) {
        throw NumericError(std::string("non-finite ") + what + " in relation layer " + std::to_string(layer + 1));
    }
}

// Forward of one layer restricted to rows that can be non-zero. Fills the
// per-layer parts of `trace` when it is provided.
template <typename T>
Mat<T> layer_forward(const Mat<T>& states, const std::vector<char>& active_in, const RelationDependencyGraph& rdg,
                     const ModelParams<T>& params, int layer, std::vector<char>& active_out, Mat<T>* pre_out,
                     std::vector<Mat<T>>* projected_out, std::vector<std::vector<T>>* alpha_out) {
    const int d = params.dims.dim;
    const int heads = params.dims.heads;
    const auto n = rdg.relation_count();

    active_out.assign(static_cast<std::size_t>(n), 0);
    for (RelationId v = 0; v < n; ++v) {
        bool on = active_in[static_cast<std::size_t>(v)] != 0;
        for (auto u : rdg.past_neighbors(v)) on = on || active_in[static_cast<std::size_t>(u)] != 0;
        active_out[static_cast<std::size_t>(v)] = on ? 1 : 0;
    }

    Mat<T> pre = Mat<T>::Zero(n, d);
    Vec<T> gathered(d);
    for (int h = 0; h < heads; ++h) {
        Mat<T> projected = states * params.rel.w_att[h].transpose();
        check_finite(projected, layer, "attention projection");
        auto alpha = attention_from_projection(projected, rdg, params.rel.att);
        const auto& w_past = params.rel.w_past[layer][h];
        const auto& w_self = params.rel.w_self[layer][h];
        for (RelationId v = 0; v < n; ++v) {
            if (!active_out[static_cast<std::size_t>(v)]) continue;
            const auto past = rdg.past_neighbors(v);
            const T* a = alpha.data() + attention_slot(rdg, v);
            gathered.setZero();
            for (std::size_t k = 0; k < past.size(); ++k) gathered.noalias() += a[k] * states.row(past[k]).transpose();
            pre.row(v).noalias() += (w_past * gathered).transpose();
            pre.row(v).noalias() += (a[past.size()] * (w_self * states.row(v).transpose())).transpose();
        }
        if (projected_out) projected_out->push_back(std::move(projected));
        if (alpha_out) alpha_out->push_back(std::move(alpha));
    }
    pre /= static_cast<T>(heads);
    check_finite(pre, layer, "pre-activation");

    Mat<T> next = Mat<T>::Zero(n, d);
    const auto act = params.dims.relation_act;
    for (RelationId v = 0; v < n; ++v) {
        if (!active_out[static_cast<std::size_t>(v)]) continue;
        for (int k = 0; k < d; ++k) next(v, k) = activate(act, pre(v, k));
    }
    if (pre_out) *pre_out = std::move(pre);
    return next;
}

}  // namespace

template <typename T>
std::vector<T> relation_attention(const Mat<T>& states, const RelationDependencyGraph& rdg,
                                  const RelationEncoderParams<T>& params, int head) {
    const Mat<T> projected = states * params.w_att.at(static_cast<std::size_t>(head)).transpose();
    return attention_from_projection(projected, rdg, params.att);
}

template <typename T>
Mat<T> relation_layer(const Mat<T>& states, const RelationDependencyGraph& rdg, const ModelParams<T>& params,
                      int layer) {
    if (layer < 0 || layer >= params.dims.relation_layers) throw ConfigError("relation layer out of range");
    std::vector<char> active_in(static_cast<std::size_t>(rdg.relation_count()), 0);
    for (RelationId v = 0; v < rdg.relation_count(); ++v) active_in[static_cast<std::size_t>(v)] = states.row(v).isZero(0) ? 0 : 1;
    std::vector<char> active_out;
    return layer_forward<T>(states, active_in, rdg, params, layer, active_out, nullptr, nullptr, nullptr);
}

template <typename T>
RelationEmbeddings<T> encode_relations(const RelationDependencyGraph& rdg, RelationId r_q,
                                       const ModelParams<T>& params, RelationTrace<T>* trace) {
    const int layers = params.dims.relation_layers;
    Mat<T> states = init_relation_states<T>(rdg.relation_count(), r_q, params.dims.dim);
    std::vector<char> active(static_cast<std::size_t>(rdg.relation_count()), 0);
    active[static_cast<std::size_t>(r_q)] = 1;

    if (trace) {
        *trace = RelationTrace<T>{};
        trace->query = r_q;
        trace->states.push_back(states);
        trace->active.push_back(active);
    }
    for (int l = 0; l < layers; ++l) {
        std::vector<char> next_active;
        Mat<T> pre;
        std::vector<Mat<T>> projected;
        std::vector<std::vector<T>> alpha;
        states = layer_forward<T>(states, active, rdg, params, l, next_active, trace ? &pre : nullptr,
                               trace ? &projected : nullptr, trace ? &alpha : nullptr);
        active = std::move(next_active);
        if (trace) {
            trace->states.push_back(states);
            trace->pre.push_back(std::move(pre));
            trace->projected.push_back(std::move(projected));
            trace->alpha.push_back(std::move(alpha));
            trace->active.push_back(active);
        }
    }
    return {r_q, std::move(states)};
}

template <typename T>
void relation_backward(const RelationTrace<T>& trace, const RelationDependencyGraph& rdg,
                       const ModelParams<T>& params, const Mat<T>& grad_rows, ModelParams<T>& grads) {
    const int d = params.dims.dim;
    const int heads = params.dims.heads;
    const auto n = rdg.relation_count();
    const T inv_heads = T(1) / static_cast<T>(heads);
    const Vec<T> att_src = params.rel.att.head(d);
    const Vec<T> att_dst = params.rel.att.tail(d);

    Mat<T> grad = grad_rows;
    for (int l = params.dims.relation_layers - 1; l >= 0; --l) {
        const auto& states = trace.states[static_cast<std::size_t>(l)];
        const auto& pre = trace.pre[static_cast<std::size_t>(l)];
        const auto& active = trace.active[static_cast<std::size_t>(l) + 1];

        Mat<T> grad_pre = Mat<T>::Zero(n, d);
        for (RelationId v = 0; v < n; ++v) {
            if (!active[static_cast<std::size_t>(v)]) continue;
            for (int k = 0; k < d; ++k) grad_pre(v, k) = grad(v, k) * activate_grad(params.dims.relation_act, pre(v, k));
        }

        Mat<T> grad_states = Mat<T>::Zero(n, d);
        Vec<T> gathered(d), grad_gathered(d), grad_selfterm(d), self_in(d);
        std::vector<T> grad_alpha, grad_logit;
        for (int h = 0; h < heads; ++h) {
            const auto& projected = trace.projected[static_cast<std::size_t>(l)][static_cast<std::size_t>(h)];
            const auto& alpha = trace.alpha[static_cast<std::size_t>(l)][static_cast<std::size_t>(h)];
            const auto& w_past = params.rel.w_past[l][h];
            const auto& w_self = params.rel.w_self[l][h];
            auto& g_past = grads.rel.w_past[l][h];
            auto& g_self = grads.rel.w_self[l][h];
            Mat<T> grad_projected = Mat<T>::Zero(n, d);
            Vec<T> g_att_src = Vec<T>::Zero(d), g_att_dst = Vec<T>::Zero(d);

            for (RelationId v = 0; v < n; ++v) {
                if (!active[static_cast<std::size_t>(v)]) continue;
                const auto past = rdg.past_neighbors(v);
                const T* a = alpha.data() + attention_slot(rdg, v);
                const Vec<T> gp = grad_pre.row(v).transpose() * inv_heads;

                gathered.setZero();
                for (std::size_t k = 0; k < past.size(); ++k) gathered.noalias() += a[k] * states.row(past[k]).transpose();
                const T a_self = a[past.size()];
                self_in = a_self * states.row(v).transpose();

                g_past.noalias() += gp * gathered.transpose();
                g_self.noalias() += gp * self_in.transpose();
                grad_gathered.noalias() = w_past.transpose() * gp;
                grad_selfterm.noalias() = w_self.transpose() * gp;

                grad_alpha.assign(past.size() + 1, T(0));
                for (std::size_t k = 0; k < past.size(); ++k) {
                    grad_alpha[k] = grad_gathered.dot(states.row(past[k]).transpose());
                    grad_states.row(past[k]).noalias() += a[k] * grad_gathered.transpose();
                }
                grad_alpha[past.size()] = grad_selfterm.dot(states.row(v).transpose());
                grad_states.row(v).noalias() += a_self * grad_selfterm.transpose();

                // softmax backward
                T weighted = 0;
                for (std::size_t k = 0; k <= past.size(); ++k) weighted += a[k] * grad_alpha[k];
                grad_logit.resize(past.size() + 1);
                for (std::size_t k = 0; k <= past.size(); ++k) grad_logit[k] = a[k] * (grad_alpha[k] - weighted);

                for (std::size_t k = 0; k <= past.size(); ++k) {
                    const RelationId u = k < past.size() ? past[k] : v;
                    const T gl = grad_logit[k];
                    g_att_src.noalias() += gl * projected.row(u).transpose();
                    g_att_dst.noalias() += gl * projected.row(v).transpose();
                    grad_projected.row(u).noalias() += gl * att_src.transpose();
                    grad_projected.row(v).noalias() += gl * att_dst.transpose();
                }
            }
            grads.rel.att.head(d) += g_att_src;
            grads.rel.att.tail(d) += g_att_dst;
            grads.rel.w_att[h].noalias() += grad_projected.transpose() * states;
            grad_states.noalias() += grad_projected * params.rel.w_att[h];
        }
        grad = std::move(grad_states);
    }
}

#define RDGNET_INSTANTIATE(T)                                                                                    \
    template Mat<T> init_relation_states<T>(std::int32_t, RelationId, int);                                      \
    template std::vector<T> relation_attention<T>(const Mat<T>&, const RelationDependencyGraph&,                 \
                                                  const RelationEncoderParams<T>&, int);                         \
    template Mat<T> relation_layer<T>(const Mat<T>&, const RelationDependencyGraph&, const ModelParams<T>&, int); \
    template RelationEmbeddings<T> encode_relations<T>(const RelationDependencyGraph&, RelationId,               \
                                                       const ModelParams<T>&, RelationTrace<T>*);                \
    template void relation_backward<T>(const RelationTrace<T>&, const RelationDependencyGraph&,                  \
                                       const ModelParams<T>&, const Mat<T>&, ModelParams<T>&);

RDGNET_INSTANTIATE(float)
RDGNET_INSTANTIATE(double)
#undef RDGNET_INSTANTIATE

}  // namespace rdgnet
