#include "rdgnet/model.hpp"

#include <cmath>

#include "rdgnet/errors.hpp"

namespace rdgnet {

Activation parse_activation(std::string_view tag) {
    if (tag == "idd" || tag == "identity" || tag == "id") return Activation::Identity;
    if (tag == "relu") return Activation::Relu;
    if (tag == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + std::string(tag) + "'");
}

std::string activation_tag(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        default: return "idd";
    }
}

void ModelDims::validate() const {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (heads < 1) throw ConfigError("heads must be >= 1");
    if (relation_layers < 0) throw ConfigError("relation_layers must be >= 0");
    if (entity_layers < 0) throw ConfigError("entity_layers must be >= 0");
}

namespace {

// Calls fn(name, tensor) for every tensor in declared order.
template <typename P, typename Fn>
void visit(P& p, Fn&& fn) {
    const auto& dims = p.dims;
    for (int l = 0; l < dims.relation_layers; ++l) {
        for (int h = 0; h < dims.heads; ++h) {
            fn("rel.w_past." + std::to_string(l) + "." + std::to_string(h), p.rel.w_past[l][h]);
        }
    }
    for (int l = 0; l < dims.relation_layers; ++l) {
        for (int h = 0; h < dims.heads; ++h) {
            fn("rel.w_self." + std::to_string(l) + "." + std::to_string(h), p.rel.w_self[l][h]);
        }
    }
    for (int h = 0; h < dims.heads; ++h) fn("rel.w_att." + std::to_string(h), p.rel.w_att[h]);
    fn(std::string("rel.att"), p.rel.att);
    for (int l = 0; l < dims.entity_layers; ++l) {
        const auto s = std::to_string(l);
        fn("ent.w_msg." + s, p.ent.w_msg[l]);
        fn("ent.w_gate." + s, p.ent.w_gate[l]);
        fn("ent.v_gate." + s, p.ent.v_gate[l]);
    }
    if (dims.self_loop) fn(std::string("ent.w_loop"), p.ent.w_loop);
    fn(std::string("ent.w_score"), p.ent.w_score);
}

template <typename M>
std::vector<std::size_t> shape_of(const M& m) {
    if constexpr (M::ColsAtCompileTime == 1) {
        return {static_cast<std::size_t>(m.rows())};
    } else {
        return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    }
}

}  // namespace

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelDims& dims) {
    dims.validate();
    const int d = dims.dim;
    ModelParams p;
    p.dims = dims;
    p.rel.w_past.assign(dims.relation_layers, std::vector<Mat<T>>(dims.heads, Mat<T>::Zero(d, d)));
    p.rel.w_self.assign(dims.relation_layers, std::vector<Mat<T>>(dims.heads, Mat<T>::Zero(d, d)));
    p.rel.w_att.assign(dims.heads, Mat<T>::Zero(d, d));
    p.rel.att = Vec<T>::Zero(2 * d);
    p.ent.w_msg.assign(dims.entity_layers, Mat<T>::Zero(d, d));
    p.ent.w_gate.assign(dims.entity_layers, Mat<T>::Zero(d, 3 * d));
    p.ent.v_gate.assign(dims.entity_layers, Vec<T>::Zero(d));
    p.ent.w_loop = dims.self_loop ? Vec<T>::Zero(d) : Vec<T>();
    p.ent.w_score = Vec<T>::Zero(d);
    return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::random(const ModelDims& dims, std::mt19937_64& rng) {
    auto p = zeros(dims);
    for (auto& t : p.tensors()) {
        // Glorot bound from the tensor's fan-in/fan-out; vectors treated as 1 x n.
        const double fan_in = t.shape.size() == 2 ? static_cast<double>(t.shape[1]) : static_cast<double>(t.shape[0]);
        const double fan_out = t.shape.size() == 2 ? static_cast<double>(t.shape[0]) : 1.0;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] = static_cast<T>(u(rng));
    }
    return p;
}

template <typename T>
std::vector<TensorView<T>> ModelParams<T>::tensors() {
    std::vector<TensorView<T>> out;
    visit(*this, [&](std::string name, auto& m) {
        out.push_back({std::move(name), m.data(), static_cast<std::size_t>(m.size()), shape_of(m)});
    });
    return out;
}

template <typename T>
std::vector<TensorView<const T>> ModelParams<T>::tensors() const {
    std::vector<TensorView<const T>> out;
    visit(*this, [&](std::string name, const auto& m) {
        out.push_back({std::move(name), m.data(), static_cast<std::size_t>(m.size()), shape_of(m)});
    });
    return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.size;
    return n;
}

template <typename T>
void ModelParams<T>::set_zero() {
    for (auto& t : tensors()) std::fill(t.data, t.data + t.size, T(0));
}

template <typename T>
bool ModelParams<T>::all_finite() const {
    for (const auto& t : tensors()) {
        for (std::size_t i = 0; i < t.size; ++i) {
            if (!std::isfinite(t.data[i])) return false;
        }
    }
    return true;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
    auto out = ModelParams<U>::zeros(dims);
    auto dst = out.tensors();
    const auto src = tensors();
    for (std::size_t i = 0; i < src.size(); ++i) {
        for (std::size_t k = 0; k < src[i].size; ++k) dst[i].data[k] = static_cast<U>(src[i].data[k]);
    }
    return out;
}

bool is_final_layer_tensor(std::string_view name, const ModelDims& dims) {
    if (name == "ent.w_score") return true;
    if (dims.entity_layers == 0) return false;
    const auto last = std::to_string(dims.entity_layers - 1);
    return name == "ent.w_msg." + last || name == "ent.w_gate." + last || name == "ent.v_gate." + last;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace rdgnet
