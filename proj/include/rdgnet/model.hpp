#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace rdgnet {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2 };

// Accepts "idd"/"identity", "relu", "tanh".
Activation parse_activation(std::string_view tag);
std::string activation_tag(Activation a);

template <typename T>
inline T activate(Activation a, T x) {
    switch (a) {
        case Activation::Relu: return x > T(0) ? x : T(0);
        case Activation::Tanh: return std::tanh(x);
        default: return x;
    }
}

// Derivative expressed through the pre-activation value.
template <typename T>
inline T activate_grad(Activation a, T pre) {
    switch (a) {
        case Activation::Relu: return pre > T(0) ? T(1) : T(0);
        case Activation::Tanh: {
            const T t = std::tanh(pre);
            return T(1) - t * t;
        }
        default: return T(1);
    }
}

struct ModelDims {
    int dim = 32;              // d
    int heads = 8;             // H
    int relation_layers = 3;   // L_r
    int entity_layers = 5;     // L_e
    Activation relation_act = Activation::Relu;
    Activation entity_act = Activation::Relu;
    // Each visited entity also passes its state to itself through an identity edge.
    bool self_loop = true;

    bool operator==(const ModelDims&) const = default;
    void validate() const;
};

template <typename T>
struct RelationEncoderParams {
    std::vector<std::vector<Mat<T>>> w_past;  // [layer][head], d x d, applied to the past-neighbor sum
    std::vector<std::vector<Mat<T>>> w_self;  // [layer][head], d x d, applied to the self term
    std::vector<Mat<T>> w_att;                // [head], d x d, shared across layers
    Vec<T> att;                               // 2d, shared across heads and layers
};

template <typename T>
struct EntityEncoderParams {
    std::vector<Mat<T>> w_msg;   // [layer], d x d
    std::vector<Mat<T>> w_gate;  // [layer], d x 3d
    std::vector<Vec<T>> v_gate;  // [layer], d
    Vec<T> w_loop;               // d, relation embedding of the identity edge (empty without self loops)
    Vec<T> w_score;              // d
};

// A named, flat view of one parameter tensor.
template <typename T>
struct TensorView {
    std::string name;
    T* data;
    std::size_t size;
    std::vector<std::size_t> shape;
};

template <typename T>
struct ModelParams {
    ModelDims dims;
    RelationEncoderParams<T> rel;
    EntityEncoderParams<T> ent;

    // All-zero tensors of the right shapes.
    static ModelParams zeros(const ModelDims& dims);
    // Uniform Glorot initialisation from `rng`.
    static ModelParams random(const ModelDims& dims, std::mt19937_64& rng);

    // Declared order: rel.w_past, rel.w_self (layer-major, head-minor), rel.w_att,
    // rel.att, then per entity layer w_msg, w_gate, v_gate, then w_loop (with self loops)
    // and finally w_score.
    std::vector<TensorView<T>> tensors();
    std::vector<TensorView<const T>> tensors() const;

    std::size_t parameter_count() const;
    void set_zero();
    bool all_finite() const;

    template <typename U>
    ModelParams<U> cast() const;
};

// Tensors updated under the final-layer fine-tuning policy.
bool is_final_layer_tensor(std::string_view name, const ModelDims& dims);

}  // namespace rdgnet
