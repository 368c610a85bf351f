#pragma once

#include <cstdint>
#include <string_view>

#include "rdgnet/model.hpp"

namespace rdgnet {

enum class FreezePolicy { None, FinalLayer };

FreezePolicy parse_freeze_policy(std::string_view s);
std::string freeze_policy_name(FreezePolicy p);
bool is_trainable(std::string_view tensor, const ModelDims& dims, FreezePolicy policy);

struct AdamConfig {
    double learning_rate = 5e-3;
    double weight_decay = 1e-5;
    double lr_decay = 1.0;  // per epoch
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    ModelParams<T> m;
    ModelParams<T> v;
    std::int64_t step = 0;

    static AdamState zeros(const ModelDims& dims) { return {ModelParams<T>::zeros(dims), ModelParams<T>::zeros(dims), 0}; }
};

// Learning rate in effect during `epoch` (0-based).
double scheduled_lr(const AdamConfig& config, int epoch);

// One AdamW update with bias correction. Decay is decoupled:
// theta <- theta (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps). Frozen tensors are left untouched.
template <typename T>
void optimizer_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, const AdamConfig& config,
                    int epoch, FreezePolicy policy = FreezePolicy::None);

}  // namespace rdgnet
