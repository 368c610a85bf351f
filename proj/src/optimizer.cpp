#include "rdgnet/optimizer.hpp"

#include <cmath>
#include <string>

#include "rdgnet/errors.hpp"

namespace rdgnet {

FreezePolicy parse_freeze_policy(std::string_view s) {
    if (s == "none") return FreezePolicy::None;
    if (s == "final-layer" || s == "final_layer") return FreezePolicy::FinalLayer;
    throw ConfigError("unknown freeze policy '" + std::string(s) + "'");
}

std::string freeze_policy_name(FreezePolicy p) { return p == FreezePolicy::FinalLayer ? "final-layer" : "none"; }

bool is_trainable(std::string_view tensor, const ModelDims& dims, FreezePolicy policy) {
    return policy == FreezePolicy::None || is_final_layer_tensor(tensor, dims);
}

double scheduled_lr(const AdamConfig& config, int epoch) {
    return config.learning_rate * std::pow(config.lr_decay, epoch);
}

template <typename T>
void optimizer_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, const AdamConfig& config,
                    int epoch, FreezePolicy policy) {
    if (!(params.dims == grads.dims)) throw ConfigError("gradient shapes do not match parameters");
    if (!(state.m.dims == params.dims)) state = AdamState<T>::zeros(params.dims);
    ++state.step;
    const double lr = scheduled_lr(config, epoch);
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    auto p = params.tensors();
    const auto g = grads.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!is_trainable(p[i].name, params.dims, policy)) continue;
        for (std::size_t k = 0; k < p[i].size; ++k) {
            const double gk = static_cast<double>(g[i].data[k]);
            const double mk = config.beta1 * static_cast<double>(m[i].data[k]) + (1.0 - config.beta1) * gk;
            const double vk = config.beta2 * static_cast<double>(v[i].data[k]) + (1.0 - config.beta2) * gk * gk;
            m[i].data[k] = static_cast<T>(mk);
            v[i].data[k] = static_cast<T>(vk);
            double theta = static_cast<double>(p[i].data[k]) * (1.0 - lr * config.weight_decay);
            theta -= lr * (mk / c1) / (std::sqrt(vk / c2) + config.epsilon);
            p[i].data[k] = static_cast<T>(theta);
        }
    }
}

template void optimizer_step<float>(ModelParams<float>&, const ModelParams<float>&, AdamState<float>&,
                                    const AdamConfig&, int, FreezePolicy);
template void optimizer_step<double>(ModelParams<double>&, const ModelParams<double>&, AdamState<double>&,
                                     const AdamConfig&, int, FreezePolicy);

}  // namespace rdgnet
