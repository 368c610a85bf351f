#pragma once

// Central-difference gradient check on a small random instance, shared by the
// unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rdgnet/trainer.hpp"

namespace fdcheck {

using namespace rdgnet;

struct FdInstance {
    DatasetSplits splits;
    RelationDependencyGraph rdg;
    ModelParams<double> params;
    std::vector<TrainExample> batch;
};

// 5 entities, 3 relations, two layers on each side.
inline FdInstance make_instance(std::uint64_t seed, bool self_loop = true, Activation act = Activation::Tanh) {
    std::mt19937_64 rng(seed);
    auto g = oracle::random_graph(rng, 5, 3, 10, 5, 3, 10);
    FdInstance inst;
    inst.splits = make_splits(g.vocab, g.triples, {}, {}, true);
    inst.rdg = build_rdg(inst.splits.train);
    ModelDims dims;
    dims.dim = 3;
    dims.heads = 2;
    dims.relation_layers = 2;
    dims.entity_layers = 2;
    dims.relation_act = act;
    dims.entity_act = act;
    dims.self_loop = self_loop;
    inst.params = ModelParams<double>::random(dims, rng);
    const auto queries = both_directions(inst.splits.train_triples, inst.splits.train);
    for (std::size_t i = 0; i < queries.size(); ++i) inst.batch.push_back({queries[i], std::nullopt, i});
    return inst;
}

inline double batch_loss(FdInstance& inst, const BatchOptions& bo) {
    return batch_gradients<double>(inst.splits.train, inst.rdg, inst.params, std::span<TrainExample>(inst.batch), bo,
                                   nullptr)
        .loss;
}

// Worst relative error between analytic and central-difference gradients, per tensor.
inline std::map<std::string, double> relative_errors(FdInstance& inst, const BatchOptions& bo, std::size_t* used = nullptr) {
    ModelParams<double> grads;
    const auto r = batch_gradients<double>(inst.splits.train, inst.rdg, inst.params,
                                           std::span<TrainExample>(inst.batch), bo, &grads);
    if (used) *used = r.used;
    std::map<std::string, double> worst;
    auto pt = inst.params.tensors();
    const auto gt = grads.tensors();
    const double h = 1e-4;
    for (std::size_t i = 0; i < pt.size(); ++i) {
        double w = 0;
        for (std::size_t k = 0; k < pt[i].size; ++k) {
            const double orig = pt[i].data[k];
            pt[i].data[k] = orig + h;
            const double lp = batch_loss(inst, bo);
            pt[i].data[k] = orig - h;
            const double lm = batch_loss(inst, bo);
            pt[i].data[k] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double an = gt[i].data[k];
            w = std::max(w, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
        worst[pt[i].name] = w;
    }
    return worst;
}

}  // namespace fdcheck
