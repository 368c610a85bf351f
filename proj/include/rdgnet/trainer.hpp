#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rdgnet/checkpoint.hpp"
#include "rdgnet/entity_encoder.hpp"
#include "rdgnet/kg_store.hpp"
#include "rdgnet/model.hpp"
#include "rdgnet/optimizer.hpp"
#include "rdgnet/rdg.hpp"

namespace rdgnet {

struct TrainConfig {
    ModelDims dims;
    double learning_rate = 5e-3;
    double weight_decay = 1e-5;  // decoupled AdamW decay
    double l2 = 0.0;             // coefficient of the squared-norm term in the loss
    double lr_decay = 1.0;       // per-epoch multiplier
    int negatives = 64;
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 10;
    FreezePolicy freeze = FreezePolicy::None;
    std::uint64_t seed = 0;
    double dropout = 0.0;
    int threads = 1;
    // Hide the query's own fact (and its inverse) while propagating a training query.
    bool mask_query_edges = true;
    // Cap on validation queries evaluated per epoch; 0 = all.
    std::size_t max_valid_queries = 0;

    void validate() const;
    AdamConfig adam() const;
};

// Seeds derived from the run seed, one stream per component:
// 0 parameter init, 1 query shuffling, 2 negative sampling, 3 dropout, 4 perturbation.
std::uint64_t component_seed(std::uint64_t seed, std::uint64_t component);

// Up to n entities drawn uniformly without replacement from `candidates`
// minus the known true tails of (head, relation).
std::vector<EntityId> sample_negatives(const Triple& query, const KnownTrue& known_true,
                                       std::span<const EntityId> candidates, int n, std::mt19937_64& rng);

// -log sigmoid(s+) - sum log(1 - sigmoid(s-)), in log-sum-exp form.
double loss(double positive_score, std::span<const double> negative_scores);
double softplus(double x);
// dLoss/ds+ and dLoss/ds- for one negative.
double loss_grad_positive(double positive_score);
double loss_grad_negative(double negative_score);

struct TrainExample {
    Triple query;
    // Negatives are sampled from the visited set when absent.
    std::optional<std::vector<EntityId>> negatives;
    std::uint64_t sample_seed = 0;
};

struct BatchOptions {
    int negatives = 64;
    double l2 = 0.0;
    double dropout = 0.0;
    bool mask_query_edges = true;
    FreezePolicy freeze = FreezePolicy::None;
    int threads = 1;
    const KnownTrue* known_true = nullptr;  // required when negatives are sampled
};

struct BatchResult {
    double loss = 0.0;  // summed over used examples, plus the l2 term
    std::size_t used = 0;
    std::size_t skipped = 0;  // answer not reached within L_e hops
};

// Forward and exact reverse pass over a batch. Gradients are written to `grads`
// when given (resized and zeroed first). Frozen tensors receive zero gradient.
template <typename T>
BatchResult batch_gradients(const KnowledgeGraph& kg, const RelationDependencyGraph& rdg, const ModelParams<T>& params,
                            std::span<TrainExample> batch, const BatchOptions& options, ModelParams<T>* grads);

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;  // mean per used query
    double val_mrr = 0.0;
    double val_h1 = 0.0;
    double val_h10 = 0.0;
    double lr = 0.0;
    std::size_t skipped = 0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochLog& row);

struct TrainResult {
    Checkpoint best;  // parameters of the best validation epoch
    std::vector<EpochLog> log;
    int best_epoch = 0;
    bool early_stopped = false;
};

// Epoch loop with early stopping on validation MRR. `init` replaces the random
// initialisation. Throws ConfigError on an empty training set.
TrainResult train(const DatasetSplits& splits, const TrainConfig& config, const ModelParams<float>* init = nullptr,
                  std::ostream* progress = nullptr);

struct PretrainStage {
    const DatasetSplits* splits = nullptr;
    TrainConfig config;
};

// Trains each stage starting from the previous stage's best parameters.
// Parameter transfer between stages is the identity.
TrainResult pretrain_sequence(std::span<const PretrainStage> stages, std::ostream* progress = nullptr);

// Final-layer fine-tuning; all other tensors are copied through unchanged.
TrainResult finetune(const Checkpoint& start, const DatasetSplits& splits, TrainConfig config,
                     std::ostream* progress = nullptr);

}  // namespace rdgnet
