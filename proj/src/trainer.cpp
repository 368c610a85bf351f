#include "rdgnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include "rdgnet/errors.hpp"
#include "rdgnet/eval.hpp"
#include "rdgnet/parallel.hpp"
#include "rdgnet/relation_encoder.hpp"

namespace rdgnet {

void TrainConfig::validate() const {
    dims.validate();
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
    if (negatives < 1) throw ConfigError("negatives must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

AdamConfig TrainConfig::adam() const {
    AdamConfig a;
    a.learning_rate = learning_rate;
    a.weight_decay = weight_decay;
    a.lr_decay = lr_decay;
    return a;
}

std::uint64_t component_seed(std::uint64_t seed, std::uint64_t component) {
    // splitmix64 of the seed offset by the component index
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (component + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<EntityId> sample_negatives(const Triple& query, const KnownTrue& known_true,
                                       std::span<const EntityId> candidates, int n, std::mt19937_64& rng) {
    const auto known = known_true.tails(query.head, query.relation);
    std::vector<EntityId> pool;
    pool.reserve(candidates.size());
    for (auto e : candidates) {
        if (e == query.tail) continue;
        if (std::binary_search(known.begin(), known.end(), e)) continue;
        pool.push_back(e);
    }
    const auto take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(std::max(n, 0)));
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(take);
    return pool;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double loss(double positive_score, std::span<const double> negative_scores) {
    double total = softplus(-positive_score);
    for (double s : negative_scores) total += softplus(s);
    return total;
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double loss_grad_positive(double positive_score) { return sigmoid(positive_score) - 1.0; }
double loss_grad_negative(double negative_score) { return sigmoid(negative_score); }

template <typename T>
BatchResult batch_gradients(const KnowledgeGraph& kg, const RelationDependencyGraph& rdg, const ModelParams<T>& params,
                            std::span<TrainExample> batch, const BatchOptions& options, ModelParams<T>* grads) {
    const int d = params.dims.dim;
    const int workers = worker_count(options.threads, batch.size());
    std::vector<ModelParams<T>> worker_grads;
    if (grads) worker_grads.assign(static_cast<std::size_t>(workers), ModelParams<T>::zeros(params.dims));
    std::vector<BatchResult> worker_results(static_cast<std::size_t>(workers));

    parallel_chunks(batch.size(), workers, [&](std::size_t w, std::size_t begin, std::size_t end) {
        auto& result = worker_results[w];
        ModelParams<T>* g = grads ? &worker_grads[w] : nullptr;
        std::map<RelationId, std::vector<std::size_t>> groups;
        for (std::size_t i = begin; i < end; ++i) groups[batch[i].query.relation].push_back(i);

        for (const auto& [r_q, members] : groups) {
            RelationTrace<T> rtrace;
            const auto relations = encode_relations(rdg, r_q, params, g ? &rtrace : nullptr);
            Mat<T> grad_rel = Mat<T>::Zero(relations.rows.rows(), d);
            bool any = false;
            for (auto idx : members) {
                auto& ex = batch[idx];
                std::vector<FactIndex> masked;
                if (options.mask_query_edges) {
                    if (const auto f = kg.find_fact(ex.query)) {
                        masked.push_back(*f);
                        if (kg.partner(*f) >= 0) masked.push_back(kg.partner(*f));
                    }
                }
                std::mt19937_64 sample_rng(ex.sample_seed);
                std::mt19937_64 dropout_rng(component_seed(ex.sample_seed, 3));
                PropagationOptions po;
                po.masked_facts = masked;
                po.dropout = options.dropout;
                po.rng = &dropout_rng;
                PropagationTrace<T> ptrace;
                const auto ctx = propagate_entities(kg, relations, params, ex.query.head, po, g ? &ptrace : nullptr);
                if (!ctx.is_visited(ex.query.tail)) {
                    ++result.skipped;
                    continue;
                }
                if (!ex.negatives) {
                    if (!options.known_true) throw ConfigError("negative sampling requires the known-true index");
                    ex.negatives = sample_negatives(ex.query, *options.known_true, ctx.visited, options.negatives,
                                                    sample_rng);
                }
                const auto& w_score = params.ent.w_score;
                const auto answer_row = ctx.local_of[static_cast<std::size_t>(ex.query.tail)];
                const double s_pos = static_cast<double>(ctx.states.row(answer_row).dot(w_score.transpose()));
                std::vector<double> s_neg;
                std::vector<std::int32_t> neg_rows;
                for (auto e : *ex.negatives) {
                    if (!ctx.is_visited(e) || e == ex.query.tail) continue;
                    const auto row = ctx.local_of[static_cast<std::size_t>(e)];
                    neg_rows.push_back(row);
                    s_neg.push_back(static_cast<double>(ctx.states.row(row).dot(w_score.transpose())));
                }
                result.loss += loss(s_pos, s_neg);
                ++result.used;
                if (!g) continue;

                Mat<T> grad_states = Mat<T>::Zero(ctx.states.rows(), d);
                const T dp = static_cast<T>(loss_grad_positive(s_pos));
                grad_states.row(answer_row) += dp * w_score.transpose();
                g->ent.w_score += dp * ctx.states.row(answer_row).transpose();
                for (std::size_t n = 0; n < neg_rows.size(); ++n) {
                    const T dn = static_cast<T>(loss_grad_negative(s_neg[n]));
                    grad_states.row(neg_rows[n]) += dn * w_score.transpose();
                    g->ent.w_score += dn * ctx.states.row(neg_rows[n]).transpose();
                }
                entity_backward(ptrace, ctx, params, grad_states, *g, grad_rel);
                any = true;
            }
            if (g && any) relation_backward(rtrace, rdg, params, grad_rel, *g);
        }
    });

    BatchResult total;
    for (const auto& r : worker_results) {
        total.loss += r.loss;
        total.used += r.used;
        total.skipped += r.skipped;
    }
    if (grads) {
        *grads = ModelParams<T>::zeros(params.dims);
        auto out = grads->tensors();
        for (const auto& wg : worker_grads) {
            const auto src = wg.tensors();
            for (std::size_t i = 0; i < out.size(); ++i) {
                for (std::size_t k = 0; k < out[i].size; ++k) out[i].data[k] += src[i].data[k];
            }
        }
    }
    if (options.l2 > 0.0) {
        const auto p = params.tensors();
        double sq = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            for (std::size_t k = 0; k < p[i].size; ++k) sq += static_cast<double>(p[i].data[k]) * p[i].data[k];
        }
        total.loss += options.l2 * sq;
        if (grads) {
            auto out = grads->tensors();
            for (std::size_t i = 0; i < p.size(); ++i) {
                for (std::size_t k = 0; k < p[i].size; ++k) {
                    out[i].data[k] += static_cast<T>(2.0 * options.l2 * static_cast<double>(p[i].data[k]));
                }
            }
        }
    }
    if (grads) {
        for (auto& t : grads->tensors()) {
            if (!is_trainable(t.name, params.dims, options.freeze)) {
                std::fill(t.data, t.data + t.size, T(0));
                continue;
            }
            for (std::size_t k = 0; k < t.size; ++k) {
                if (!std::isfinite(static_cast<double>(t.data[k]))) {
                    throw NumericError("non-finite gradient in tensor " + t.name);
                }
            }
        }
    }
    if (!std::isfinite(total.loss)) throw NumericError("non-finite training loss");
    return total;
}

template BatchResult batch_gradients<float>(const KnowledgeGraph&, const RelationDependencyGraph&,
                                            const ModelParams<float>&, std::span<TrainExample>, const BatchOptions&,
                                            ModelParams<float>*);
template BatchResult batch_gradients<double>(const KnowledgeGraph&, const RelationDependencyGraph&,
                                             const ModelParams<double>&, std::span<TrainExample>,
                                             const BatchOptions&, ModelParams<double>*);

void write_log_header(std::ostream& out) { out << "epoch,train_loss,val_mrr,val_h1,val_h10,lr,skipped_queries\n"; }

void write_log_row(std::ostream& out, const EpochLog& row) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6g,%zu\n", row.epoch, row.train_loss, row.val_mrr,
                  row.val_h1, row.val_h10, row.lr, row.skipped);
    out << buf;
}

TrainResult train(const DatasetSplits& splits, const TrainConfig& config, const ModelParams<float>* init,
                  std::ostream* progress) {
    config.validate();
    if (splits.train_triples.empty()) throw ConfigError("training set is empty");
    const auto& kg = splits.train;
    const auto rdg = build_rdg(kg);

    ModelParams<float> params;
    if (init) {
        if (!(init->dims == config.dims)) throw ConfigError("initial parameters do not match the configured dimensions");
        params = *init;
    } else {
        std::mt19937_64 init_rng(component_seed(config.seed, 0));
        params = ModelParams<float>::random(config.dims, init_rng);
    }
    auto state = AdamState<float>::zeros(config.dims);
    const auto adam = config.adam();

    auto queries = both_directions(splits.train_triples, kg);
    std::mt19937_64 shuffle_rng(component_seed(config.seed, 1));
    const std::uint64_t sample_base = component_seed(config.seed, 2);

    BatchOptions bo;
    bo.negatives = config.negatives;
    bo.l2 = config.l2;
    bo.dropout = config.dropout;
    bo.mask_query_edges = config.mask_query_edges;
    bo.freeze = config.freeze;
    bo.threads = config.threads;
    bo.known_true = &splits.known_true;

    EvalOptions eo;
    eo.split = EvalSplit::Valid;
    eo.threads = config.threads;
    eo.max_queries = config.max_valid_queries;
    const bool has_valid = !splits.valid_queries.empty();

    TrainResult result;
    result.best.params = params;
    double best_mrr = -1.0;
    int since_best = 0;
    auto grads = ModelParams<float>::zeros(config.dims);
    std::vector<TrainExample> batch;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(queries.begin(), queries.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t used = 0, skipped = 0;
        for (std::size_t start = 0; start < queries.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const auto stop = std::min(queries.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                const auto seed = component_seed(sample_base ^ (static_cast<std::uint64_t>(epoch) << 32), i);
                batch.push_back({queries[i], std::nullopt, seed});
            }
            const auto r = batch_gradients(kg, rdg, params, std::span<TrainExample>(batch), bo, &grads);
            loss_sum += r.loss;
            used += r.used;
            skipped += r.skipped;
            if (r.used > 0) optimizer_step(params, grads, state, adam, epoch, config.freeze);
        }
        if (!params.all_finite()) throw NumericError("parameters became non-finite in epoch " + std::to_string(epoch + 1));

        EpochLog row;
        row.epoch = epoch + 1;
        row.train_loss = used ? loss_sum / static_cast<double>(used) : 0.0;
        row.lr = scheduled_lr(adam, epoch);
        row.skipped = skipped;
        if (has_valid) {
            const auto report = evaluate(params, splits, eo, &rdg);
            row.val_mrr = report.all.mrr;
            row.val_h1 = report.all.hits1;
            row.val_h10 = report.all.hits10;
        }
        result.log.push_back(row);
        if (progress) write_log_row(*progress, row);

        const bool improved = epoch == 0 || !has_valid || row.val_mrr > best_mrr;
        if (improved) {
            best_mrr = row.val_mrr;
            result.best.params = params;
            result.best.moments = state;
            result.best.epoch = row.epoch;
            result.best.best_val_mrr = row.val_mrr;
            result.best_epoch = row.epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

TrainResult pretrain_sequence(std::span<const PretrainStage> stages, std::ostream* progress) {
    if (stages.empty()) throw ConfigError("no pre-training stages given");
    TrainResult last;
    std::vector<EpochLog> log;
    const ModelParams<float>* init = nullptr;
    for (const auto& stage : stages) {
        if (!stage.splits) throw ConfigError("pre-training stage without data");
        auto r = train(*stage.splits, stage.config, init, progress);
        log.insert(log.end(), r.log.begin(), r.log.end());
        last = std::move(r);
        init = &last.best.params;
    }
    last.log = std::move(log);
    return last;
}

TrainResult finetune(const Checkpoint& start, const DatasetSplits& splits, TrainConfig config, std::ostream* progress) {
    config.freeze = FreezePolicy::FinalLayer;
    config.dims = start.params.dims;
    if (config.max_epochs == 0) {
        TrainResult r;
        r.best = start;
        r.best_epoch = start.epoch;
        return r;
    }
    return train(splits, config, &start.params, progress);
}

}  // namespace rdgnet
