#include "rdgnet/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include "rdgnet/entity_encoder.hpp"
#include "rdgnet/errors.hpp"
#include "rdgnet/parallel.hpp"
#include "rdgnet/relation_encoder.hpp"

namespace rdgnet {

double filtered_rank(const Triple& query, std::span<const std::pair<EntityId, double>> reached,
                     const KnownTrue& known_true, std::int32_t entity_count) {
    if (query.tail < 0 || query.tail >= entity_count) {
        throw DataError("answer entity " + std::to_string(query.tail) + " out of range");
    }
    const auto filtered = known_true.tails(query.head, query.relation);
    auto is_filtered = [&](EntityId e) {
        return e != query.tail && std::binary_search(filtered.begin(), filtered.end(), e);
    };

    bool answer_reached = false;
    double answer_score = 0.0;
    for (const auto& [e, s] : reached) {
        if (e == query.tail) {
            answer_reached = true;
            answer_score = s;
            break;
        }
    }

    std::int64_t reached_kept = 0, greater = 0, ties = 0;
    for (const auto& [e, s] : reached) {
        if (is_filtered(e)) continue;
        ++reached_kept;
        if (!answer_reached || e == query.tail) continue;
        if (s > answer_score) {
            ++greater;
        } else if (s == answer_score) {
            ++ties;
        }
    }
    if (answer_reached) return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;

    std::int64_t filtered_in_range = 0;
    for (auto e : filtered) {
        if (e != query.tail && e >= 0 && e < entity_count) ++filtered_in_range;
    }
    const std::int64_t universe = entity_count - filtered_in_range;
    const std::int64_t unreached = universe - reached_kept;  // includes the answer
    return static_cast<double>(reached_kept) + static_cast<double>(unreached + 1) / 2.0;
}

MetricSummary summarize(std::span<const double> ranks) {
    MetricSummary m;
    m.count = ranks.size();
    if (ranks.empty()) return m;
    for (double r : ranks) {
        m.mrr += 1.0 / r;
        m.hits1 += r <= 1.0 ? 1.0 : 0.0;
        m.hits3 += r <= 3.0 ? 1.0 : 0.0;
        m.hits10 += r <= 10.0 ? 1.0 : 0.0;
    }
    const auto n = static_cast<double>(ranks.size());
    m.mrr /= n;
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    return m;
}

EvalReport compute_metrics(std::vector<QueryRank> ranks) {
    EvalReport r;
    std::vector<double> all, tail, head;
    for (const auto& q : ranks) {
        all.push_back(q.rank);
        (q.inverse_direction ? head : tail).push_back(q.rank);
        if (!q.reached) ++r.unreachable;
    }
    r.all = summarize(all);
    r.tail_prediction = summarize(tail);
    r.head_prediction = summarize(head);
    r.ranks = std::move(ranks);
    return r;
}

namespace {

std::vector<QueryRank> select_queries(const DatasetSplits& splits, const EvalOptions& options) {
    const auto& base = options.split == EvalSplit::Valid ? splits.valid_queries : splits.test_queries;
    const auto& kg = splits.train;
    std::vector<QueryRank> out;
    for (const auto& t : base) {
        if (options.tail_direction) out.push_back({t, 0.0, true, false});
        if (options.head_direction && kg.has_inverses()) {
            out.push_back({{t.tail, kg.inverse_of(t.relation), t.head}, 0.0, true, true});
        }
    }
    if (options.max_queries > 0 && out.size() > options.max_queries) out.resize(options.max_queries);
    return out;
}

}  // namespace

EvalReport evaluate(const ModelParams<float>& params, const DatasetSplits& splits, const EvalOptions& options,
                    const RelationDependencyGraph* rdg) {
    const auto& kg = splits.train;
    RelationDependencyGraph own;
    if (!rdg) {
        own = build_rdg(kg);
        rdg = &own;
    }
    auto queries = select_queries(splits, options);
    for (const auto& q : queries) {
        if (q.query.head < 0 || q.query.head >= kg.entity_count() || q.query.relation < 0 ||
            q.query.relation >= kg.relation_count()) {
            throw DataError("evaluation query outside the graph's vocabulary");
        }
    }

    // One relation encoding per distinct query relation.
    std::map<RelationId, RelationEmbeddings<float>> encoded;
    for (const auto& q : queries) {
        if (!encoded.contains(q.query.relation)) {
            encoded.emplace(q.query.relation, encode_relations(*rdg, q.query.relation, params));
        }
    }

    parallel_chunks(queries.size(), options.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<std::pair<EntityId, double>> reached;
        for (std::size_t i = begin; i < end; ++i) {
            auto& q = queries[i];
            const auto ctx = propagate_entities(kg, encoded.at(q.query.relation), params, q.query.head);
            const Vec<float> scores = visited_scores(ctx, params);
            reached.clear();
            for (Eigen::Index k = 0; k < scores.size(); ++k) {
                reached.emplace_back(ctx.visited[static_cast<std::size_t>(k)], static_cast<double>(scores[k]));
            }
            q.reached = ctx.is_visited(q.query.tail);
            q.rank = filtered_rank(q.query, reached, splits.known_true, kg.entity_count());
        }
    });
    return compute_metrics(std::move(queries));
}

EdgeImportanceTable edge_importance(const ModelParams<float>& params, const DatasetSplits& splits,
                                    const RelationDependencyGraph& rdg, std::size_t sample, std::mt19937_64& rng,
                                    EvalSplit split, ImportanceScope scope) {
    EvalOptions opts;
    opts.split = split;
    const auto queries = select_queries(splits, opts);

    std::vector<RelationId> relations;
    if (queries.empty()) {
        for (RelationId r = 0; r < rdg.relation_count(); ++r) relations.push_back(r);
    } else {
        for (const auto& q : queries) relations.push_back(q.query.relation);
    }
    std::vector<RelationId> picked;
    if (sample >= relations.size()) {
        picked = relations;
    } else {
        std::vector<std::size_t> idx(relations.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < sample; ++i) picked.push_back(relations[idx[i]]);
    }

    const auto edges = rdg.retained_edges();
    std::vector<double> sum(edges.size(), 0.0);
    std::vector<std::int64_t> count(edges.size(), 0);
    for (auto r_q : picked) {
        RelationTrace<float> trace;
        encode_relations(rdg, r_q, params, &trace);
        for (std::size_t l = 0; l < trace.alpha.size(); ++l) {
            const auto& active = trace.active[l];
            for (const auto& alpha : trace.alpha[l]) {
                std::size_t e = 0;
                for (RelationId v = 0; v < rdg.relation_count(); ++v) {
                    const auto past = rdg.past_neighbors(v);
                    const auto* a = alpha.data() + attention_slot(rdg, v);
                    for (std::size_t k = 0; k < past.size(); ++k, ++e) {
                        if (scope == ImportanceScope::Active && !active[static_cast<std::size_t>(past[k])]) continue;
                        sum[e] += static_cast<double>(a[k]);
                        ++count[e];
                    }
                }
            }
        }
    }
    EdgeImportanceTable table;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        table.entries.push_back({edges[e], count[e] ? sum[e] / static_cast<double>(count[e]) : 0.0, count[e]});
    }
    return table;
}

ImportanceScope parse_importance_scope(const std::string& s) {
    if (s == "active") return ImportanceScope::Active;
    if (s == "all") return ImportanceScope::All;
    throw ConfigError("unknown importance scope '" + s + "'");
}

std::string importance_scope_name(ImportanceScope s) { return s == ImportanceScope::Active ? "active" : "all"; }

PerturbMode parse_perturb_mode(const std::string& s) {
    if (s == "top") return PerturbMode::Top;
    if (s == "bottom") return PerturbMode::Bottom;
    if (s == "random") return PerturbMode::Random;
    throw ConfigError("unknown perturbation mode '" + s + "'");
}

std::string perturb_mode_name(PerturbMode m) {
    switch (m) {
        case PerturbMode::Top: return "top";
        case PerturbMode::Bottom: return "bottom";
        default: return "random";
    }
}

std::vector<RelationEdge> select_edges(const EdgeImportanceTable& table, PerturbMode mode, std::size_t k,
                                       std::mt19937_64& rng) {
    std::vector<std::size_t> order(table.entries.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
        const auto& e = table.entries[i].edge;
        return std::make_pair(e.second, e.first);
    };
    if (mode == PerturbMode::Random) {
        std::shuffle(order.begin(), order.end(), rng);
    } else {
        const bool top = mode == PerturbMode::Top;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double ia = table.entries[a].importance;
            const double ib = table.entries[b].importance;
            if (ia != ib) return top ? ia > ib : ia < ib;
            return key(a) < key(b);
        });
    }
    std::vector<RelationEdge> out;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(table.entries[order[i]].edge);
    return out;
}

EvalReport perturbed_evaluate(const ModelParams<float>& params, const DatasetSplits& splits,
                              const RelationDependencyGraph& rdg, const EdgeImportanceTable& table, PerturbMode mode,
                              std::size_t k, std::mt19937_64& rng, const EvalOptions& options) {
    const auto removed = select_edges(table, mode, k, rng);
    const auto perturbed = rdg.without(removed);
    auto report = evaluate(params, splits, options, &perturbed);
    report.degenerate = k > table.entries.size();
    return report;
}

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& r) {
    out << "direction,queries,mrr,h1,h3,h10\n";
    auto row = [&](const char* name, const MetricSummary& m) {
        out << name << ',' << m.count << ',' << fmt(m.mrr) << ',' << fmt(m.hits1) << ',' << fmt(m.hits3) << ','
            << fmt(m.hits10) << '\n';
    };
    row("all", r.all);
    row("tail", r.tail_prediction);
    row("head", r.head_prediction);
}

void write_report_table(std::ostream& out, const EvalReport& r) {
    char buf[160];
    out << "direction   queries      MRR     H@1     H@3    H@10\n";
    auto row = [&](const char* name, const MetricSummary& m) {
        std::snprintf(buf, sizeof buf, "%-10s %8zu  %7.4f %7.4f %7.4f %7.4f\n", name, m.count, m.mrr, m.hits1,
                      m.hits3, m.hits10);
        out << buf;
    };
    row("all", r.all);
    row("tail", r.tail_prediction);
    row("head", r.head_prediction);
    out << "unreachable answers: " << r.unreachable << '\n';
    if (r.degenerate) out << "note: every RDG edge was removed\n";
}

void write_ranks_tsv(std::ostream& out, const EvalReport& r, const VocabMap* vocab) {
    for (const auto& q : r.ranks) {
        if (vocab) {
            out << vocab->entities.name(q.query.head) << '\t' << vocab->relation_name(q.query.relation) << '\t'
                << vocab->entities.name(q.query.tail);
        } else {
            out << q.query.head << '\t' << q.query.relation << '\t' << q.query.tail;
        }
        out << '\t' << fmt(q.rank) << '\n';
    }
}

}  // namespace rdgnet
