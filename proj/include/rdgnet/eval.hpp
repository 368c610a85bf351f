#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdgnet/kg_store.hpp"
#include "rdgnet/model.hpp"
#include "rdgnet/rdg.hpp"

namespace rdgnet {

struct QueryRank {
    Triple query;
    double rank = 0.0;
    bool reached = true;
    bool inverse_direction = false;
};

struct MetricSummary {
    std::size_t count = 0;
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
};

struct EvalReport {
    std::vector<QueryRank> ranks;
    MetricSummary all;
    MetricSummary tail_prediction;
    MetricSummary head_prediction;  // inverse-direction queries
    std::size_t unreachable = 0;
    // Set by perturbed_evaluate when k exceeded the edge count.
    bool degenerate = false;
};

// Filtered rank with average tie handling. `reached` holds the scored
// candidates (visited entities); everything else ties below them.
// Throws DataError when the answer id is outside [0, entity_count).
double filtered_rank(const Triple& query, std::span<const std::pair<EntityId, double>> reached,
                     const KnownTrue& known_true, std::int32_t entity_count);

MetricSummary summarize(std::span<const double> ranks);
EvalReport compute_metrics(std::vector<QueryRank> ranks);

enum class EvalSplit { Valid, Test };

struct EvalOptions {
    EvalSplit split = EvalSplit::Test;
    bool tail_direction = true;
    bool head_direction = true;
    int threads = 1;
    // Cap on queries (after direction expansion); 0 = all.
    std::size_t max_queries = 0;
};

// Ranks every selected query against splits.train used as the fact graph.
// Builds the graph's RDG unless one is supplied.
EvalReport evaluate(const ModelParams<float>& params, const DatasetSplits& splits, const EvalOptions& options = {},
                    const RelationDependencyGraph* rdg = nullptr);

struct EdgeImportance {
    RelationEdge edge;
    double importance = 0.0;
    std::int64_t samples = 0;
};

struct EdgeImportanceTable {
    std::vector<EdgeImportance> entries;  // one per retained RDG edge, in retained_edges() order
};

// Active: only weights whose source row was non-zero at that layer's input,
// i.e. weights that scaled an actual message. Edges that never carried one
// score 0. All: every softmax slot, including rows the query has not reached.
enum class ImportanceScope { Active, All };
ImportanceScope parse_importance_scope(const std::string& s);
std::string importance_scope_name(ImportanceScope s);

// Mean attention weight of each retained edge over sampled query relations,
// all relation layers and all heads. Query relations are drawn from the
// selected split's queries (both directions).
EdgeImportanceTable edge_importance(const ModelParams<float>& params, const DatasetSplits& splits,
                                    const RelationDependencyGraph& rdg, std::size_t sample, std::mt19937_64& rng,
                                    EvalSplit split = EvalSplit::Test,
                                    ImportanceScope scope = ImportanceScope::Active);

enum class PerturbMode { Top, Bottom, Random };
PerturbMode parse_perturb_mode(const std::string& s);
std::string perturb_mode_name(PerturbMode m);

// Edges removed for a given mode and k. Top/bottom use importance order with ties
// broken by (target, source); random uses `rng`.
std::vector<RelationEdge> select_edges(const EdgeImportanceTable& table, PerturbMode mode, std::size_t k,
                                       std::mt19937_64& rng);

EvalReport perturbed_evaluate(const ModelParams<float>& params, const DatasetSplits& splits,
                              const RelationDependencyGraph& rdg, const EdgeImportanceTable& table, PerturbMode mode,
                              std::size_t k, std::mt19937_64& rng, const EvalOptions& options = {});

void write_report_csv(std::ostream& out, const EvalReport& r);
void write_report_table(std::ostream& out, const EvalReport& r);
void write_ranks_tsv(std::ostream& out, const EvalReport& r, const VocabMap* vocab = nullptr);

}  // namespace rdgnet
