#include "rdgnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rdgnet/errors.hpp"

namespace rdgnet {

namespace {

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(std::move(t));
    return out;
}

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

}  // namespace

std::vector<std::pair<std::string, RelationId>> parse_relation_list(std::istream& in) {
    std::vector<std::pair<std::string, RelationId>> out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            out.emplace_back(line, static_cast<RelationId>(out.size()));
            continue;
        }
        const auto id_text = line.substr(tab + 1);
        try {
            std::size_t used = 0;
            const long id = std::stol(id_text, &used);
            if (used != id_text.size() || id < 0) throw std::invalid_argument(id_text);
            out.emplace_back(line.substr(0, tab), static_cast<RelationId>(id));
        } catch (const std::exception&) {
            throw ParseError(no, "relation id '" + id_text + "' is not a non-negative integer");
        }
    }
    return out;
}

CanonicalizationOutput canonicalize(std::span<const std::pair<std::string, RelationId>> relations,
                                    std::istream& train_interactions, std::span<const NamedTriple> kg_triples,
                                    std::istream& test_interactions, const std::string& interaction_name) {
    CanonicalizationOutput out;

    // Phase I
    RelationId r_max = -1;
    for (const auto& [name, id] : relations) {
        r_max = std::max(r_max, id);
        if (name == interaction_name) throw DataError("relation '" + interaction_name + "' already exists");
    }
    out.interaction_relation = r_max + 1;
    out.relations.assign(static_cast<std::size_t>(out.interaction_relation) + 1, std::string());
    for (const auto& [name, id] : relations) {
        auto& slot = out.relations[static_cast<std::size_t>(id)];
        if (!slot.empty() && slot != name) throw DataError("relation id " + std::to_string(id) + " is used twice");
        slot = name;
    }
    out.relations.back() = interaction_name;

    // Phase II
    std::vector<NamedTriple> interactions;
    std::string line;
    while (std::getline(train_interactions, line)) {
        const auto t = tokens(line);
        if (t.size() < 2) {
            if (!t.empty()) ++out.skipped_lines;
            continue;
        }
        for (std::size_t i = 1; i < t.size(); ++i) interactions.push_back({t[0], interaction_name, t[i]});
    }

    // Phase III
    std::set<NamedTriple> seen;
    for (const auto& t : kg_triples) {
        if (seen.insert(t).second) out.triples.push_back(t);
    }
    for (const auto& t : interactions) {
        if (seen.insert(t).second) out.triples.push_back(t);
    }

    // Phase IV
    std::set<std::string> entities;
    for (const auto& t : out.triples) {
        entities.insert(t[0]);
        entities.insert(t[2]);
    }
    while (std::getline(test_interactions, line)) {
        const auto t = tokens(line);
        if (t.size() < 2) {
            if (!t.empty()) ++out.skipped_lines;
            continue;
        }
        entities.insert(t.begin(), t.end());
    }
    out.entities.assign(entities.begin(), entities.end());
    return out;
}

void PrunePartitionConfig::validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must be in (0, 1]");
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must be in (0, 1]");
    for (double a : alpha) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("split ratios must be in [0, 1]");
    }
    if (std::abs(alpha[0] + alpha[1] + alpha[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    if (!(weight > 0.0)) throw ConfigError("weight must be > 0");
}

PrunePartitionResult prune_partition(std::span<const Triple> triples, std::int32_t entity_count,
                                     std::int32_t relation_count, const PrunePartitionConfig& config) {
    config.validate();
    PrunePartitionResult r;
    r.input_triples = triples.size();
    for (const auto& t : triples) {
        if (t.head < 0 || t.head >= entity_count || t.tail < 0 || t.tail >= entity_count || t.relation < 0 ||
            t.relation >= relation_count) {
            throw DataError("triple id outside the vocabulary");
        }
    }

    // Phase I: relation-aware pruning
    const auto unique = dedup_triples(triples);
    r.unique_triples = unique.size();
    std::vector<std::int64_t> degree(static_cast<std::size_t>(entity_count), 0);
    for (const auto& t : unique) {
        ++degree[static_cast<std::size_t>(t.head)];
        ++degree[static_cast<std::size_t>(t.tail)];
    }
    const auto max_degree = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
    r.normalized_degree.assign(degree.size(), 0.0);
    for (std::size_t e = 0; e < degree.size(); ++e) {
        if (max_degree > 0) r.normalized_degree[e] = static_cast<double>(degree[e]) / static_cast<double>(max_degree);
    }
    std::vector<std::vector<std::size_t>> by_relation(static_cast<std::size_t>(relation_count));
    for (std::size_t i = 0; i < unique.size(); ++i) by_relation[static_cast<std::size_t>(unique[i].relation)].push_back(i);
    r.unique_per_relation.assign(static_cast<std::size_t>(relation_count), 0);
    r.kept_per_relation.assign(static_cast<std::size_t>(relation_count), 0);
    std::vector<char> keep(unique.size(), 0);
    for (std::size_t rel = 0; rel < by_relation.size(); ++rel) {
        auto& members = by_relation[rel];
        r.unique_per_relation[rel] = static_cast<std::int64_t>(members.size());
        if (members.empty()) continue;
        auto upsilon = [&](std::size_t i) {
            const auto& t = unique[i];
            return config.weight *
                   (r.normalized_degree[static_cast<std::size_t>(t.head)] +
                    r.normalized_degree[static_cast<std::size_t>(t.tail)]) /
                   2.0;
        };
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return upsilon(a) > upsilon(b); });
        // Guard against products like 0.075 * 200 landing just above an integer.
        const auto quota = static_cast<std::size_t>(
            std::ceil(config.rho * static_cast<double>(members.size()) - 1e-9));
        const auto take = std::min(members.size(), std::max<std::size_t>(quota, 1));
        for (std::size_t k = 0; k < take; ++k) keep[members[k]] = 1;
        r.kept_per_relation[rel] = static_cast<std::int64_t>(take);
    }
    for (std::size_t i = 0; i < unique.size(); ++i) {
        if (keep[i]) r.kept.push_back(unique[i]);
    }

    // Phase II: visibility partitioning
    std::mt19937_64 rng(config.seed);
    std::set<EntityId> kept_entities;
    std::set<RelationId> kept_relations;
    for (const auto& t : r.kept) {
        kept_entities.insert(t.head);
        kept_entities.insert(t.tail);
        kept_relations.insert(t.relation);
    }
    auto split_seen = [&](const auto& ids, std::vector<char>& seen, std::size_t universe) {
        std::vector<std::int32_t> order(ids.begin(), ids.end());
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_seen = round_count(config.theta * static_cast<double>(order.size()));
        seen.assign(universe, 0);
        for (std::size_t k = 0; k < n_seen && k < order.size(); ++k) seen[static_cast<std::size_t>(order[k])] = 1;
    };
    split_seen(kept_entities, r.entity_seen, static_cast<std::size_t>(entity_count));
    split_seen(kept_relations, r.relation_seen, static_cast<std::size_t>(relation_count));

    std::vector<Triple> train, eval;
    for (const auto& t : r.kept) {
        const bool all_seen = r.entity_seen[static_cast<std::size_t>(t.head)] &&
                              r.entity_seen[static_cast<std::size_t>(t.tail)] &&
                              r.relation_seen[static_cast<std::size_t>(t.relation)];
        (all_seen ? train : eval).push_back(t);
    }
    r.phase2_train = train.size();

    // Phase III: distribution enforcement by random moves
    r.target_train = round_count(config.alpha[0] * static_cast<double>(r.kept.size()));
    const std::size_t cap = 10 * r.kept.size();
    while (train.size() != r.target_train && r.attempts < cap) {
        ++r.attempts;
        auto& from = train.size() > r.target_train ? train : eval;
        auto& to = train.size() > r.target_train ? eval : train;
        if (from.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, from.size() - 1);
        const auto k = pick(rng);
        to.push_back(from[k]);
        from[k] = from.back();
        from.pop_back();
        ++r.moves;
    }
    const auto diff = static_cast<long long>(train.size()) - static_cast<long long>(r.target_train);
    r.feasible = diff >= -1 && diff <= 1;

    std::shuffle(eval.begin(), eval.end(), rng);
    const double eval_share = config.alpha[1] + config.alpha[2];
    const std::size_t n_valid =
        eval_share > 0.0 ? round_count(config.alpha[1] / eval_share * static_cast<double>(eval.size())) : 0;
    r.valid.assign(eval.begin(), eval.begin() + static_cast<std::ptrdiff_t>(std::min(n_valid, eval.size())));
    r.test.assign(eval.begin() + static_cast<std::ptrdiff_t>(std::min(n_valid, eval.size())), eval.end());
    auto input_order = [&](std::vector<Triple>& v) {
        std::map<Triple, std::size_t> pos;
        for (std::size_t i = 0; i < r.kept.size(); ++i) pos.emplace(r.kept[i], i);
        std::sort(v.begin(), v.end(), [&](const Triple& a, const Triple& b) { return pos.at(a) < pos.at(b); });
    };
    r.train = std::move(train);
    input_order(r.train);
    input_order(r.valid);
    input_order(r.test);

    // Re-check of the unseen-element property against what train actually contains.
    std::set<EntityId> train_entities;
    std::set<RelationId> train_relations;
    for (const auto& t : r.train) {
        train_entities.insert(t.head);
        train_entities.insert(t.tail);
        train_relations.insert(t.relation);
    }
    for (const auto* split : {&r.valid, &r.test}) {
        for (const auto& t : *split) {
            if (train_entities.contains(t.head) && train_entities.contains(t.tail) &&
                train_relations.contains(t.relation)) {
                ++r.eval_without_unseen;
            }
        }
    }

    // Phase IV: index maps in ascending id order
    std::set<EntityId> out_entities;
    std::set<RelationId> out_relations;
    for (const auto* split : {&r.train, &r.valid, &r.test}) {
        for (const auto& t : *split) {
            out_entities.insert(t.head);
            out_entities.insert(t.tail);
            out_relations.insert(t.relation);
        }
    }
    r.entity_map.assign(out_entities.begin(), out_entities.end());
    r.relation_map.assign(out_relations.begin(), out_relations.end());
    return r;
}

void write_prune_metadata(std::ostream& out, const PrunePartitionResult& r, const PrunePartitionConfig& config) {
    nlohmann::ordered_json j;
    j["rho"] = config.rho;
    j["theta"] = config.theta;
    j["alpha"] = config.alpha;
    j["weight"] = config.weight;
    j["seed"] = config.seed;
    j["input_triples"] = r.input_triples;
    j["unique_triples"] = r.unique_triples;
    j["kept"] = r.kept.size();
    j["kept_per_relation"] = r.kept_per_relation;
    j["phase2_train"] = r.phase2_train;
    j["target_train"] = r.target_train;
    j["train"] = r.train.size();
    j["valid"] = r.valid.size();
    j["test"] = r.test.size();
    const double kept = static_cast<double>(std::max<std::size_t>(r.kept.size(), 1));
    j["achieved_ratios"] = {static_cast<double>(r.train.size()) / kept, static_cast<double>(r.valid.size()) / kept,
                            static_cast<double>(r.test.size()) / kept};
    j["moves"] = r.moves;
    j["attempts"] = r.attempts;
    j["feasible"] = r.feasible;
    j["eval_without_unseen"] = r.eval_without_unseen;
    j["entities"] = r.entity_map.size();
    j["relations"] = r.relation_map.size();
    out << j.dump() << '\n';
}

std::string split_kind_name(SplitKind k) {
    switch (k) {
        case SplitKind::EntityInductive: return "entity-inductive";
        case SplitKind::FullyInductive: return "fully-inductive";
        default: return "transductive";
    }
}

InductiveReport validate_inductive_split(std::span<const Triple> train, std::span<const Triple> valid,
                                         std::span<const Triple> test) {
    InductiveReport r;
    std::set<EntityId> train_e, inf_e;
    std::set<RelationId> train_r, inf_r;
    for (const auto& t : train) {
        train_e.insert(t.head);
        train_e.insert(t.tail);
        train_r.insert(t.relation);
    }
    for (const auto* split : {&valid, &test}) {
        for (const auto& t : *split) {
            inf_e.insert(t.head);
            inf_e.insert(t.tail);
            inf_r.insert(t.relation);
        }
    }
    std::set_intersection(train_e.begin(), train_e.end(), inf_e.begin(), inf_e.end(),
                          std::back_inserter(r.shared_entities));
    std::set_intersection(train_r.begin(), train_r.end(), inf_r.begin(), inf_r.end(),
                          std::back_inserter(r.shared_relations));
    r.inference_entities = inf_e.size();
    r.inference_relations = inf_r.size();
    r.new_entities = inf_e.size() - r.shared_entities.size();
    r.new_relations = inf_r.size() - r.shared_relations.size();

    const std::set<Triple> tr(train.begin(), train.end()), va(valid.begin(), valid.end()), te(test.begin(), test.end());
    auto overlap = [](const std::set<Triple>& a, const std::set<Triple>& b) {
        std::size_t n = 0;
        for (const auto& t : a) n += b.contains(t) ? 1 : 0;
        return n;
    };
    r.duplicates_train_valid = overlap(tr, va);
    r.duplicates_train_test = overlap(tr, te);
    r.duplicates_valid_test = overlap(va, te);

    if (r.new_relations > 0) {
        r.kind = SplitKind::FullyInductive;
    } else if (r.new_entities > 0) {
        r.kind = SplitKind::EntityInductive;
    } else {
        r.kind = SplitKind::Transductive;
    }
    return r;
}

void write_inductive_report(std::ostream& out, const InductiveReport& r) {
    out << "classification\t" << split_kind_name(r.kind) << '\n'
        << "inference_entities\t" << r.inference_entities << '\n'
        << "shared_entities\t" << r.shared_entities.size() << '\n'
        << "new_entities\t" << r.new_entities << '\n'
        << "inference_relations\t" << r.inference_relations << '\n'
        << "shared_relations\t" << r.shared_relations.size() << '\n'
        << "new_relations\t" << r.new_relations << '\n'
        << "duplicates_train_valid\t" << r.duplicates_train_valid << '\n'
        << "duplicates_train_test\t" << r.duplicates_train_test << '\n'
        << "duplicates_valid_test\t" << r.duplicates_valid_test << '\n';
}

}  // namespace rdgnet
