#include "rdgnet/rdg.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <tuple>

#include "rdgnet/errors.hpp"

namespace rdgnet {

std::vector<RelationPair> relation_adjacency(const KnowledgeGraph& kg) {
    const auto n_rel = static_cast<std::size_t>(kg.relation_count());
    // In-relation counts per entity, gathered from the fact list.
    std::vector<std::vector<std::pair<RelationId, std::int64_t>>> incoming(
        static_cast<std::size_t>(kg.entity_count()));
    for (const auto& t : kg.facts()) {
        auto& in = incoming[static_cast<std::size_t>(t.tail)];
        auto it = std::find_if(in.begin(), in.end(), [&](const auto& p) { return p.first == t.relation; });
        if (it == in.end()) {
            in.emplace_back(t.relation, 1);
        } else {
            ++it->second;
        }
    }

    std::map<std::pair<RelationId, RelationId>, std::int64_t> support;
    std::vector<std::int64_t> out_count(n_rel, 0);
    std::vector<RelationId> out_rels;
    for (EntityId e = 0; e < kg.entity_count(); ++e) {
        const auto& in = incoming[static_cast<std::size_t>(e)];
        if (in.empty()) continue;
        out_rels.clear();
        for (const auto& t : kg.out(e)) {
            if (out_count[static_cast<std::size_t>(t.relation)]++ == 0) out_rels.push_back(t.relation);
        }
        for (const auto& [ri, ci] : in) {
            for (auto rj : out_rels) support[{ri, rj}] += ci * out_count[static_cast<std::size_t>(rj)];
        }
        for (auto rj : out_rels) out_count[static_cast<std::size_t>(rj)] = 0;
    }

    std::vector<RelationPair> pairs;
    pairs.reserve(support.size());
    for (const auto& [k, s] : support) pairs.push_back({k.first, k.second, s});
    return pairs;
}

namespace {

// Iterative Tarjan; component ids are assigned in reverse topological order.
std::vector<std::int32_t> strongly_connected(std::int32_t n, const std::vector<std::vector<RelationId>>& succ,
                                             std::int32_t& component_count) {
    std::vector<std::int32_t> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<std::int32_t> comp(static_cast<std::size_t>(n), -1);
    std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
    std::vector<std::int32_t> stack;
    std::vector<std::pair<std::int32_t, std::size_t>> call;
    std::int32_t counter = 0;
    component_count = 0;

    for (std::int32_t root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        call.emplace_back(root, 0);
        while (!call.empty()) {
            auto& [v, next] = call.back();
            const auto vi = static_cast<std::size_t>(v);
            if (next == 0 && index[vi] == -1) {
                index[vi] = low[vi] = counter++;
                stack.push_back(v);
                on_stack[vi] = true;
            }
            if (next < succ[vi].size()) {
                const auto w = succ[vi][next++];
                const auto wi = static_cast<std::size_t>(w);
                if (index[wi] == -1) {
                    call.emplace_back(w, 0);
                } else if (on_stack[wi]) {
                    low[vi] = std::min(low[vi], index[wi]);
                }
                continue;
            }
            if (low[vi] == index[vi]) {
                while (true) {
                    const auto w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = false;
                    comp[static_cast<std::size_t>(w)] = component_count;
                    if (w == v) break;
                }
                ++component_count;
            }
            const auto finished = v;
            call.pop_back();
            if (!call.empty()) {
                const auto parent = static_cast<std::size_t>(call.back().first);
                low[parent] = std::min(low[parent], low[static_cast<std::size_t>(finished)]);
            }
        }
    }
    return comp;
}

}  // namespace

std::vector<std::int32_t> compute_tau(std::int32_t relation_count, std::span<const RelationPair> pairs,
                                      std::span<const std::int64_t> relation_freq) {
    const auto n = static_cast<std::size_t>(relation_count);
    if (relation_freq.size() < n) throw DataError("relation frequency table too short");
    std::vector<std::vector<RelationId>> succ(n);
    for (const auto& p : pairs) {
        if (p.from < 0 || p.to < 0 || p.from >= relation_count || p.to >= relation_count) {
            throw DataError("relation pair outside the relation universe");
        }
        if (p.from != p.to) succ[static_cast<std::size_t>(p.from)].push_back(p.to);
    }

    std::int32_t n_comp = 0;
    const auto comp = strongly_connected(relation_count, succ, n_comp);

    auto before = [&](RelationId a, RelationId b) {
        const auto fa = relation_freq[static_cast<std::size_t>(a)];
        const auto fb = relation_freq[static_cast<std::size_t>(b)];
        return fa != fb ? fa > fb : a < b;
    };
    std::vector<std::vector<RelationId>> members(static_cast<std::size_t>(n_comp));
    for (RelationId r = 0; r < relation_count; ++r) members[static_cast<std::size_t>(comp[static_cast<std::size_t>(r)])].push_back(r);
    for (auto& m : members) std::sort(m.begin(), m.end(), before);

    std::vector<std::set<std::int32_t>> comp_succ(static_cast<std::size_t>(n_comp));
    std::vector<std::int32_t> indegree(static_cast<std::size_t>(n_comp), 0);
    for (std::size_t u = 0; u < n; ++u) {
        for (auto v : succ[u]) {
            const auto cu = comp[u];
            const auto cv = comp[static_cast<std::size_t>(v)];
            if (cu != cv && comp_succ[static_cast<std::size_t>(cu)].insert(cv).second) {
                ++indegree[static_cast<std::size_t>(cv)];
            }
        }
    }

    auto cmp = [&](std::int32_t a, std::int32_t b) {
        // priority_queue pops the largest; invert so the leading member that sorts first pops first.
        return before(members[static_cast<std::size_t>(b)].front(), members[static_cast<std::size_t>(a)].front());
    };
    std::priority_queue<std::int32_t, std::vector<std::int32_t>, decltype(cmp)> ready(cmp);
    for (std::int32_t c = 0; c < n_comp; ++c) {
        if (indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }

    std::vector<std::int32_t> tau(n, -1);
    std::int32_t rank = 0;
    while (!ready.empty()) {
        const auto c = ready.top();
        ready.pop();
        for (auto r : members[static_cast<std::size_t>(c)]) tau[static_cast<std::size_t>(r)] = rank++;
        for (auto s : comp_succ[static_cast<std::size_t>(c)]) {
            if (--indegree[static_cast<std::size_t>(s)] == 0) ready.push(s);
        }
    }
    return tau;
}

RelationDependencyGraph::RelationDependencyGraph(std::int32_t relation_count, std::vector<RelationPair> edges,
                                                 std::vector<std::int32_t> tau)
    : relation_count_(relation_count), edges_(std::move(edges)), tau_(std::move(tau)) {
    if (tau_.size() != static_cast<std::size_t>(relation_count_)) throw DataError("tau size mismatch");
    std::vector<std::vector<RelationId>> lists(static_cast<std::size_t>(relation_count_));
    for (const auto& e : edges_) {
        if (tau_[static_cast<std::size_t>(e.from)] < tau_[static_cast<std::size_t>(e.to)]) {
            lists[static_cast<std::size_t>(e.to)].push_back(e.from);
        }
    }
    for (auto& l : lists) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }
    index_past(lists);
}

void RelationDependencyGraph::index_past(const std::vector<std::vector<RelationId>>& lists) {
    past_offsets_.assign(lists.size() + 1, 0);
    past_.clear();
    for (std::size_t v = 0; v < lists.size(); ++v) {
        past_.insert(past_.end(), lists[v].begin(), lists[v].end());
        past_offsets_[v + 1] = static_cast<std::int64_t>(past_.size());
    }
}

std::span<const RelationId> RelationDependencyGraph::past_neighbors(RelationId v) const {
    const auto b = static_cast<std::size_t>(past_offsets_[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(past_offsets_[static_cast<std::size_t>(v) + 1]);
    return {past_.data() + b, e - b};
}

std::int64_t RelationDependencyGraph::self_pair_count() const {
    return std::count_if(edges_.begin(), edges_.end(), [](const auto& e) { return e.from == e.to; });
}

std::vector<RelationEdge> RelationDependencyGraph::retained_edges() const {
    std::vector<RelationEdge> out;
    out.reserve(past_.size());
    for (RelationId v = 0; v < relation_count_; ++v) {
        for (auto u : past_neighbors(v)) out.emplace_back(u, v);
    }
    return out;
}

RelationDependencyGraph RelationDependencyGraph::without(std::span<const RelationEdge> removed) const {
    std::set<RelationEdge> drop(removed.begin(), removed.end());
    std::vector<std::vector<RelationId>> lists(static_cast<std::size_t>(relation_count_));
    for (RelationId v = 0; v < relation_count_; ++v) {
        for (auto u : past_neighbors(v)) {
            if (!drop.contains({u, v})) lists[static_cast<std::size_t>(v)].push_back(u);
        }
    }
    RelationDependencyGraph g = *this;
    g.index_past(lists);
    return g;
}

std::vector<bool> RelationDependencyGraph::reachable_within(RelationId source, int hops) const {
    std::vector<std::vector<RelationId>> succ(static_cast<std::size_t>(relation_count_));
    for (const auto& [u, v] : retained_edges()) succ[static_cast<std::size_t>(u)].push_back(v);
    std::vector<bool> seen(static_cast<std::size_t>(relation_count_), false);
    std::vector<RelationId> frontier{source};
    seen[static_cast<std::size_t>(source)] = true;
    for (int h = 0; h < hops && !frontier.empty(); ++h) {
        std::vector<RelationId> next;
        for (auto u : frontier) {
            for (auto v : succ[static_cast<std::size_t>(u)]) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = true;
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    return seen;
}

RelationDependencyGraph build_rdg(const KnowledgeGraph& kg) {
    auto pairs = relation_adjacency(kg);
    auto tau = compute_tau(kg.relation_count(), pairs, kg.relation_freq());
    return RelationDependencyGraph(kg.relation_count(), std::move(pairs), std::move(tau));
}

namespace {

// Distinct relations per entity, split by role.
struct Incidence {
    std::vector<std::vector<RelationId>> as_head;
    std::vector<std::vector<RelationId>> as_tail;
};

Incidence incidence(const KnowledgeGraph& kg) {
    Incidence inc;
    inc.as_head.resize(static_cast<std::size_t>(kg.entity_count()));
    inc.as_tail.resize(static_cast<std::size_t>(kg.entity_count()));
    for (const auto& t : kg.facts()) {
        inc.as_head[static_cast<std::size_t>(t.head)].push_back(t.relation);
        inc.as_tail[static_cast<std::size_t>(t.tail)].push_back(t.relation);
    }
    auto uniq = [](auto& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto& v : inc.as_head) uniq(v);
    for (auto& v : inc.as_tail) uniq(v);
    return inc;
}

void cross(const std::vector<RelationId>& a, const std::vector<RelationId>& b, std::set<RelationEdge>& out) {
    for (auto x : a) {
        for (auto y : b) {
            if (x != y) out.emplace(x, y);
        }
    }
}

}  // namespace

MetaGraphStats build_ingram_graph(const KnowledgeGraph& kg, std::vector<RelationEdge>* edges) {
    const auto inc = incidence(kg);
    std::set<RelationEdge> pairs;
    std::vector<RelationId> all;
    for (std::size_t e = 0; e < inc.as_head.size(); ++e) {
        all.clear();
        std::set_union(inc.as_head[e].begin(), inc.as_head[e].end(), inc.as_tail[e].begin(), inc.as_tail[e].end(),
                       std::back_inserter(all));
        for (std::size_t i = 0; i < all.size(); ++i) {
            for (std::size_t j = i + 1; j < all.size(); ++j) pairs.emplace(all[i], all[j]);
        }
    }
    if (edges) edges->assign(pairs.begin(), pairs.end());
    MetaGraphStats s;
    s.method = "ingram";
    s.relations = kg.relation_count();
    s.edges = static_cast<std::int64_t>(pairs.size());
    s.convention = "undirected pairs sharing an entity";
    return s;
}

MetaGraphStats build_ultra_metagraph(const KnowledgeGraph& kg) {
    const auto inc = incidence(kg);
    std::set<RelationEdge> h2h, h2t, t2h, t2t;
    for (std::size_t e = 0; e < inc.as_head.size(); ++e) {
        cross(inc.as_head[e], inc.as_head[e], h2h);
        cross(inc.as_tail[e], inc.as_tail[e], t2t);
        cross(inc.as_head[e], inc.as_tail[e], h2t);
        cross(inc.as_tail[e], inc.as_head[e], t2h);
    }
    MetaGraphStats s;
    s.method = "ultra";
    s.relations = kg.relation_count();
    s.h2h = static_cast<std::int64_t>(h2h.size());
    s.h2t = static_cast<std::int64_t>(h2t.size());
    s.t2h = static_cast<std::int64_t>(t2h.size());
    s.t2t = static_cast<std::int64_t>(t2t.size());
    s.edges = *s.h2h + *s.h2t + *s.t2h + *s.t2t;
    s.convention = "directed typed edges between distinct relations";
    return s;
}

MetaGraphStats rdg_stats(const RelationDependencyGraph& rdg, bool count_self_pairs) {
    MetaGraphStats s;
    s.method = "rdg";
    s.relations = rdg.relation_count();
    s.edges = rdg.retained_edge_count() + (count_self_pairs ? rdg.self_pair_count() : 0);
    s.convention = count_self_pairs ? "tau-increasing edges plus self pairs" : "tau-increasing edges";
    return s;
}

void write_stats_header(std::ostream& out) { out << "dataset,method,relations,edges,h2h,h2t,t2h,t2t\n"; }

void write_stats_row(std::ostream& out, const std::string& dataset, const MetaGraphStats& s) {
    out << dataset << ',' << s.method << ',' << s.relations << ',' << s.edges;
    for (const auto& c : {s.h2h, s.h2t, s.t2h, s.t2t}) {
        out << ',';
        if (c) out << *c;
    }
    out << '\n';
}

void write_rdg_edges(std::ostream& out, const RelationDependencyGraph& rdg, const VocabMap* vocab) {
    auto name = [&](RelationId r) { return vocab ? vocab->relation_name(r) : std::to_string(r); };
    for (const auto& e : rdg.edges()) out << name(e.from) << '\t' << name(e.to) << '\t' << e.support << '\n';
}

void write_rdg_tau(std::ostream& out, const RelationDependencyGraph& rdg, const VocabMap* vocab) {
    auto name = [&](RelationId r) { return vocab ? vocab->relation_name(r) : std::to_string(r); };
    for (RelationId r = 0; r < rdg.relation_count(); ++r) out << name(r) << '\t' << rdg.tau()[static_cast<std::size_t>(r)] << '\n';
}

}  // namespace rdgnet
