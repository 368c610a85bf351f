#pragma once

// Independent reference computations used by the unit and acceptance tests.
// They deliberately avoid the library's indexing structures: everything is
// recomputed from the flat fact list with dense matrices and plain loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rdgnet/entity_encoder.hpp"
#include "rdgnet/kg_store.hpp"
#include "rdgnet/model.hpp"
#include "rdgnet/rdg.hpp"

namespace oracle {

using namespace rdgnet;

struct RandomGraph {
    VocabMap vocab;
    std::vector<Triple> triples;
    int entities = 0;
    int relations = 0;
};

// Up to `max_triples` random triples; every entity and relation gets a name
// even when unused so that ids are dense.
inline RandomGraph random_graph(std::mt19937_64& rng, int max_entities, int max_relations, int max_triples,
                                int min_entities = 2, int min_relations = 1, int min_triples = 1) {
    RandomGraph g;
    g.entities = std::uniform_int_distribution<int>(min_entities, max_entities)(rng);
    g.relations = std::uniform_int_distribution<int>(min_relations, max_relations)(rng);
    const int n = std::uniform_int_distribution<int>(min_triples, max_triples)(rng);
    for (int e = 0; e < g.entities; ++e) g.vocab.entities.intern("e" + std::to_string(e));
    for (int r = 0; r < g.relations; ++r) g.vocab.relations.intern("r" + std::to_string(r));
    std::uniform_int_distribution<int> pe(0, g.entities - 1), pr(0, g.relations - 1);
    for (int i = 0; i < n; ++i) g.triples.push_back({pe(rng), pr(rng), pe(rng)});
    return g;
}

// Every ordered fact pair (f, g) with tail(f) == head(g).
inline std::map<std::pair<RelationId, RelationId>, std::int64_t> brute_adjacency(const std::vector<Triple>& facts) {
    std::map<std::pair<RelationId, RelationId>, std::int64_t> out;
    for (const auto& f : facts) {
        for (const auto& g : facts) {
            if (f.tail == g.head) ++out[{f.relation, g.relation}];
        }
    }
    return out;
}

inline std::vector<std::vector<char>> transitive_closure(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<char>> reach(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int i = 0; i < n; ++i) reach[i][i] = 1;
    for (const auto& [a, b] : edges) reach[a][b] = 1;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = 1;
    return reach;
}

// Precedence order from mutual-reachability components, members sorted by
// (-freq, id), components released in Kahn order; among ready components the
// one whose leading member sorts first goes next.
inline std::vector<int> tau_oracle(int n, const std::vector<std::pair<int, int>>& edges,
                                   const std::vector<std::int64_t>& freq) {
    const auto reach = transitive_closure(n, edges);
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> members;
    for (int i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        const int c = static_cast<int>(members.size());
        members.emplace_back();
        for (int j = 0; j < n; ++j) {
            if (reach[i][j] && reach[j][i]) {
                comp[j] = c;
                members[c].push_back(j);
            }
        }
    }
    auto before = [&](int a, int b) { return freq[a] != freq[b] ? freq[a] > freq[b] : a < b; };
    for (auto& m : members) std::sort(m.begin(), m.end(), before);
    const int nc = static_cast<int>(members.size());
    std::vector<std::set<int>> succ(static_cast<std::size_t>(nc));
    std::vector<int> indeg(static_cast<std::size_t>(nc), 0);
    for (const auto& [a, b] : edges) {
        if (comp[a] != comp[b] && succ[comp[a]].insert(comp[b]).second) ++indeg[comp[b]];
    }
    std::vector<int> tau(static_cast<std::size_t>(n), -1);
    std::vector<char> done(static_cast<std::size_t>(nc), 0);
    int rank = 0;
    for (int step = 0; step < nc; ++step) {
        int best = -1;
        for (int c = 0; c < nc; ++c) {
            if (done[c] || indeg[c] != 0) continue;
            if (best < 0 || before(members[c][0], members[best][0])) best = c;
        }
        done[best] = 1;
        for (int r : members[best]) tau[r] = rank++;
        for (int s : succ[best]) --indeg[s];
    }
    return tau;
}

// Hop distance from `source` over a directed adjacency list; -1 if unreachable.
inline std::vector<int> bfs(int n, const std::vector<std::vector<int>>& adj, int source) {
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::queue<int> q;
    dist[source] = 0;
    q.push(source);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
        }
    }
    return dist;
}

inline double act(Activation a, double x) {
    switch (a) {
        case Activation::Relu: return x > 0 ? x : 0;
        case Activation::Tanh: return std::tanh(x);
        default: return x;
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

using DMat = Eigen::MatrixXd;
using DVec = Eigen::VectorXd;

// Softmax over past(v) then v itself, written from the formula.
inline std::vector<double> attention_row(const DMat& states, const std::vector<int>& past, int v, const DMat& w_att,
                                         const DVec& att) {
    const int d = static_cast<int>(states.cols());
    auto logit = [&](int u) {
        DVec x(2 * d);
        x << w_att * states.row(u).transpose(), w_att * states.row(v).transpose();
        return att.dot(x);
    };
    std::vector<double> z;
    for (int u : past) z.push_back(logit(u));
    z.push_back(logit(v));
    double mx = *std::max_element(z.begin(), z.end());
    double total = 0;
    for (auto& x : z) total += (x = std::exp(x - mx));
    for (auto& x : z) x /= total;
    return z;
}

inline DMat to_dense(const Mat<double>& m) { return DMat(m); }

// Full dense relation encoder: every row, every layer, no reachability pruning.
inline DMat relation_encoder(const RelationDependencyGraph& rdg, RelationId r_q, const ModelParams<double>& p) {
    const int n = rdg.relation_count();
    const int d = p.dims.dim;
    DMat s = DMat::Zero(n, d);
    s.row(r_q).setOnes();
    for (int l = 0; l < p.dims.relation_layers; ++l) {
        DMat pre = DMat::Zero(n, d);
        for (int h = 0; h < p.dims.heads; ++h) {
            const DMat w_att = p.rel.w_att[h];
            const DMat w_past = p.rel.w_past[l][h];
            const DMat w_self = p.rel.w_self[l][h];
            for (int v = 0; v < n; ++v) {
                const auto span = rdg.past_neighbors(v);
                const std::vector<int> past(span.begin(), span.end());
                const auto a = attention_row(s, past, v, w_att, p.rel.att);
                DVec gathered = DVec::Zero(d);
                for (std::size_t k = 0; k < past.size(); ++k) gathered += a[k] * s.row(past[k]).transpose();
                pre.row(v) += (w_past * gathered + a.back() * (w_self * s.row(v).transpose())).transpose();
            }
        }
        pre /= p.dims.heads;
        for (int v = 0; v < n; ++v)
            for (int k = 0; k < d; ++k) s(v, k) = act(p.dims.relation_act, pre(v, k));
    }
    return s;
}

struct DenseEntityResult {
    DMat states;                          // entity_count x d, zero outside the visited set
    std::vector<char> visited;            // after the last layer
    std::vector<std::vector<char>> frontier;  // visited set per layer, V^0..V^{L_e}
};

// Dense entity propagation over the flat fact list with a visited mask.
inline DenseEntityResult entity_encoder(const KnowledgeGraph& kg, const DMat& relations, const ModelParams<double>& p,
                                        EntityId e_q, RelationId r_q, const std::set<FactIndex>& masked = {}) {
    const int n = kg.entity_count();
    const int d = p.dims.dim;
    DenseEntityResult out;
    out.states = DMat::Zero(n, d);
    out.states.row(e_q).setOnes();
    std::vector<char> vis(static_cast<std::size_t>(n), 0);
    vis[e_q] = 1;
    out.frontier.push_back(vis);
    const DVec rq = relations.row(r_q).transpose();
    for (int l = 0; l < p.dims.entity_layers; ++l) {
        const DMat w_gate = p.ent.w_gate[l];
        const DVec v_gate = p.ent.v_gate[l];
        auto gate = [&](const DVec& hs, const DVec& hr) {
            DVec x(3 * d);
            x << hs, hr, rq;
            return sigmoid(v_gate.dot((w_gate * x).cwiseMax(0.0)));
        };
        DMat acc = DMat::Zero(n, d);
        std::vector<char> next = vis;
        for (std::size_t i = 0; i < kg.facts().size(); ++i) {
            if (masked.count(static_cast<FactIndex>(i))) continue;
            const auto& f = kg.facts()[i];
            if (!vis[f.head]) continue;
            const DVec hs = out.states.row(f.head).transpose();
            const DVec hr = relations.row(f.relation).transpose();
            acc.row(f.tail) += gate(hs, hr) * (hs + hr).transpose();
            next[f.tail] = 1;
        }
        if (p.dims.self_loop) {
            const DVec loop = p.ent.w_loop;
            for (int e = 0; e < n; ++e) {
                if (!vis[e]) continue;
                const DVec hs = out.states.row(e).transpose();
                acc.row(e) += gate(hs, loop) * (hs + loop).transpose();
            }
        }
        DMat pre = acc * DMat(p.ent.w_msg[l]).transpose();
        DMat s = DMat::Zero(n, d);
        for (int e = 0; e < n; ++e) {
            if (!next[e]) continue;
            for (int k = 0; k < d; ++k) s(e, k) = act(p.dims.entity_act, pre(e, k));
        }
        out.states = s;
        vis = next;
        out.frontier.push_back(vis);
    }
    out.visited = vis;
    return out;
}

inline double max_abs_diff(const DMat& a, const DMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Filtered rank by sorting: candidates other than the answer that are known
// true are dropped; ties count half; unreached entities tie below everything.
inline double sorted_rank(EntityId answer, const std::vector<std::pair<EntityId, double>>& reached,
                          const std::set<EntityId>& known, int entity_count) {
    std::vector<std::pair<double, EntityId>> kept;
    bool answer_reached = false;
    double answer_score = 0;
    std::set<EntityId> reached_ids;
    for (const auto& [e, s] : reached) {
        reached_ids.insert(e);
        if (e == answer) {
            answer_reached = true;
            answer_score = s;
        } else if (!known.count(e)) {
            kept.push_back({s, e});
        }
    }
    if (!answer_reached) {
        int unreached = 0;
        for (int e = 0; e < entity_count; ++e) {
            if (e == answer || (!reached_ids.count(e) && !known.count(e))) ++unreached;
        }
        return static_cast<double>(kept.size()) + (unreached + 1) / 2.0;
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double rank = 1;
    for (const auto& [s, e] : kept) {
        if (s > answer_score) rank += 1;
        else if (s == answer_score) rank += 0.5;
    }
    return rank;
}

}  // namespace oracle
