#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "rdgnet/entity_encoder.hpp"
#include "rdgnet/errors.hpp"

using namespace rdgnet;

namespace {

ModelDims dims_for(int d, int relation_layers, int entity_layers, Activation a, bool self_loop) {
    ModelDims dims;
    dims.dim = d;
    dims.heads = 2;
    dims.relation_layers = relation_layers;
    dims.entity_layers = entity_layers;
    dims.relation_act = a;
    dims.entity_act = a;
    dims.self_loop = self_loop;
    return dims;
}

Activation pick_act(int trial) {
    return trial % 3 == 0 ? Activation::Relu : trial % 3 == 1 ? Activation::Tanh : Activation::Identity;
}

}  // namespace

TEST_CASE("entity_attention: zero gate vector gives one half") {
    auto p = ModelParams<double>::zeros(dims_for(3, 1, 1, Activation::Relu, false));
    const Vec<double> z = Vec<double>::Zero(3);
    CHECK(entity_attention(z, z, z, p.ent, 0) == doctest::Approx(0.5));
}

TEST_CASE("entity_attention: formula and range") {
    std::mt19937_64 rng(1);
    const auto p = ModelParams<double>::random(dims_for(3, 1, 2, Activation::Relu, false), rng);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec<double> hs = 10.0 * Vec<double>::Random(3);
        const Vec<double> hr = 10.0 * Vec<double>::Random(3);
        const Vec<double> hq = 10.0 * Vec<double>::Random(3);
        const int l = trial % 2;
        Eigen::VectorXd x(9);
        x << hs, hr, hq;
        const double expected = oracle::sigmoid(
            Eigen::VectorXd(p.ent.v_gate[l]).dot((Eigen::MatrixXd(p.ent.w_gate[l]) * x).cwiseMax(0.0)));
        const double got = entity_attention(hs, hr, hq, p.ent, l);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
        CHECK(got > 0.0);
        CHECK(got < 1.0);
    }
}

TEST_CASE("entity_layer: single fact by hand at d = 2") {
    // {(a, r1, b)}, query (a, r1, ?), no inverses.
    const std::vector<Triple> t{{0, 0, 1}};
    const auto kg = KnowledgeGraph::build(t, 2, 1, false);
    const auto rdg = build_rdg(kg);
    for (bool loop : {false, true}) {
        auto p = ModelParams<double>::zeros(dims_for(2, 1, 1, Activation::Tanh, loop));
        p.ent.w_msg[0] << 0.5, -1.0, 0.25, 2.0;
        p.ent.w_gate[0].setConstant(0.1);
        p.ent.v_gate[0] << 1.0, -0.5;
        if (loop) p.ent.w_loop << 0.3, -0.2;
        RelationEmbeddings<double> rel{0, Mat<double>(1, 2)};
        rel.rows << 0.7, -0.4;
        const auto ctx = propagate_entities(kg, rel, p, 0);
        const Vec<double> ha = Vec<double>::Ones(2);
        const Vec<double> r1 = rel.rows.row(0).transpose();
        const double g = entity_attention(ha, r1, r1, p.ent, 0);
        const Vec<double> acc = g * (ha + r1);
        const Vec<double> expected = (Eigen::MatrixXd(p.ent.w_msg[0]) * acc).array().tanh();
        REQUIRE(ctx.is_visited(1));
        CHECK((ctx.state(1) - expected).cwiseAbs().maxCoeff() < 1e-12);
        // a has no incoming fact: zero without the self loop.
        CHECK(ctx.state(0).isZero(0) == !loop);
    }
}

TEST_CASE("entity_layer: disconnected entity is never visited or scored") {
    const std::vector<Triple> t{{0, 0, 1}, {2, 0, 3}};
    const auto kg = KnowledgeGraph::build(t, 4, 1, false);
    std::mt19937_64 rng(2);
    const auto p = ModelParams<double>::random(dims_for(3, 1, 3, Activation::Tanh, true), rng);
    const auto ctx = propagate(kg, build_rdg(kg), p, 0, 0);
    CHECK(!ctx.is_visited(2));
    CHECK(!ctx.is_visited(3));
    CHECK(ctx.state(3).isZero(0));
    for (const auto& [e, s] : score_candidates(ctx, p)) CHECK((e == 0 || e == 1));
}

TEST_CASE("propagate: L_e = 0 keeps only the indicator") {
    const std::vector<Triple> t{{0, 0, 1}};
    const auto kg = KnowledgeGraph::build(t, 2, 1, true);
    std::mt19937_64 rng(3);
    const auto p = ModelParams<double>::random(dims_for(3, 1, 0, Activation::Relu, true), rng);
    const auto ctx = propagate(kg, build_rdg(kg), p, 0, 0);
    CHECK(ctx.visited.size() == 1);
    CHECK(ctx.state(0) == Vec<double>::Ones(3));
    CHECK(ctx.state(1).isZero(0));
}

TEST_CASE("propagate: chain frontier grows one hop per layer") {
    const std::vector<Triple> t{{0, 0, 1}, {1, 0, 2}};
    const auto kg = KnowledgeGraph::build(t, 3, 1, false);
    std::mt19937_64 rng(4);
    const auto p1 = ModelParams<double>::random(dims_for(3, 1, 1, Activation::Tanh, false), rng);
    CHECK(!propagate(kg, build_rdg(kg), p1, 0, 0).is_visited(2));
    const auto p2 = ModelParams<double>::random(dims_for(3, 1, 2, Activation::Tanh, false), rng);
    CHECK(propagate(kg, build_rdg(kg), p2, 0, 0).is_visited(2));
}

TEST_CASE("propagate matches the dense masked reference") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto g = oracle::random_graph(rng, 12, 4, 30);
        const auto kg = KnowledgeGraph::build(g.triples, g.entities, g.relations, trial % 4 != 0);
        const auto rdg = build_rdg(kg);
        const bool loop = trial % 2 == 0;
        const auto p = ModelParams<double>::random(dims_for(3, 2, 1 + trial % 3, pick_act(trial), loop), rng);
        const EntityId e_q = std::uniform_int_distribution<int>(0, g.entities - 1)(rng);
        const RelationId r_q = std::uniform_int_distribution<int>(0, kg.relation_count() - 1)(rng);
        std::set<FactIndex> masked;
        std::vector<FactIndex> masked_list;
        if (trial % 5 == 0 && kg.fact_count() > 0) {
            masked.insert(0);
            masked_list.push_back(0);
        }
        PropagationOptions opts;
        opts.masked_facts = masked_list;
        const auto rel = encode_relations(rdg, r_q, p);
        const auto ctx = propagate_entities(kg, rel, p, e_q, opts);
        const auto dense = oracle::entity_encoder(kg, rel.rows, p, e_q, r_q, masked);
        for (EntityId e = 0; e < kg.entity_count(); ++e) {
            CHECK(ctx.is_visited(e) == static_cast<bool>(dense.visited[e]));
            const Eigen::VectorXd diff = ctx.state(e) - dense.states.row(e).transpose();
            CHECK(diff.cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + dense.states.row(e).cwiseAbs().maxCoeff()));
        }
        // Visited sets per layer are prefixes in discovery order and match V^l.
        REQUIRE(ctx.visited_count.size() == dense.frontier.size());
        for (std::size_t l = 0; l < dense.frontier.size(); ++l) {
            std::set<EntityId> prefix(ctx.visited.begin(), ctx.visited.begin() + static_cast<long>(ctx.visited_count[l]));
            std::set<EntityId> expected;
            for (EntityId e = 0; e < kg.entity_count(); ++e)
                if (dense.frontier[l][e]) expected.insert(e);
            CHECK(prefix == expected);
            if (l > 0) CHECK(ctx.visited_count[l] >= ctx.visited_count[l - 1]);
        }
        // Scores against the dense states.
        const auto scores = visited_scores(ctx, p);
        for (std::size_t i = 0; i < ctx.visited.size(); ++i) {
            const double expected = dense.states.row(ctx.visited[i]).dot(Eigen::VectorXd(p.ent.w_score));
            CHECK(scores[static_cast<Eigen::Index>(i)] == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("states are zero beyond the hop radius") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        auto g = oracle::random_graph(rng, 50, 4, 60, 10);
        const auto kg = KnowledgeGraph::build(g.triples, g.entities, g.relations, true);
        const auto rdg = build_rdg(kg);
        const int layers = 1 + trial % 4;
        const auto p = ModelParams<double>::random(dims_for(3, 1, layers, pick_act(trial), trial % 2 == 0), rng);
        const EntityId e_q = std::uniform_int_distribution<int>(0, g.entities - 1)(rng);
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(kg.entity_count()));
        for (const auto& f : kg.facts()) adj[f.head].push_back(f.tail);
        const auto dist = oracle::bfs(kg.entity_count(), adj, e_q);
        const auto ctx = propagate(kg, rdg, p, e_q, 0);
        for (EntityId e = 0; e < kg.entity_count(); ++e) {
            const bool near = dist[e] >= 0 && dist[e] <= layers;
            CHECK(ctx.is_visited(e) == near);
            if (!near) CHECK(ctx.state(e).isZero(0));
        }
    }
}

TEST_CASE("scoring: zero scorer and positive scaling") {
    std::mt19937_64 rng(7);
    auto g = oracle::random_graph(rng, 12, 3, 30, 8, 2, 20);
    const auto kg = KnowledgeGraph::build(g.triples, g.entities, g.relations, true);
    const auto rdg = build_rdg(kg);
    auto p = ModelParams<double>::random(dims_for(4, 2, 3, Activation::Tanh, true), rng);
    const auto ctx = propagate(kg, rdg, p, 0, 0);
    const auto base = score_candidates(ctx, p);
    for (std::size_t i = 1; i < base.size(); ++i) CHECK(base[i - 1].second >= base[i].second);
    auto scaled = p;
    scaled.ent.w_score *= 3.5;
    const auto s2 = score_candidates(ctx, scaled);
    REQUIRE(s2.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(s2[i].first == base[i].first);
        CHECK(s2[i].second == doctest::Approx(3.5 * base[i].second));
    }
    auto zero = p;
    zero.ent.w_score.setZero();
    for (const auto& [e, s] : score_candidates(ctx, zero)) CHECK(s == 0.0);
}

TEST_CASE("errors: out-of-range query entity and mismatched relation rows") {
    const std::vector<Triple> t{{0, 0, 1}};
    const auto kg = KnowledgeGraph::build(t, 2, 1, true);
    const auto p = ModelParams<double>::zeros(dims_for(2, 1, 1, Activation::Relu, true));
    const auto rdg = build_rdg(kg);
    CHECK_THROWS_AS(propagate(kg, rdg, p, 5, 0), DataError);
    RelationEmbeddings<double> wrong{0, Mat<double>::Zero(7, 2)};
    CHECK_THROWS_AS(propagate_entities(kg, wrong, p, 0), DataError);
}

TEST_CASE("non-finite parameters raise a numeric error") {
    const std::vector<Triple> t{{0, 0, 1}};
    const auto kg = KnowledgeGraph::build(t, 2, 1, true);
    auto p = ModelParams<double>::zeros(dims_for(2, 1, 1, Activation::Relu, true));
    p.ent.w_msg[0](0, 0) = std::numeric_limits<double>::infinity();
    p.ent.v_gate[0].setOnes();
    p.ent.w_gate[0].setOnes();
    CHECK_THROWS_AS(propagate(kg, build_rdg(kg), p, 0, 0), NumericError);
}
