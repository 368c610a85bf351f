#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rdgnet/errors.hpp"
#include "rdgnet/eval.hpp"
#include "rdgnet/relation_encoder.hpp"
#include "rdgnet/synthetic.hpp"
#include "rdgnet/trainer.hpp"

using namespace rdgnet;

namespace {

KnownTrue known_from(const std::vector<Triple>& t) {
    KnownTrue k;
    for (const auto& x : t) k.add(x.head, x.relation, x.tail);
    k.finalize();
    return k;
}

ModelDims eval_dims(int relation_layers = 2, int entity_layers = 3) {
    ModelDims d;
    d.dim = 8;
    d.heads = 2;
    d.relation_layers = relation_layers;
    d.entity_layers = entity_layers;
    return d;
}

DatasetSplits random_splits(std::mt19937_64& rng, bool inverses, int entities = 12, int relations = 4, int triples = 40) {
    auto g = oracle::random_graph(rng, entities, relations, triples, entities, relations, triples);
    const auto n = g.triples.size();
    std::vector<Triple> train(g.triples.begin(), g.triples.begin() + static_cast<long>(n * 3 / 4));
    std::vector<Triple> test(g.triples.begin() + static_cast<long>(n * 3 / 4), g.triples.end());
    return make_splits(g.vocab, train, {}, test, inverses);
}

const DatasetSplits& composition() {
    static const DatasetSplits s = [] {
        CompositionConfig c;
        c.seed = 11;
        return to_splits(make_composition_kg(c));
    }();
    return s;
}

}  // namespace

TEST_CASE("filtered_rank: strict top is 1 and a two-way tie is 1.5") {
    const auto known = known_from({});
    const std::vector<std::pair<EntityId, double>> top{{0, 0.1}, {1, 0.9}, {2, 0.3}};
    CHECK(filtered_rank({5, 0, 1}, top, known, 3) == 1.0);
    const std::vector<std::pair<EntityId, double>> tie{{0, 0.5}, {1, 0.5}, {2, 0.1}};
    CHECK(filtered_rank({5, 0, 1}, tie, known, 3) == 1.5);
}

TEST_CASE("filtered_rank: other known answers are removed") {
    const auto known = known_from({{5, 0, 0}, {5, 0, 1}});
    const std::vector<std::pair<EntityId, double>> r{{0, 0.9}, {1, 0.5}, {2, 0.1}};
    CHECK(filtered_rank({5, 0, 1}, r, known, 3) == 1.0);
    // The answer itself is never filtered even though it is known.
    CHECK(filtered_rank({5, 0, 0}, r, known, 3) == 1.0);
}

TEST_CASE("filtered_rank: unreached answer ties with every unreached entity") {
    const auto known = known_from({});
    const std::vector<std::pair<EntityId, double>> r{{0, 0.9}, {1, 0.5}};
    // Two reached ahead; entities 2..9 (8 of them) share the tail positions 3..10.
    CHECK(filtered_rank({5, 0, 4}, r, known, 10) == doctest::Approx(2 + 4.5));
    CHECK_THROWS_AS(filtered_rank({5, 0, 10}, r, known, 10), DataError);
}

TEST_CASE("filtered_rank matches a sort-based reference") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 20;
        std::vector<std::pair<EntityId, double>> reached;
        std::uniform_int_distribution<int> coin(0, 2), score(0, 4);
        for (EntityId e = 0; e < n; ++e)
            if (coin(rng)) reached.push_back({e, static_cast<double>(score(rng))});
        const EntityId answer = std::uniform_int_distribution<int>(0, n - 1)(rng);
        std::vector<Triple> truths;
        std::set<EntityId> others;
        for (EntityId e = 0; e < n; ++e) {
            if (e != answer && coin(rng) == 0) {
                truths.push_back({0, 0, e});
                others.insert(e);
            }
        }
        const auto known = known_from(truths);
        const double r = filtered_rank({0, 0, answer}, reached, known, n);
        CHECK(r == oracle::sorted_rank(answer, reached, others, n));
        CHECK(r >= 1.0);
        CHECK(r <= static_cast<double>(n - static_cast<int>(others.size())));
    }
}

TEST_CASE("summarize: small example and edge cases") {
    const std::vector<double> ranks{1, 2, 10};
    const auto m = summarize(ranks);
    CHECK(m.count == 3);
    CHECK(m.mrr == doctest::Approx((1 + 0.5 + 0.1) / 3));
    CHECK(m.hits1 == doctest::Approx(1.0 / 3));
    CHECK(m.hits3 == doctest::Approx(2.0 / 3));
    CHECK(m.hits10 == doctest::Approx(1.0));
    const std::vector<double> ones(7, 1.0);
    const auto o = summarize(ones);
    CHECK(o.mrr == 1.0);
    CHECK(o.hits1 == 1.0);
    CHECK(summarize(std::vector<double>{}).count == 0);
    // Half ranks: 1.5 is not a hit at 1.
    CHECK(summarize(std::vector<double>{1.5}).hits1 == 0.0);
}

TEST_CASE("summarize: accumulation over many ranks") {
    std::vector<double> ranks;
    long double mrr = 0;
    for (int i = 1; i <= 1000; ++i) {
        ranks.push_back(i);
        mrr += 1.0L / i;
    }
    CHECK(std::abs(summarize(ranks).mrr - static_cast<double>(mrr / 1000)) < 1e-12);
}

TEST_CASE("compute_metrics splits directions and counts unreachable answers") {
    std::vector<QueryRank> q{{{0, 0, 1}, 1.0, true, false}, {{1, 1, 0}, 4.0, false, true}};
    const auto r = compute_metrics(q);
    CHECK(r.all.count == 2);
    CHECK(r.tail_prediction.mrr == 1.0);
    CHECK(r.head_prediction.mrr == 0.25);
    CHECK(r.unreachable == 1);
}

TEST_CASE("evaluate: a zero scorer ties every reached candidate") {
    std::mt19937_64 rng(2);
    const auto s = random_splits(rng, true);
    auto p = ModelParams<float>::random(eval_dims(), rng);
    p.ent.w_score.setZero();
    const auto r = evaluate(p, s);
    for (const auto& q : r.ranks) {
        CHECK(q.rank >= 1.0);
        CHECK(q.rank <= s.train.entity_count());
    }
    // Without filtering conflicts, a reached answer sits in the middle of the reached set.
    EvalOptions opts;
    opts.head_direction = false;
    const auto tails = evaluate(p, s, opts);
    CHECK(tails.all.count == s.test_queries.size());
}

TEST_CASE("evaluate: ranks match an independent recount") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = random_splits(rng, trial % 2 == 0);
        const auto p = ModelParams<float>::random(eval_dims(), rng);
        const auto r = evaluate(p, s);
        const auto rdg = build_rdg(s.train);
        for (const auto& q : r.ranks) {
            const auto ctx = propagate(s.train, rdg, p, q.query.head, q.query.relation);
            std::vector<std::pair<EntityId, double>> reached;
            for (const auto& [e, sc] : score_candidates(ctx, p)) reached.push_back({e, sc});
            std::set<EntityId> known;
            for (auto e : s.known_true.tails(q.query.head, q.query.relation))
                if (e != q.query.tail) known.insert(e);
            CHECK(q.rank == doctest::Approx(oracle::sorted_rank(q.query.tail, reached, known, s.train.entity_count())));
            CHECK(q.reached == ctx.is_visited(q.query.tail));
        }
    }
}

TEST_CASE("evaluate: report bytes are deterministic and independent of threads") {
    std::mt19937_64 rng(4);
    const auto s = random_splits(rng, true, 30, 5, 80);
    const auto p = ModelParams<float>::random(eval_dims(), rng);
    std::ostringstream a, b, c;
    write_report_csv(a, evaluate(p, s));
    write_report_csv(b, evaluate(p, s));
    EvalOptions opts;
    opts.threads = 3;
    write_report_csv(c, evaluate(p, s, opts));
    CHECK(a.str() == b.str());
    CHECK(a.str() == c.str());
    CHECK(a.str().rfind("direction,queries,mrr,h1,h3,h10\n", 0) == 0);
}

TEST_CASE("evaluate: zero-shot on a graph with a different relation count") {
    const auto p = train(composition(), [] {
        TrainConfig c;
        c.dims = eval_dims();
        c.max_epochs = 2;
        c.negatives = 8;
        return c;
    }()).best.params;
    std::mt19937_64 rng(5);
    const auto other = random_splits(rng, true, 20, 7, 60);
    CHECK(other.train.relation_count() != composition().train.relation_count());
    const auto r = evaluate(p, other);
    CHECK(r.all.count == 2 * other.test_queries.size());
    CHECK(r.all.mrr > 0.0);
    CHECK(r.all.mrr <= 1.0);
}

TEST_CASE("evaluate: query outside the vocabulary is a data error") {
    std::mt19937_64 rng(6);
    auto s = random_splits(rng, false);
    s.test_queries.push_back({0, s.train.relation_count() + 3, 0});
    CHECK_THROWS_AS(evaluate(ModelParams<float>::random(eval_dims(), rng), s), DataError);
}

TEST_CASE("edge_importance: uniform attention under all-slot averaging") {
    std::mt19937_64 rng(7);
    const auto s = random_splits(rng, true);
    const auto rdg = build_rdg(s.train);
    const auto p = ModelParams<float>::zeros(eval_dims());
    const auto t = edge_importance(p, s, rdg, 1000, rng, EvalSplit::Test, ImportanceScope::All);
    REQUIRE(t.entries.size() == static_cast<std::size_t>(rdg.retained_edge_count()));
    for (const auto& e : t.entries) {
        const double expected = 1.0 / (static_cast<double>(rdg.past_neighbors(e.edge.second).size()) + 1.0);
        CHECK(e.importance == doctest::Approx(expected));
        CHECK(e.samples > 0);
    }
}

TEST_CASE("edge_importance: active scope averages only weights of reached sources") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = oracle::random_graph(rng, 12, 5, 40, 6, 3, 20);
        const std::vector<Triple> test{g.triples.back()};
        g.triples.pop_back();
        const auto s = make_splits(g.vocab, g.triples, {}, test, false);
        const auto rdg = build_rdg(s.train);
        const auto p = ModelParams<float>::random(eval_dims(3, 1), rng);
        const RelationId r_q = test[0].relation;
        if (r_q >= s.train.relation_count()) continue;
        const auto t = edge_importance(p, s, rdg, 1, rng, EvalSplit::Test, ImportanceScope::Active);
        RelationTrace<float> trace;
        encode_relations(rdg, r_q, p, &trace);
        std::size_t idx = 0;
        for (RelationId v = 0; v < rdg.relation_count(); ++v) {
            const auto past = rdg.past_neighbors(v);
            for (std::size_t k = 0; k < past.size(); ++k, ++idx) {
                double sum = 0;
                int n = 0;
                for (int l = 0; l < p.dims.relation_layers; ++l) {
                    if (!rdg.reachable_within(r_q, l)[static_cast<std::size_t>(past[k])]) continue;
                    for (int h = 0; h < p.dims.heads; ++h) {
                        sum += trace.alpha[l][h][static_cast<std::size_t>(attention_slot(rdg, v)) + k];
                        ++n;
                    }
                }
                INFO("trial " << trial);
                CHECK(t.entries[idx].samples == n);
                CHECK(t.entries[idx].importance == doctest::Approx(n ? sum / n : 0.0).epsilon(1e-9));
                CHECK(t.entries[idx].importance >= 0.0);
                CHECK(t.entries[idx].importance <= 1.0);
            }
        }
    }
}

TEST_CASE("select_edges: ordering, ties and nesting") {
    EdgeImportanceTable t;
    t.entries = {{{0, 3}, 0.2, 1}, {{1, 3}, 0.9, 1}, {{2, 3}, 0.2, 1}, {{0, 2}, 0.5, 1}, {{1, 2}, 0.1, 1}};
    std::mt19937_64 rng(9);
    CHECK(select_edges(t, PerturbMode::Top, 2, rng) == std::vector<RelationEdge>{{1, 3}, {0, 2}});
    // Equal importance: ordered by (target, source).
    CHECK(select_edges(t, PerturbMode::Bottom, 3, rng) == std::vector<RelationEdge>{{1, 2}, {0, 3}, {2, 3}});
    CHECK(select_edges(t, PerturbMode::Top, 10, rng).size() == 5);
    const auto top2 = select_edges(t, PerturbMode::Top, 2, rng);
    const auto top4 = select_edges(t, PerturbMode::Top, 4, rng);
    CHECK(std::equal(top2.begin(), top2.end(), top4.begin()));
    const auto rnd = select_edges(t, PerturbMode::Random, 3, rng);
    CHECK(std::set<RelationEdge>(rnd.begin(), rnd.end()).size() == 3);
    CHECK(parse_perturb_mode("bottom") == PerturbMode::Bottom);
    CHECK_THROWS_AS(parse_perturb_mode("middle"), ConfigError);
    CHECK(parse_importance_scope("all") == ImportanceScope::All);
    CHECK_THROWS_AS(parse_importance_scope("some"), ConfigError);
}

TEST_CASE("perturbed_evaluate: k = 0 matches evaluate; k beyond the edge count is flagged") {
    std::mt19937_64 rng(10);
    const auto s = random_splits(rng, true, 20, 5, 60);
    const auto rdg = build_rdg(s.train);
    const auto p = ModelParams<float>::random(eval_dims(), rng);
    const auto table = edge_importance(p, s, rdg, 100, rng);
    const auto base = evaluate(p, s, {}, &rdg);
    const auto k0 = perturbed_evaluate(p, s, rdg, table, PerturbMode::Top, 0, rng);
    REQUIRE(k0.ranks.size() == base.ranks.size());
    for (std::size_t i = 0; i < base.ranks.size(); ++i) CHECK(k0.ranks[i].rank == base.ranks[i].rank);
    CHECK(!k0.degenerate);
    const auto all = perturbed_evaluate(p, s, rdg, table, PerturbMode::Top, table.entries.size() + 1, rng);
    CHECK(all.degenerate);
    // Removing every edge equals evaluating on an RDG with no past neighbors.
    const auto none = evaluate(p, s, {}, [&] {
        static RelationDependencyGraph g;
        g = rdg.without(rdg.retained_edges());
        return &g;
    }());
    for (std::size_t i = 0; i < none.ranks.size(); ++i) CHECK(all.ranks[i].rank == none.ranks[i].rank);
    std::ostringstream out;
    write_report_table(out, all);
    CHECK(out.str().find("every RDG edge was removed") != std::string::npos);
}

TEST_CASE("write_ranks_tsv uses names when a vocabulary is given") {
    VocabMap v;
    v.entities.intern("a");
    v.entities.intern("b");
    v.relations.intern("r");
    const auto r = compute_metrics({{{0, 0, 1}, 2.5, true, false}});
    std::ostringstream named, raw;
    write_ranks_tsv(named, r, &v);
    write_ranks_tsv(raw, r);
    CHECK(named.str() == "a\tr\tb\t2.500000\n");
    CHECK(raw.str() == "0\t0\t1\t2.500000\n");
}
