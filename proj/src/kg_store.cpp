#include "rdgnet/kg_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "rdgnet/errors.hpp"

namespace rdgnet {

std::int32_t Vocab::intern(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<std::int32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

std::optional<std::int32_t> Vocab::find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

std::string VocabMap::relation_name(RelationId r) const {
    if (inverse_offset > 0 && r >= inverse_offset) return relations.name(r - inverse_offset) + "_inv";
    return relations.name(r);
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::int32_t resolve(Vocab& v, std::string_view name, bool frozen, std::size_t line, const char* kind) {
    if (!frozen) return v.intern(name);
    if (auto id = v.find(name)) return *id;
    throw ResolutionError("line " + std::to_string(line) + ": unknown " + kind + " '" + std::string(name) + "'");
}

}  // namespace

std::vector<Triple> parse_triples(std::istream& in, VocabMap& vocab) {
    std::vector<Triple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto f = split_tabs(line);
        if (f.size() != 3) {
            throw ParseError(lineno, "expected 3 tab-separated fields, got " + std::to_string(f.size()));
        }
        if (f[0].empty() || f[1].empty() || f[2].empty()) throw ParseError(lineno, "empty field");
        Triple t;
        t.head = resolve(vocab.entities, f[0], vocab.frozen, lineno, "entity");
        t.relation = resolve(vocab.relations, f[1], vocab.frozen, lineno, "relation");
        t.tail = resolve(vocab.entities, f[2], vocab.frozen, lineno, "entity");
        out.push_back(t);
    }
    return out;
}

std::vector<Triple> parse_triples_file(const std::string& path, VocabMap& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return parse_triples(in, vocab);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path + ": " + std::string(e.what()));
    }
}

void write_triples(std::ostream& out, std::span<const Triple> triples, const VocabMap& vocab) {
    for (const auto& t : triples) {
        out << vocab.entities.name(t.head) << '\t' << vocab.relation_name(t.relation) << '\t'
            << vocab.entities.name(t.tail) << '\n';
    }
}

void write_vocab(std::ostream& out, const Vocab& vocab) {
    for (std::int32_t i = 0; i < vocab.size(); ++i) out << vocab.name(i) << '\t' << i << '\n';
}

std::vector<Triple> dedup_triples(std::span<const Triple> triples) {
    struct Hash {
        std::size_t operator()(const Triple& t) const noexcept {
            std::uint64_t h = static_cast<std::uint32_t>(t.head);
            h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(t.relation);
            h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(t.tail);
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };
    std::unordered_set<Triple, Hash> seen;
    std::vector<Triple> out;
    out.reserve(triples.size());
    for (const auto& t : triples) {
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

KnowledgeGraph KnowledgeGraph::build(std::span<const Triple> triples, std::int32_t entity_count,
                                     std::int32_t relation_count, bool add_inverses) {
    if (entity_count < 0 || relation_count < 0) throw DataError("negative vocabulary size");
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& t = triples[i];
        if (t.head < 0 || t.head >= entity_count || t.tail < 0 || t.tail >= entity_count) {
            throw DataError("triple " + std::to_string(i) + ": entity id out of range");
        }
        if (t.relation < 0 || t.relation >= relation_count) {
            throw DataError("triple " + std::to_string(i) + ": relation id out of range");
        }
    }

    KnowledgeGraph g;
    g.entity_count_ = entity_count;
    g.base_relation_count_ = relation_count;
    g.relation_count_ = add_inverses ? 2 * relation_count : relation_count;
    g.has_inverses_ = add_inverses;
    g.base_fact_count_ = triples.size();
    g.facts_.assign(triples.begin(), triples.end());
    if (add_inverses) {
        g.facts_.reserve(2 * triples.size());
        for (const auto& t : triples) g.facts_.push_back({t.tail, t.relation + relation_count, t.head});
    }

    g.out_offsets_.assign(static_cast<std::size_t>(entity_count) + 1, 0);
    for (const auto& t : g.facts_) ++g.out_offsets_[static_cast<std::size_t>(t.head) + 1];
    for (std::size_t e = 0; e < static_cast<std::size_t>(entity_count); ++e) {
        g.out_offsets_[e + 1] += g.out_offsets_[e];
    }
    g.out_facts_.resize(g.facts_.size());
    g.out_ids_.resize(g.facts_.size());
    std::vector<std::int64_t> cursor(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
    for (std::size_t i = 0; i < g.facts_.size(); ++i) {
        const auto slot = static_cast<std::size_t>(cursor[static_cast<std::size_t>(g.facts_[i].head)]++);
        g.out_facts_[slot] = g.facts_[i];
        g.out_ids_[slot] = static_cast<FactIndex>(i);
    }

    g.relation_freq_.assign(static_cast<std::size_t>(g.relation_count_), 0);
    for (const auto& t : g.facts_) ++g.relation_freq_[static_cast<std::size_t>(t.relation)];
    return g;
}

KnowledgeGraph KnowledgeGraph::with_inverses() const {
    if (has_inverses_) throw DataError("inverse augmentation already applied");
    return build(facts_, entity_count_, relation_count_, true);
}

std::span<const Triple> KnowledgeGraph::out(EntityId e) const {
    const auto b = static_cast<std::size_t>(out_offsets_[static_cast<std::size_t>(e)]);
    const auto n = static_cast<std::size_t>(out_offsets_[static_cast<std::size_t>(e) + 1]) - b;
    return {out_facts_.data() + b, n};
}

std::span<const FactIndex> KnowledgeGraph::out_fact_ids(EntityId e) const {
    const auto b = static_cast<std::size_t>(out_offsets_[static_cast<std::size_t>(e)]);
    const auto n = static_cast<std::size_t>(out_offsets_[static_cast<std::size_t>(e) + 1]) - b;
    return {out_ids_.data() + b, n};
}

RelationId KnowledgeGraph::inverse_of(RelationId r) const {
    if (!has_inverses_) throw DataError("graph has no inverse relations");
    return r < base_relation_count_ ? r + base_relation_count_ : r - base_relation_count_;
}

FactIndex KnowledgeGraph::partner(FactIndex i) const {
    if (!has_inverses_) return -1;
    const auto n = static_cast<FactIndex>(base_fact_count_);
    return i < n ? i + n : i - n;
}

std::optional<FactIndex> KnowledgeGraph::find_fact(const Triple& t) const {
    if (t.head < 0 || t.head >= entity_count_) return std::nullopt;
    const auto facts = out(t.head);
    const auto ids = out_fact_ids(t.head);
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (facts[i].relation == t.relation && facts[i].tail == t.tail) return ids[i];
    }
    return std::nullopt;
}

void KnownTrue::add(EntityId head, RelationId relation, EntityId tail) {
    map_[key(head, relation)].push_back(tail);
}

void KnownTrue::finalize() {
    for (auto& [k, v] : map_) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
}

bool KnownTrue::contains(EntityId head, RelationId relation, EntityId tail) const {
    const auto t = tails(head, relation);
    return std::binary_search(t.begin(), t.end(), tail);
}

std::span<const EntityId> KnownTrue::tails(EntityId head, RelationId relation) const {
    auto it = map_.find(key(head, relation));
    if (it == map_.end()) return {};
    return it->second;
}

std::size_t KnownTrue::entry_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : map_) n += v.size();
    return n;
}

DatasetSplits make_splits(VocabMap vocab, std::vector<Triple> train, std::vector<Triple> valid,
                       std::vector<Triple> test, bool add_inverses) {
    DatasetSplits s;
    s.vocab = std::move(vocab);
    s.train_triples = dedup_triples(train);
    s.valid_queries = dedup_triples(valid);
    s.test_queries = dedup_triples(test);

    const auto base_relations = s.vocab.relations.size();
    s.train = KnowledgeGraph::build(s.train_triples, s.vocab.entities.size(), base_relations, add_inverses);
    if (add_inverses) s.vocab.inverse_offset = base_relations;

    for (const auto* split : {&s.train_triples, &s.valid_queries, &s.test_queries}) {
        for (const auto& t : *split) {
            s.known_true.add(t.head, t.relation, t.tail);
            if (add_inverses) s.known_true.add(t.tail, t.relation + base_relations, t.head);
        }
    }
    s.known_true.finalize();
    return s;
}

DatasetSplits load_splits(std::istream* train, std::istream* valid, std::istream* test, bool add_inverses) {
    VocabMap vocab;
    auto read = [&](std::istream* in) { return in ? parse_triples(*in, vocab) : std::vector<Triple>{}; };
    auto tr = read(train);
    auto va = read(valid);
    auto te = read(test);
    return make_splits(std::move(vocab), std::move(tr), std::move(va), std::move(te), add_inverses);
}

DatasetSplits load_splits_files(const std::string& train, const std::string& valid, const std::string& test,
                                bool add_inverses) {
    VocabMap vocab;
    auto read = [&](const std::string& path) {
        return path.empty() ? std::vector<Triple>{} : parse_triples_file(path, vocab);
    };
    auto tr = read(train);
    auto va = read(valid);
    auto te = read(test);
    return make_splits(std::move(vocab), std::move(tr), std::move(va), std::move(te), add_inverses);
}

std::vector<Triple> both_directions(std::span<const Triple> triples, const KnowledgeGraph& kg) {
    std::vector<Triple> out;
    out.reserve(2 * triples.size());
    for (const auto& t : triples) {
        out.push_back(t);
        if (kg.has_inverses()) out.push_back({t.tail, kg.inverse_of(t.relation), t.head});
    }
    return out;
}

}  // namespace rdgnet
