// Command-line front end for graph statistics, training, evaluation and preprocessing.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rdgnet/checkpoint.hpp"
#include "rdgnet/config.hpp"
#include "rdgnet/errors.hpp"
#include "rdgnet/eval.hpp"
#include "rdgnet/io.hpp"
#include "rdgnet/kg_store.hpp"
#include "rdgnet/preprocess.hpp"
#include "rdgnet/rdg.hpp"
#include "rdgnet/trainer.hpp"

#ifndef RDGNET_VERSION
#define RDGNET_VERSION "unknown"
#endif
#ifndef RDGNET_BUILD_TYPE
#define RDGNET_BUILD_TYPE "unknown"
#endif
#ifndef RDGNET_PRESET_DIR
#define RDGNET_PRESET_DIR "presets"
#endif

using namespace rdgnet;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

// Config file, preset and command-line overrides shared by the training commands.
struct ConfigOptions {
    std::string config;
    std::string preset;
    std::vector<std::string> sets;
    std::string data_root;
    std::string train, valid, test;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> epochs;
    std::optional<double> lr;
    bool no_inverses = false;

    void attach(CLI::App* app, bool data_flags = true) {
        app->add_option("--config", config, "Config file ([model]/[train]/[data] sections)");
        app->add_option("--preset", preset, "Preset name under $RDGNET_PRESET_DIR (e.g. wn_v1)");
        app->add_option("--set", sets, "Override, e.g. --set train.negatives=32");
        app->add_option("--seed", seed, "Run seed");
        app->add_option("--threads", threads, "Worker threads");
        app->add_option("--epochs", epochs, "Maximum epochs");
        app->add_option("--lr", lr, "Learning rate");
        if (data_flags) {
            app->add_option("--data-root", data_root, "Dataset root (default $RDGNET_DATA_DIR)");
            app->add_option("--train", train, "Training triples");
            app->add_option("--valid", valid, "Validation triples");
            app->add_option("--test", test, "Test triples");
            app->add_flag("--no-inverses", no_inverses, "Disable inverse-relation augmentation");
        }
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!preset.empty()) {
            const fs::path dir = env_or("RDGNET_PRESET_DIR", RDGNET_PRESET_DIR);
            fs::path p = dir / preset;
            if (!p.has_extension()) p += ".cfg";
            c = load_config(p.string(), c);
        }
        if (!config.empty()) c = load_config(config, c);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            const auto dot = s.find('.');
            if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
                throw ConfigError("--set expects section.key=value, got '" + s + "'");
            }
            apply_setting(c, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
        }
        if (seed) c.train.seed = *seed;
        if (threads) c.train.threads = *threads;
        if (epochs) c.train.max_epochs = *epochs;
        if (lr) c.train.learning_rate = *lr;
        if (!train.empty()) c.data.train = train;
        if (!valid.empty()) c.data.valid = valid;
        if (!test.empty()) c.data.test = test;
        if (no_inverses) c.data.inverses = false;
        resolve_data_paths(c.data, data_root.empty() ? env_or("RDGNET_DATA_DIR", "") : data_root);
        c.train.validate();
        return c;
    }
};

void print_config(const RunConfig& c) {
    std::ostringstream ss;
    write_config(ss, c);
    std::istringstream in(ss.str());
    for (std::string line; std::getline(in, line);) std::cerr << "# " << line << '\n';
}

DatasetSplits load_data(const DataConfig& d) {
    if (d.train.empty()) throw ConfigError("no training graph given (--train or [data] train/dataset)");
    return load_splits_files(d.train, d.valid, d.test, d.inverses);
}

std::string dataset_name(const std::string& path) {
    const fs::path p(path);
    const auto parent = p.parent_path().filename().string();
    return parent.empty() ? p.stem().string() : parent;
}

void write_text(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
    } else {
        atomic_write(path, fn);
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relation-dependency graph reasoning over knowledge graphs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("rdgnet ") + RDGNET_VERSION + " (" + RDGNET_BUILD_TYPE +
                                          ", " + __VERSION__ + ", C++" + std::to_string(__cplusplus) + ")");

    // build-rdg
    auto* build_cmd = app.add_subcommand("build-rdg", "Build the relation-dependency graph of a triple file");
    std::string br_train, br_edges, br_tau;
    bool br_no_inv = false;
    build_cmd->add_option("--train", br_train, "Triple file")->required();
    build_cmd->add_option("--edges", br_edges, "Output edge TSV (default stdout)");
    build_cmd->add_option("--tau", br_tau, "Output precedence TSV");
    build_cmd->add_flag("--no-inverses", br_no_inv, "Disable inverse-relation augmentation");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Relation-graph edge counts");
    std::vector<std::string> st_train;
    std::string st_methods = "rdg,ingram,ultra", st_out;
    bool st_inverses = false, st_self = false;
    stats_cmd->add_option("--train", st_train, "Triple file(s)")->required();
    stats_cmd->add_option("--methods", st_methods, "Comma list of rdg, ingram, ultra");
    stats_cmd->add_flag("--inverses", st_inverses, "Count over the inverse-augmented relation set");
    stats_cmd->add_flag("--count-self-pairs", st_self, "Add witnessed self pairs to the RDG count");
    stats_cmd->add_option("--out", st_out, "Output CSV (default stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model from scratch");
    ConfigOptions train_opts;
    std::string tr_out, tr_log, tr_init;
    train_opts.attach(train_cmd);
    train_cmd->add_option("--out", tr_out, "Checkpoint path")->required();
    train_cmd->add_option("--log", tr_log, "Training log CSV");
    train_cmd->add_option("--init", tr_init, "Start from this checkpoint instead of a random init");

    // pretrain
    auto* pre_cmd = app.add_subcommand("pretrain", "Sequential training over several graphs");
    std::vector<std::string> pre_stages;
    std::string pre_out, pre_log, pre_root;
    std::optional<std::uint64_t> pre_seed;
    std::optional<int> pre_threads;
    pre_cmd->add_option("--stage", pre_stages, "Config file per stage, in order")->required();
    pre_cmd->add_option("--data-root", pre_root, "Dataset root (default $RDGNET_DATA_DIR)");
    pre_cmd->add_option("--seed", pre_seed, "Seed for every stage");
    pre_cmd->add_option("--threads", pre_threads, "Worker threads");
    pre_cmd->add_option("--out", pre_out, "Checkpoint path")->required();
    pre_cmd->add_option("--log", pre_log, "Training log CSV");

    // finetune
    auto* ft_cmd = app.add_subcommand("finetune", "Train only the final-layer tensors of a checkpoint");
    ConfigOptions ft_opts;
    std::string ft_ckpt, ft_out, ft_log;
    ft_opts.attach(ft_cmd);
    ft_cmd->add_option("--checkpoint", ft_ckpt, "Starting checkpoint")->required();
    ft_cmd->add_option("--out", ft_out, "Checkpoint path")->required();
    ft_cmd->add_option("--log", ft_log, "Training log CSV");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Filtered-ranking evaluation of a checkpoint");
    std::string ev_ckpt, ev_train, ev_valid, ev_test, ev_split = "test", ev_dirs = "both", ev_csv, ev_ranks;
    int ev_threads = 1;
    bool ev_no_inv = false;
    eval_cmd->add_option("--checkpoint", ev_ckpt, "Checkpoint")->required();
    eval_cmd->add_option("--train", ev_train, "Fact graph used for propagation")->required();
    eval_cmd->add_option("--valid", ev_valid, "Validation triples");
    eval_cmd->add_option("--test", ev_test, "Test triples");
    eval_cmd->add_option("--split", ev_split, "valid or test")->check(CLI::IsMember({"valid", "test"}));
    eval_cmd->add_option("--directions", ev_dirs, "both, tail or head")->check(CLI::IsMember({"both", "tail", "head"}));
    eval_cmd->add_option("--threads", ev_threads, "Worker threads");
    eval_cmd->add_option("--report-csv", ev_csv, "Write the metric CSV here");
    eval_cmd->add_option("--ranks", ev_ranks, "Write per-query ranks here");
    eval_cmd->add_flag("--no-inverses", ev_no_inv, "Disable inverse-relation augmentation");

    // perturb
    auto* pt_cmd = app.add_subcommand("perturb", "Attention-importance edge removal study");
    std::string pt_ckpt, pt_train, pt_valid, pt_test, pt_modes = "top,bottom,random", pt_ks = "5", pt_out, pt_imp;
    std::string pt_scope = "active";
    int pt_seeds = 10, pt_threads = 1;
    std::size_t pt_sample = 1000;
    std::uint64_t pt_seed = 0;
    pt_cmd->add_option("--checkpoint", pt_ckpt, "Checkpoint")->required();
    pt_cmd->add_option("--train", pt_train, "Fact graph")->required();
    pt_cmd->add_option("--valid", pt_valid, "Validation triples");
    pt_cmd->add_option("--test", pt_test, "Test triples")->required();
    pt_cmd->add_option("--modes", pt_modes, "Comma list of top, bottom, random");
    pt_cmd->add_option("--k", pt_ks, "Comma list of edge counts");
    pt_cmd->add_option("--seeds", pt_seeds, "Number of seeds");
    pt_cmd->add_option("--seed", pt_seed, "First seed");
    pt_cmd->add_option("--sample", pt_sample, "Query relations sampled for importance");
    pt_cmd->add_option("--threads", pt_threads, "Worker threads");
    pt_cmd->add_option("--out", pt_out, "Output CSV (default stdout)");
    pt_cmd->add_option("--importance", pt_imp, "Write the edge importance table here");
    pt_cmd->add_option("--importance-scope", pt_scope, "active (weights that scaled a message) or all");

    // predict
    auto* pr_cmd = app.add_subcommand("predict", "Rank candidate answers for queries");
    std::string pr_ckpt, pr_train, pr_queries, pr_out;
    int pr_top = 10;
    pr_cmd->add_option("--checkpoint", pr_ckpt, "Checkpoint")->required();
    pr_cmd->add_option("--train", pr_train, "Fact graph")->required();
    pr_cmd->add_option("--queries", pr_queries, "TSV of head<TAB>relation lines")->required();
    pr_cmd->add_option("--top-k", pr_top, "Candidates per query");
    pr_cmd->add_option("--out", pr_out, "Output TSV (default stdout)");

    // preprocess
    auto* pp_cmd = app.add_subcommand("preprocess", "Dataset construction tools");
    pp_cmd->require_subcommand(1);
    auto* can_cmd = pp_cmd->add_subcommand("canonicalize", "Add interaction triples and assign entity ids");
    std::string can_rel, can_train, can_kg, can_test, can_out, can_name = "purchase";
    can_cmd->add_option("--relations", can_rel, "Relation list")->required();
    can_cmd->add_option("--train", can_train, "Training interactions")->required();
    can_cmd->add_option("--kg", can_kg, "Knowledge-graph triples")->required();
    can_cmd->add_option("--test", can_test, "Test interactions")->required();
    can_cmd->add_option("--out", can_out, "Output directory")->required();
    can_cmd->add_option("--relation-name", can_name, "Name of the interaction relation");

    auto* pp2_cmd = pp_cmd->add_subcommand("prune-partition", "Relation-balanced pruning and inductive split");
    std::string pp_in, pp_out, pp_alpha = "0.8,0.1,0.1";
    PrunePartitionConfig pp_cfg;
    pp2_cmd->add_option("--input", pp_in, "Triple file")->required();
    pp2_cmd->add_option("--out", pp_out, "Output directory")->required();
    pp2_cmd->add_option("--rho", pp_cfg.rho, "Fraction kept per relation");
    pp2_cmd->add_option("--theta", pp_cfg.theta, "Fraction of seen entities and relations");
    pp2_cmd->add_option("--alpha", pp_alpha, "train,valid,test ratios");
    pp2_cmd->add_option("--weight", pp_cfg.weight, "Importance weight");
    pp2_cmd->add_option("--seed", pp_cfg.seed, "Seed");

    auto* val_cmd = pp_cmd->add_subcommand("validate", "Classify a split as transductive or inductive");
    std::string val_train, val_valid, val_test;
    val_cmd->add_option("--train", val_train, "Training triples")->required();
    val_cmd->add_option("--valid", val_valid, "Validation triples")->required();
    val_cmd->add_option("--test", val_test, "Test triples")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*build_cmd) {
            VocabMap vocab;
            const auto triples = dedup_triples(parse_triples_file(br_train, vocab));
            const auto kg = KnowledgeGraph::build(triples, vocab.entities.size(), vocab.relations.size(), !br_no_inv);
            if (!br_no_inv) vocab.inverse_offset = vocab.relations.size();
            const auto rdg = build_rdg(kg);
            std::cerr << "# relations = " << rdg.relation_count() << "\n# pairs = " << rdg.edges().size()
                      << "\n# retained = " << rdg.retained_edge_count() << '\n';
            write_text(br_edges, [&](std::ostream& o) { write_rdg_edges(o, rdg, &vocab); });
            if (!br_tau.empty()) write_text(br_tau, [&](std::ostream& o) { write_rdg_tau(o, rdg, &vocab); });
        } else if (*stats_cmd) {
            const auto methods = split_list(st_methods);
            for (const auto& m : methods) {
                if (m != "rdg" && m != "ingram" && m != "ultra") throw ConfigError("unknown method '" + m + "'");
            }
            std::cerr << "# inverses = " << (st_inverses ? "true" : "false") << "\n# count_self_pairs = "
                      << (st_self ? "true" : "false") << '\n';
            write_text(st_out, [&](std::ostream& o) {
                write_stats_header(o);
                for (const auto& path : st_train) {
                    VocabMap vocab;
                    const auto triples = dedup_triples(parse_triples_file(path, vocab));
                    const auto kg =
                        KnowledgeGraph::build(triples, vocab.entities.size(), vocab.relations.size(), st_inverses);
                    for (const auto& m : methods) {
                        MetaGraphStats s;
                        if (m == "rdg") s = rdg_stats(build_rdg(kg), st_self);
                        else if (m == "ingram") s = build_ingram_graph(kg);
                        else s = build_ultra_metagraph(kg);
                        write_stats_row(o, dataset_name(path), s);
                    }
                }
            });
        } else if (*train_cmd) {
            const auto cfg = train_opts.resolve();
            print_config(cfg);
            const auto splits = load_data(cfg.data);
            std::optional<Checkpoint> init;
            if (!tr_init.empty()) {
                init = load_checkpoint(tr_init);
                check_dims(*init, cfg.train.dims);
            }
            write_log_header(std::cerr);
            auto result = train(splits, cfg.train, init ? &init->params : nullptr, &std::cerr);
            save_checkpoint(tr_out, result.best);
            if (!tr_log.empty()) {
                atomic_write(tr_log, [&](std::ostream& o) {
                    write_log_header(o);
                    for (const auto& row : result.log) write_log_row(o, row);
                });
            }
            std::cerr << "# best epoch " << result.best_epoch << ", validation MRR " << result.best.best_val_mrr << '\n';
        } else if (*pre_cmd) {
            std::vector<DatasetSplits> data;
            std::vector<PretrainStage> stages;
            data.reserve(pre_stages.size());
            for (const auto& path : pre_stages) {
                auto cfg = load_config(path);
                if (pre_seed) cfg.train.seed = *pre_seed;
                if (pre_threads) cfg.train.threads = *pre_threads;
                resolve_data_paths(cfg.data, pre_root.empty() ? env_or("RDGNET_DATA_DIR", "") : pre_root);
                cfg.train.validate();
                std::cerr << "# stage " << path << '\n';
                print_config(cfg);
                data.push_back(load_data(cfg.data));
                stages.push_back({nullptr, cfg.train});
            }
            for (std::size_t i = 0; i < stages.size(); ++i) stages[i].splits = &data[i];
            write_log_header(std::cerr);
            const auto result = pretrain_sequence(stages, &std::cerr);
            save_checkpoint(pre_out, result.best);
            if (!pre_log.empty()) {
                atomic_write(pre_log, [&](std::ostream& o) {
                    write_log_header(o);
                    for (const auto& row : result.log) write_log_row(o, row);
                });
            }
        } else if (*ft_cmd) {
            auto cfg = ft_opts.resolve();
            const auto start = load_checkpoint(ft_ckpt);
            cfg.train.dims = start.params.dims;
            cfg.train.freeze = FreezePolicy::FinalLayer;
            print_config(cfg);
            const auto splits = load_data(cfg.data);
            write_log_header(std::cerr);
            const auto result = finetune(start, splits, cfg.train, &std::cerr);
            save_checkpoint(ft_out, result.best);
            if (!ft_log.empty()) {
                atomic_write(ft_log, [&](std::ostream& o) {
                    write_log_header(o);
                    for (const auto& row : result.log) write_log_row(o, row);
                });
            }
        } else if (*eval_cmd) {
            const auto ckpt = load_checkpoint(ev_ckpt);
            std::cerr << "# checkpoint = " << ev_ckpt << "\n# d = " << ckpt.params.dims.dim
                      << "\n# split = " << ev_split << "\n# directions = " << ev_dirs << "\n# threads = " << ev_threads
                      << '\n';
            const auto splits = load_splits_files(ev_train, ev_valid, ev_test, !ev_no_inv);
            EvalOptions opts;
            opts.split = ev_split == "valid" ? EvalSplit::Valid : EvalSplit::Test;
            opts.tail_direction = ev_dirs != "head";
            opts.head_direction = ev_dirs != "tail";
            opts.threads = ev_threads;
            const auto report = evaluate(ckpt.params, splits, opts);
            write_report_table(std::cout, report);
            if (!ev_csv.empty()) atomic_write(ev_csv, [&](std::ostream& o) { write_report_csv(o, report); });
            if (!ev_ranks.empty()) {
                atomic_write(ev_ranks, [&](std::ostream& o) { write_ranks_tsv(o, report, &splits.vocab); });
            }
        } else if (*pt_cmd) {
            const auto ckpt = load_checkpoint(pt_ckpt);
            const auto splits = load_splits_files(pt_train, pt_valid, pt_test, true);
            const auto rdg = build_rdg(splits.train);
            std::vector<PerturbMode> modes;
            for (const auto& m : split_list(pt_modes)) modes.push_back(parse_perturb_mode(m));
            std::vector<std::size_t> ks;
            for (const auto& k : split_list(pt_ks)) ks.push_back(static_cast<std::size_t>(std::stoul(k)));
            std::cerr << "# modes = " << pt_modes << "\n# k = " << pt_ks << "\n# seeds = " << pt_seeds
                      << "\n# seed = " << pt_seed << "\n# sample = " << pt_sample << "\n# importance_scope = " << pt_scope << '\n';
            const auto scope = parse_importance_scope(pt_scope);
            EvalOptions opts;
            opts.threads = pt_threads;
            std::mt19937_64 imp_rng(component_seed(pt_seed, 4));
            const auto table = edge_importance(ckpt.params, splits, rdg, pt_sample, imp_rng, EvalSplit::Test, scope);
            if (!pt_imp.empty()) {
                atomic_write(pt_imp, [&](std::ostream& o) {
                    o << "source\ttarget\timportance\tsamples\n";
                    for (const auto& e : table.entries) {
                        o << splits.vocab.relation_name(e.edge.first) << '\t'
                          << splits.vocab.relation_name(e.edge.second) << '\t' << e.importance << '\t' << e.samples
                          << '\n';
                    }
                });
            }
            const auto base = evaluate(ckpt.params, splits, opts, &rdg);
            write_text(pt_out, [&](std::ostream& o) {
                char buf[160];
                o << "mode,k,seed,mrr,h1,h10\n";
                std::snprintf(buf, sizeof buf, "none,0,%llu,%.6f,%.6f,%.6f\n",
                              static_cast<unsigned long long>(pt_seed), base.all.mrr, base.all.hits1,
                              base.all.hits10);
                o << buf;
                for (auto mode : modes) {
                    for (auto k : ks) {
                        const int runs = mode == PerturbMode::Random ? pt_seeds : 1;
                        for (int s = 0; s < runs; ++s) {
                            const auto seed = pt_seed + static_cast<std::uint64_t>(s);
                            std::mt19937_64 rng(component_seed(seed, 4));
                            const auto r = perturbed_evaluate(ckpt.params, splits, rdg, table, mode, k, rng, opts);
                            std::snprintf(buf, sizeof buf, "%s,%zu,%llu,%.6f,%.6f,%.6f\n",
                                          perturb_mode_name(mode).c_str(), k, static_cast<unsigned long long>(seed),
                                          r.all.mrr, r.all.hits1, r.all.hits10);
                            o << buf;
                        }
                    }
                }
            });
        } else if (*pr_cmd) {
            const auto ckpt = load_checkpoint(pr_ckpt);
            auto splits = load_splits_files(pr_train, "", "", true);
            const auto rdg = build_rdg(splits.train);
            std::ifstream in(pr_queries);
            if (!in) throw DataError("cannot open '" + pr_queries + "'");
            std::vector<Triple> queries;
            std::string line;
            std::size_t no = 0;
            while (std::getline(in, line)) {
                ++no;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty() || line.front() == '#') continue;
                std::vector<std::string> f;
                std::stringstream ss(line);
                for (std::string tok; std::getline(ss, tok, '\t');) f.push_back(tok);
                if (f.size() < 2) throw ParseError(no, "expected head<TAB>relation");
                const auto h = splits.vocab.entities.find(f[0]);
                if (!h) throw ResolutionError("line " + std::to_string(no) + ": unknown entity '" + f[0] + "'");
                std::optional<std::int32_t> r = splits.vocab.relations.find(f[1]);
                if (!r && f[1].size() > 4 && f[1].ends_with("_inv")) {
                    if (auto base = splits.vocab.relations.find(f[1].substr(0, f[1].size() - 4))) {
                        r = splits.train.inverse_of(*base);
                    }
                }
                if (!r) throw ResolutionError("line " + std::to_string(no) + ": unknown relation '" + f[1] + "'");
                queries.push_back({*h, *r, 0});
            }
            write_text(pr_out, [&](std::ostream& o) {
                char buf[64];
                for (const auto& q : queries) {
                    const auto ctx = propagate(splits.train, rdg, ckpt.params, q.head, q.relation);
                    const auto ranked = score_candidates(ctx, ckpt.params);
                    for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(pr_top); ++i) {
                        std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(ranked[i].second));
                        o << splits.vocab.entities.name(q.head) << '\t' << splits.vocab.relation_name(q.relation)
                          << '\t' << splits.vocab.entities.name(ranked[i].first) << '\t' << buf << '\t' << i + 1
                          << '\n';
                    }
                }
            });
        } else if (*can_cmd) {
            std::ifstream rel(can_rel), tr(can_train), te(can_test);
            if (!rel || !tr || !te) throw DataError("cannot open canonicalization inputs");
            const auto relations = parse_relation_list(rel);
            std::vector<NamedTriple> kg;
            {
                VocabMap vocab;
                const auto triples = parse_triples_file(can_kg, vocab);
                for (const auto& t : triples) {
                    kg.push_back({vocab.entities.name(t.head), vocab.relations.name(t.relation),
                                  vocab.entities.name(t.tail)});
                }
            }
            const auto out = canonicalize(relations, tr, kg, te, can_name);
            const fs::path dir(can_out);
            atomic_write((dir / "relations.tsv").string(), [&](std::ostream& o) {
                for (std::size_t i = 0; i < out.relations.size(); ++i) {
                    if (!out.relations[i].empty()) o << out.relations[i] << '\t' << i << '\n';
                }
            });
            atomic_write((dir / "kg.tsv").string(), [&](std::ostream& o) {
                for (const auto& t : out.triples) o << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
            });
            atomic_write((dir / "entities.tsv").string(), [&](std::ostream& o) {
                for (std::size_t i = 0; i < out.entities.size(); ++i) o << out.entities[i] << '\t' << i << '\n';
            });
            std::cerr << "# interaction relation id = " << out.interaction_relation << "\n# triples = "
                      << out.triples.size() << "\n# entities = " << out.entities.size()
                      << "\n# skipped lines = " << out.skipped_lines << '\n';
        } else if (*pp2_cmd) {
            const auto a = split_list(pp_alpha);
            if (a.size() != 3) throw ConfigError("--alpha expects three comma-separated ratios");
            for (int i = 0; i < 3; ++i) pp_cfg.alpha[static_cast<std::size_t>(i)] = std::stod(a[static_cast<std::size_t>(i)]);
            pp_cfg.validate();
            VocabMap vocab;
            const auto triples = parse_triples_file(pp_in, vocab);
            const auto r = prune_partition(triples, vocab.entities.size(), vocab.relations.size(), pp_cfg);
            const fs::path dir(pp_out);
            auto dump = [&](const char* name, const std::vector<Triple>& v) {
                atomic_write((dir / name).string(), [&](std::ostream& o) { write_triples(o, v, vocab); });
            };
            dump("train.txt", r.train);
            dump("valid.txt", r.valid);
            dump("test.txt", r.test);
            atomic_write((dir / "entities.tsv").string(), [&](std::ostream& o) {
                for (std::size_t i = 0; i < r.entity_map.size(); ++i) {
                    o << vocab.entities.name(r.entity_map[i]) << '\t' << i << '\n';
                }
            });
            atomic_write((dir / "relations.tsv").string(), [&](std::ostream& o) {
                for (std::size_t i = 0; i < r.relation_map.size(); ++i) {
                    o << vocab.relations.name(r.relation_map[i]) << '\t' << i << '\n';
                }
            });
            atomic_write((dir / "metadata.jsonl").string(), [&](std::ostream& o) { write_prune_metadata(o, r, pp_cfg); });
            write_prune_metadata(std::cerr, r, pp_cfg);
        } else if (*val_cmd) {
            VocabMap vocab;
            const auto tr = parse_triples_file(val_train, vocab);
            const auto va = parse_triples_file(val_valid, vocab);
            const auto te = parse_triples_file(val_test, vocab);
            write_inductive_report(std::cout, validate_inductive_split(tr, va, te));
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
