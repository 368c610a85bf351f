#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "rdgnet/kg_store.hpp"
#include "rdgnet/synthetic.hpp"

using namespace rdgnet;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;

    Workspace() {
        dir = fs::temp_directory_path() / ("rdgnet_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        write_composition("toy", 1, "e");
        write_composition("other", 2, "x");
    }
    ~Workspace() { fs::remove_all(dir); }

    void write_composition(const std::string& name, std::uint64_t seed, const std::string& prefix) {
        CompositionConfig c;
        c.seed = seed;
        c.entity_prefix = prefix;
        const auto kg = make_composition_kg(c);
        fs::create_directories(dir / name);
        for (const auto& [file, triples] : {std::pair{"train.txt", &kg.train}, std::pair{"valid.txt", &kg.valid},
                                            std::pair{"test.txt", &kg.test}}) {
            std::ofstream out(dir / name / file);
            write_triples(out, *triples, kg.vocab);
        }
    }

    std::string path(const std::string& rel) const { return (dir / rel).string(); }
};

const Workspace& workspace() {
    static Workspace w;
    return w;
}

int run(const std::string& args, const std::string& stdout_file = "") {
    std::string cmd = std::string(RDGNET_CLI_PATH) + " " + args;
    cmd += stdout_file.empty() ? " >/dev/null" : " >" + stdout_file;
    cmd += " 2>" + workspace().path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string data_args(const std::string& name) {
    const auto& w = workspace();
    return "--train " + w.path(name + "/train.txt") + " --valid " + w.path(name + "/valid.txt") + " --test " +
           w.path(name + "/test.txt");
}

const std::string kSmall = " --set model.dim=8 --set model.heads=2 --set model.relation_layers=1 "
                           "--set model.entity_layers=3 --set train.negatives=8 ";

}  // namespace

TEST_CASE("cli: help and usage errors") {
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
    CHECK(run("train --no-such-flag") == 1);
    CHECK(run("eval") == 1);
}

TEST_CASE("cli: build-rdg writes edges and precedence") {
    const auto& w = workspace();
    CHECK(run("build-rdg --train " + w.path("toy/train.txt") + " --edges " + w.path("edges.tsv") + " --tau " +
              w.path("tau.tsv")) == 0);
    CHECK(!slurp(w.path("edges.tsv")).empty());
    std::istringstream tau(slurp(w.path("tau.tsv")));
    int lines = 0;
    for (std::string l; std::getline(tau, l);) lines += l.empty() || l[0] == '#' ? 0 : 1;
    CHECK(lines >= 6);
}

TEST_CASE("cli: stats prints one row per method") {
    const auto& w = workspace();
    CHECK(run("stats --train " + w.path("toy/train.txt") + " --methods rdg,ingram,ultra", w.path("stats.csv")) == 0);
    const auto csv = slurp(w.path("stats.csv"));
    CHECK(csv.rfind("dataset,method,relations,edges,h2h,h2t,t2h,t2t\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(slurp(w.path("stderr.txt")).find("# inverses = false") != std::string::npos);
    CHECK(run("stats --train " + w.path("toy/train.txt") + " --methods rdg,bogus") == 1);
}

TEST_CASE("cli: train is reproducible and eval transfers to another graph") {
    const auto& w = workspace();
    const std::string base = "train " + data_args("toy") + kSmall + " --epochs 2 --seed 5";
    REQUIRE(run(base + " --out " + w.path("a.ckpt") + " --log " + w.path("a.csv")) == 0);
    REQUIRE(run(base + " --out " + w.path("b.ckpt") + " --log " + w.path("b.csv")) == 0);
    CHECK(slurp(w.path("a.ckpt")) == slurp(w.path("b.ckpt")));
    CHECK(slurp(w.path("a.csv")) == slurp(w.path("b.csv")));
    CHECK(slurp(w.path("stderr.txt")).find("dim = 8") != std::string::npos);

    CHECK(run("eval --checkpoint " + w.path("a.ckpt") + " " + data_args("other") + " --report-csv " +
              w.path("eval.csv") + " --ranks " + w.path("ranks.tsv")) == 0);
    CHECK(slurp(w.path("eval.csv")).rfind("direction,queries,mrr,h1,h3,h10\n", 0) == 0);
    CHECK(slurp(w.path("ranks.tsv")).find('x') != std::string::npos);

    CHECK(run("finetune --checkpoint " + w.path("a.ckpt") + " " + data_args("other") + " --epochs 1 --out " +
              w.path("ft.ckpt")) == 0);
    CHECK(fs::exists(w.path("ft.ckpt")));

    std::ofstream(w.path("queries.tsv")) << "x0\tr1\nx1\tr3_inv\n";
    CHECK(run("predict --checkpoint " + w.path("a.ckpt") + " --train " + w.path("other/train.txt") + " --queries " +
                  w.path("queries.tsv") + " --top-k 3",
              w.path("pred.tsv")) == 0);
    CHECK(run("perturb --checkpoint " + w.path("a.ckpt") + " --train " + w.path("toy/train.txt") + " --test " +
                  w.path("toy/test.txt") + " --modes top,random --k 1,2 --seeds 2",
              w.path("perturb.csv")) == 0);
    const auto pert = slurp(w.path("perturb.csv"));
    CHECK(pert.rfind("mode,k,seed,mrr,h1,h10\nnone,0,", 0) == 0);
    // none + top x2 + random x2 x2 seeds
    CHECK(std::count(pert.begin(), pert.end(), '\n') == 8);
}

TEST_CASE("cli: exit codes for configuration, data and numeric errors") {
    const auto& w = workspace();
    CHECK(run("train " + data_args("toy") + " --set train.dropout=1.5 --out " + w.path("x.ckpt")) == 1);
    CHECK(run("train " + data_args("toy") + " --set model.width=3 --out " + w.path("x.ckpt")) == 1);
    CHECK(run("train --train " + w.path("missing.txt") + " --out " + w.path("x.ckpt")) == 2);
    std::ofstream(w.path("bad.txt")) << "a\tb\n";
    CHECK(run("build-rdg --train " + w.path("bad.txt")) == 2);
    CHECK(run("train " + data_args("toy") + kSmall + " --epochs 1 --lr 1e300 --set train.weight_decay=0 --out " +
              w.path("x.ckpt")) == 3);
    std::ofstream(w.path("garbage.ckpt")) << "not a checkpoint";
    CHECK(run("eval --checkpoint " + w.path("garbage.ckpt") + " " + data_args("toy")) == 2);
}

TEST_CASE("cli: preprocess subcommands") {
    const auto& w = workspace();
    std::ofstream(w.path("rel.txt")) << "r0\n";
    std::ofstream(w.path("inter.txt")) << "u i1 i2\n";
    std::ofstream(w.path("kg.txt")) << "i1\tr0\ti2\n";
    std::ofstream(w.path("inter_test.txt")) << "v i3\n";
    CHECK(run("preprocess canonicalize --relations " + w.path("rel.txt") + " --train " + w.path("inter.txt") +
              " --kg " + w.path("kg.txt") + " --test " + w.path("inter_test.txt") + " --out " + w.path("canon")) == 0);
    CHECK(slurp(w.path("canon/relations.tsv")) == "r0\t0\npurchase\t1\n");
    CHECK(slurp(w.path("canon/entities.tsv")) == "i1\t0\ni2\t1\ni3\t2\nu\t3\nv\t4\n");

    const std::string pp = "preprocess prune-partition --input " + w.path("toy/train.txt") +
                           " --rho 0.5 --theta 0.7 --alpha 0.8,0.1,0.1 --seed 3 --out ";
    REQUIRE(run(pp + w.path("p1")) == 0);
    REQUIRE(run(pp + w.path("p2")) == 0);
    for (const auto* f : {"train.txt", "valid.txt", "test.txt", "entities.tsv", "relations.tsv", "metadata.jsonl"}) {
        CHECK(slurp(w.path(std::string("p1/") + f)) == slurp(w.path(std::string("p2/") + f)));
    }
    CHECK(run(pp.substr(0, pp.find("--alpha")) + "--alpha 0.5,0.5 --out " + w.path("p3")) == 1);

    CHECK(run("preprocess validate --train " + w.path("p1/train.txt") + " --valid " + w.path("p1/valid.txt") +
                  " --test " + w.path("p1/test.txt"),
              w.path("validate.txt")) == 0);
    const auto report = slurp(w.path("validate.txt"));
    CHECK(report.find("duplicates_train_valid\t0") != std::string::npos);
    CHECK(report.find("duplicates_valid_test\t0") != std::string::npos);
}
