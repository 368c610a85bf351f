#include "rdgnet/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rdgnet/errors.hpp"

namespace rdgnet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    }
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& section, const std::string& key, const std::string& value) {
    auto& t = config.train;
    auto& m = t.dims;
    const std::string full = section + "." + key;
    if (section == "model") {
        if (key == "dim" || key == "hidden") m.dim = static_cast<int>(to_int(full, value));
        else if (key == "heads") m.heads = static_cast<int>(to_int(full, value));
        else if (key == "relation_layers") m.relation_layers = static_cast<int>(to_int(full, value));
        else if (key == "entity_layers") m.entity_layers = static_cast<int>(to_int(full, value));
        else if (key == "relation_act") m.relation_act = parse_activation(value);
        else if (key == "entity_act") m.entity_act = parse_activation(value);
        else if (key == "act") m.relation_act = m.entity_act = parse_activation(value);
        else if (key == "self_loop") m.self_loop = to_bool(full, value);
        else throw ConfigError("unknown setting '" + full + "'");
    } else if (section == "train") {
        if (key == "learning_rate" || key == "lr") t.learning_rate = to_double(full, value);
        else if (key == "weight_decay") t.weight_decay = to_double(full, value);
        else if (key == "l2") t.l2 = to_double(full, value);
        else if (key == "lr_decay") t.lr_decay = to_double(full, value);
        else if (key == "negatives") t.negatives = static_cast<int>(to_int(full, value));
        else if (key == "batch_size") t.batch_size = static_cast<int>(to_int(full, value));
        else if (key == "max_epochs" || key == "epochs") t.max_epochs = static_cast<int>(to_int(full, value));
        else if (key == "patience") t.patience = static_cast<int>(to_int(full, value));
        else if (key == "freeze_policy") t.freeze = parse_freeze_policy(value);
        else if (key == "seed") t.seed = static_cast<std::uint64_t>(to_int(full, value));
        else if (key == "dropout") t.dropout = to_double(full, value);
        else if (key == "threads") t.threads = static_cast<int>(to_int(full, value));
        else if (key == "mask_query_edges") t.mask_query_edges = to_bool(full, value);
        else if (key == "max_valid_queries") t.max_valid_queries = static_cast<std::size_t>(to_int(full, value));
        else throw ConfigError("unknown setting '" + full + "'");
    } else if (section == "data") {
        if (key == "dataset") config.data.dataset = value;
        else if (key == "train") config.data.train = value;
        else if (key == "valid") config.data.valid = value;
        else if (key == "test") config.data.test = value;
        else if (key == "inverses") config.data.inverses = to_bool(full, value);
        else throw ConfigError("unknown setting '" + full + "'");
    } else {
        throw ConfigError("unknown section '" + section + "'");
    }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
    std::string line, section;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.resize(cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config line " + std::to_string(no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected key = value");
        if (section.empty()) throw ConfigError("config line " + std::to_string(no) + ": setting outside a section");
        apply_setting(base, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const RunConfig& c) {
    const auto& t = c.train;
    const auto& m = t.dims;
    out << "[model]\n"
        << "dim = " << m.dim << '\n'
        << "heads = " << m.heads << '\n'
        << "relation_layers = " << m.relation_layers << '\n'
        << "entity_layers = " << m.entity_layers << '\n'
        << "relation_act = " << activation_tag(m.relation_act) << '\n'
        << "entity_act = " << activation_tag(m.entity_act) << '\n'
        << "self_loop = " << (m.self_loop ? "true" : "false") << '\n'
        << "[train]\n"
        << "learning_rate = " << num(t.learning_rate) << '\n'
        << "weight_decay = " << num(t.weight_decay) << '\n'
        << "l2 = " << num(t.l2) << '\n'
        << "lr_decay = " << num(t.lr_decay) << '\n'
        << "negatives = " << t.negatives << '\n'
        << "batch_size = " << t.batch_size << '\n'
        << "max_epochs = " << t.max_epochs << '\n'
        << "patience = " << t.patience << '\n'
        << "freeze_policy = " << freeze_policy_name(t.freeze) << '\n'
        << "seed = " << t.seed << '\n'
        << "dropout = " << num(t.dropout) << '\n'
        << "threads = " << t.threads << '\n'
        << "mask_query_edges = " << (t.mask_query_edges ? "true" : "false") << '\n'
        << "max_valid_queries = " << t.max_valid_queries << '\n'
        << "[data]\n"
        << "dataset = " << c.data.dataset << '\n'
        << "train = " << c.data.train << '\n'
        << "valid = " << c.data.valid << '\n'
        << "test = " << c.data.test << '\n'
        << "inverses = " << (c.data.inverses ? "true" : "false") << '\n';
}

void resolve_data_paths(DataConfig& data, const std::string& root) {
    if (data.dataset.empty()) return;
    namespace fs = std::filesystem;
    const fs::path dir = root.empty() ? fs::path(data.dataset) : fs::path(root) / data.dataset;
    if (data.train.empty()) data.train = (dir / "train.txt").string();
    if (data.valid.empty()) data.valid = (dir / "valid.txt").string();
    if (data.test.empty()) data.test = (dir / "test.txt").string();
}

}  // namespace rdgnet
