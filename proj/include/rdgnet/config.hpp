#pragma once

#include <iosfwd>
#include <string>

#include "rdgnet/trainer.hpp"

namespace rdgnet {

struct DataConfig {
    std::string dataset;  // resolved under the data root when train/valid/test are not given
    std::string train;
    std::string valid;
    std::string test;
    bool inverses = true;
};

struct RunConfig {
    TrainConfig train;
    DataConfig data;
};

// `section.key = value` assignment; sections are model, train, data.
// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& config, const std::string& section, const std::string& key, const std::string& value);

// Line-oriented `key = value` file with [model], [train], [data] sections.
// '#' and ';' start comments. Settings are applied on top of `base`.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

// Every effective setting, in the same syntax parse_config reads.
void write_config(std::ostream& out, const RunConfig& config);

// Fills empty data paths from `root/dataset/{train,valid,test}.txt`.
void resolve_data_paths(DataConfig& data, const std::string& root);

}  // namespace rdgnet
