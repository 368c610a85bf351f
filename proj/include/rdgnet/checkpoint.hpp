#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "rdgnet/model.hpp"
#include "rdgnet/optimizer.hpp"

namespace rdgnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout (little-endian):
//   "GORC1", u32 version, u32 d, u32 H, u32 L_r, u32 L_e, u8 relation act, u8 entity act, u8 self loop,
//   u32 epoch, f64 best validation MRR, u8 has moments, u64 optimizer step, u64 tensor count,
//   then per tensor: u64 name length, name, u32 rank, u64 dims[rank], f32 data.
// Moment tensors follow the parameters, named "adam.m.<name>" and "adam.v.<name>".
struct Checkpoint {
    ModelParams<float> params;
    std::optional<AdamState<float>> moments;
    std::int32_t epoch = 0;
    double best_val_mrr = 0.0;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws DataError on bad magic, unsupported version, or a payload that does not match the header.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Throws ConfigError if the checkpoint was built with different dimensions.
void check_dims(const Checkpoint& ckpt, const ModelDims& expected);

}  // namespace rdgnet
