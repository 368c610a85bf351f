#include "rdgnet/checkpoint.hpp"

#include <array>
#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rdgnet/errors.hpp"
#include "rdgnet/io.hpp"

namespace rdgnet {

namespace {

constexpr std::array<char, 5> kMagic{'G', 'O', 'R', 'C', '1'};

template <typename U>
void put(std::ostream& out, U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    std::array<unsigned char, sizeof(U)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(U));
}

template <typename U>
U get(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(U)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(U))) {
        throw DataError(std::string("checkpoint size mismatch: truncated while reading ") + what);
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    U value;
    std::memcpy(&value, bytes.data(), sizeof(U));
    return value;
}

void put_tensor(std::ostream& out, const std::string& name, const TensorView<const float>& t) {
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto s : t.shape) put<std::uint64_t>(out, s);
    for (std::size_t i = 0; i < t.size; ++i) put<float>(out, t.data[i]);
}

void get_tensor(std::istream& in, const std::string& name, const TensorView<float>& t) {
    const auto len = get<std::uint64_t>(in, "tensor name length");
    if (len != name.size()) throw DataError("checkpoint tensor mismatch: expected '" + name + "'");
    std::string got(len, '\0');
    if (!in.read(got.data(), static_cast<std::streamsize>(len))) {
        throw DataError("checkpoint size mismatch: truncated in tensor name");
    }
    if (got != name) throw DataError("checkpoint tensor mismatch: expected '" + name + "', found '" + got + "'");
    const auto rank = get<std::uint32_t>(in, "tensor rank");
    if (rank != t.shape.size()) throw DataError("checkpoint size mismatch: rank of '" + name + "'");
    for (auto s : t.shape) {
        if (get<std::uint64_t>(in, "tensor shape") != s) {
            throw DataError("checkpoint size mismatch: shape of '" + name + "' disagrees with the header");
        }
    }
    for (std::size_t i = 0; i < t.size; ++i) t.data[i] = get<float>(in, name.c_str());
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const auto& dims = ckpt.params.dims;
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.heads));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.relation_layers));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.entity_layers));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dims.relation_act));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dims.entity_act));
    put<std::uint8_t>(out, dims.self_loop ? 1 : 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.epoch));
    put<double>(out, ckpt.best_val_mrr);
    put<std::uint8_t>(out, ckpt.moments ? 1 : 0);
    put<std::uint64_t>(out, ckpt.moments ? static_cast<std::uint64_t>(ckpt.moments->step) : 0);

    const auto params = ckpt.params.tensors();
    const std::size_t count = params.size() * (ckpt.moments ? 3 : 1);
    put<std::uint64_t>(out, count);
    for (const auto& t : params) put_tensor(out, t.name, t);
    if (ckpt.moments) {
        if (!(ckpt.moments->m.dims == dims) || !(ckpt.moments->v.dims == dims)) {
            throw ConfigError("optimizer moments do not match the model dimensions");
        }
        for (const auto& t : ckpt.moments->m.tensors()) put_tensor(out, "adam.m." + t.name, t);
        for (const auto& t : ckpt.moments->v.tensors()) put_tensor(out, "adam.v." + t.name, t);
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    std::array<char, 5> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("not a checkpoint (bad magic)");
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    ModelDims dims;
    dims.dim = static_cast<int>(get<std::uint32_t>(in, "header"));
    dims.heads = static_cast<int>(get<std::uint32_t>(in, "header"));
    dims.relation_layers = static_cast<int>(get<std::uint32_t>(in, "header"));
    dims.entity_layers = static_cast<int>(get<std::uint32_t>(in, "header"));
    const auto ra = get<std::uint8_t>(in, "header");
    const auto ea = get<std::uint8_t>(in, "header");
    const auto loop = get<std::uint8_t>(in, "header");
    if (ra > 2 || ea > 2) throw DataError("checkpoint has an unknown activation tag");
    if (loop > 1) throw DataError("checkpoint has an invalid self-loop flag");
    dims.self_loop = loop != 0;
    dims.relation_act = static_cast<Activation>(ra);
    dims.entity_act = static_cast<Activation>(ea);
    if (dims.dim < 1 || dims.heads < 1 || dims.dim > 1 << 16 || dims.heads > 1 << 10 || dims.relation_layers > 1 << 10 ||
        dims.entity_layers > 1 << 10) {
        throw DataError("checkpoint header has implausible dimensions");
    }

    Checkpoint ckpt;
    ckpt.epoch = static_cast<std::int32_t>(get<std::uint32_t>(in, "metadata"));
    ckpt.best_val_mrr = get<double>(in, "metadata");
    const bool has_moments = get<std::uint8_t>(in, "metadata") != 0;
    const auto step = get<std::uint64_t>(in, "metadata");
    const auto count = get<std::uint64_t>(in, "tensor count");

    ckpt.params = ModelParams<float>::zeros(dims);
    auto params = ckpt.params.tensors();
    if (count != params.size() * (has_moments ? 3 : 1)) {
        throw DataError("checkpoint size mismatch: tensor count disagrees with the header");
    }
    for (auto& t : params) get_tensor(in, t.name, t);
    if (has_moments) {
        auto state = AdamState<float>::zeros(dims);
        state.step = static_cast<std::int64_t>(step);
        for (auto& t : state.m.tensors()) get_tensor(in, "adam.m." + t.name, t);
        for (auto& t : state.v.tensors()) get_tensor(in, "adam.v." + t.name, t);
        ckpt.moments = std::move(state);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint size mismatch: trailing bytes");
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    atomic_write(path, [&](std::ostream& out) { write_checkpoint(out, ckpt); }, true);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

void check_dims(const Checkpoint& ckpt, const ModelDims& expected) {
    const auto& d = ckpt.params.dims;
    if (!(d == expected)) {
        throw ConfigError("checkpoint dimensions (d=" + std::to_string(d.dim) + ", H=" + std::to_string(d.heads) +
                          ", L_r=" + std::to_string(d.relation_layers) + ", L_e=" + std::to_string(d.entity_layers) +
                          ", act=" + activation_tag(d.relation_act) + "/" + activation_tag(d.entity_act) +
                          ", self_loop=" + std::to_string(d.self_loop) + ") do not match the configuration (d=" + std::to_string(expected.dim) +
                          ", H=" + std::to_string(expected.heads) + ", L_r=" + std::to_string(expected.relation_layers) +
                          ", L_e=" + std::to_string(expected.entity_layers) + ", act=" +
                          activation_tag(expected.relation_act) + "/" + activation_tag(expected.entity_act) +
                          ", self_loop=" + std::to_string(expected.self_loop) + ")");
    }
}

}  // namespace rdgnet
