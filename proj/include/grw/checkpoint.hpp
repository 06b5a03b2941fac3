#pragma once

// Checkpoint file layout (all integers and floats little-endian):
//
//   magic      8 bytes  "GRWCKPT\0"
//   version    u32      1
//   kind       u32      1 = extractor, 2 = rewriter
//   config     u64 x 9  vocab_size d_model heads encoder_layers extractor_layers
//                       decoder_layers d_ff max_positions max_groups
//              f64      dropout
//              u8       use_group_tags
//   count      u32      number of parameter blocks
//   block      u32 name length, name bytes, u32 rank, u64 x rank dims,
//              f32 x numel values
//
// Blocks appear in parameter registration order.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include "grw/error.hpp"
#include "grw/transformer.hpp"

namespace grw {

enum class ModelKind : std::uint32_t { extractor = 1, rewriter = 2 };

namespace ckpt {

inline constexpr std::array<char, 8> magic = {'G', 'R', 'W', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t version = 1;

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw CheckpointError("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline void put_config(std::ostream& out, const ModelConfig& c) {
  for (std::uint64_t v : {c.vocab_size, c.d_model, c.heads, c.encoder_layers, c.extractor_layers,
                          c.decoder_layers, c.d_ff, c.max_positions, c.max_groups})
    put<std::uint64_t>(out, v);
  put<double>(out, c.dropout);
  put<std::uint8_t>(out, c.use_group_tags ? 1 : 0);
}

inline ModelConfig get_config(std::istream& in) {
  ModelConfig c;
  for (std::size_t* f : {&c.vocab_size, &c.d_model, &c.heads, &c.encoder_layers,
                         &c.extractor_layers, &c.decoder_layers, &c.d_ff, &c.max_positions,
                         &c.max_groups})
    *f = static_cast<std::size_t>(get<std::uint64_t>(in));
  c.dropout = get<double>(in);
  c.use_group_tags = get<std::uint8_t>(in) != 0;
  return c;
}

struct Header {
  ModelKind kind;
  ModelConfig config;
};

inline Header read_header(std::istream& in) {
  std::array<char, 8> m;
  if (!in.read(m.data(), m.size()) || m != magic) throw CheckpointError("not a checkpoint file");
  if (get<std::uint32_t>(in) != version) throw CheckpointError("unsupported checkpoint version");
  const auto kind = get<std::uint32_t>(in);
  if (kind != 1 && kind != 2) throw CheckpointError("unknown model kind in checkpoint");
  return {static_cast<ModelKind>(kind), get_config(in)};
}

template <class Real>
void write_params(std::ostream& out, const ParameterSet<Real>& params) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.items().size()));
  for (const auto& p : params.items()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) put<std::uint64_t>(out, d);
    for (Real v : p.tensor.values()) put<float>(out, static_cast<float>(v));
  }
}

template <class Real>
void read_params(std::istream& in, ParameterSet<Real>& params) {
  const auto count = get<std::uint32_t>(in);
  if (count != params.items().size())
    throw CheckpointError("checkpoint has " + std::to_string(count) + " parameters, model expects " +
                          std::to_string(params.items().size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size())))
      throw CheckpointError("checkpoint truncated");
    auto& p = params.at(name);
    ad::Shape shape(get<std::uint32_t>(in));
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(in));
    if (shape != p.tensor.shape())
      throw CheckpointError("parameter " + name + " has shape " + ad::to_string(shape) +
                            ", model expects " + ad::to_string(p.tensor.shape()));
    for (Real& v : p.tensor.mutable_values()) v = static_cast<Real>(get<float>(in));
  }
}

template <class Model>
constexpr ModelKind kind_of() {
  if constexpr (requires(const Model& m) { m.group_tag_table(); })
    return ModelKind::rewriter;
  else
    return ModelKind::extractor;
}

}  // namespace ckpt

template <class Model>
void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(ckpt::magic.data(), ckpt::magic.size());
  ckpt::put<std::uint32_t>(out, ckpt::version);
  ckpt::put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt::kind_of<Model>()));
  ckpt::put_config(out, model.config());
  ckpt::write_params(out, model.parameters());
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

inline ckpt::Header read_checkpoint_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  return ckpt::read_header(in);
}

template <class Model>
Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  const auto header = ckpt::read_header(in);
  if (header.kind != ckpt::kind_of<Model>())
    throw CheckpointError(path + " holds a different model kind");
  Model model(header.config);
  ckpt::read_params(in, model.parameters());
  return model;
}

}  // namespace grw
