// SPDX-License-Identifier: Apache-2.0
//
// Parameter file layout (all integers little-endian):
//   "UMRIW\0"            6 bytes
//   version              u16
//   architecture key     u16 length + bytes, then u64 FNV-1a of the key
//   tensors until EOF    u16 name length, name, u8 rank, u32 extents, f32 data
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "umri/decoder.hpp"

namespace umri {
namespace {

constexpr char kMagic[6] = {'U', 'M', 'R', 'I', 'W', '\0'};
constexpr std::uint16_t kVersion = 1;

void write_tensor(std::ostream& os, const std::string& name, const Tensor<float>& t) {
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape()) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e));
  for (float v : t.data()) detail::put_f32(os, v);
}

std::map<std::string, std::string> key_fields(const std::string& key) {
  std::map<std::string, std::string> out;
  std::istringstream is(key);
  std::string item;
  while (std::getline(is, item, ';')) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::string describe_mismatch(const std::string& saved, const std::string& wanted) {
  const auto a = key_fields(saved), b = key_fields(wanted);
  std::ostringstream os;
  os << "decoder config mismatch:";
  for (const auto& [k, v] : b) {
    auto it = a.find(k);
    const std::string sv = it == a.end() ? "<absent>" : it->second;
    if (sv != v) os << " " << k << " saved=" << sv << " requested=" << v << ";";
  }
  for (const auto& [k, v] : a) {
    if (!b.count(k)) os << " " << k << " saved=" << v << " requested=<absent>;";
  }
  return os.str();
}

}  // namespace

void save_params(const DecoderState<float>& state, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  detail::put_le<std::uint16_t>(os, kVersion);
  const std::string key = state.config.architecture_key();
  detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(key.size()));
  os.write(key.data(), static_cast<std::streamsize>(key.size()));
  detail::put_le<std::uint64_t>(os, detail::fnv1a(key));
  write_tensor(os, "z", state.z);
  for (const auto& e : state.params) write_tensor(os, e.name, e.tensor);
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

DecoderState<float> load_params(const DecoderConfig& config, const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p);
  char magic[6];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(p + ": not a decoder parameter file (bad magic)");
  }
  const auto version = detail::get_le<std::uint16_t>(is, p);
  if (version != kVersion) throw FormatError(p + ": unsupported parameter file version " + std::to_string(version));
  const auto key_len = detail::get_le<std::uint16_t>(is, p);
  std::string key(key_len, '\0');
  if (!is.read(key.data(), key_len)) throw FormatError(p + ": truncated file");
  if (detail::get_le<std::uint64_t>(is, p) != detail::fnv1a(key)) throw FormatError(p + ": corrupted config digest");
  if (key != config.architecture_key()) throw ConfigMismatch(describe_mismatch(key, config.architecture_key()));

  DecoderState<float> state = init_decoder<float>(config);
  std::size_t loaded = 0;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto name_len = detail::get_le<std::uint16_t>(is, p);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw FormatError(p + ": truncated file");
    const auto rank = detail::get_le<std::uint8_t>(is, p);
    Shape shape(rank);
    for (auto& e : shape) e = detail::get_le<std::uint32_t>(is, p);
    Tensor<float>* dst = name == "z" ? &state.z : state.params.find(name);
    if (dst == nullptr) throw FormatError(p + ": unexpected tensor '" + name + "'");
    if (dst->shape() != shape) {
      throw ConfigMismatch(p + ": tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                           shape_string(dst->shape()));
    }
    for (auto& v : dst->data()) v = detail::get_f32(is, p);
    ++loaded;
  }
  if (loaded != state.params.size() + 1) throw FormatError(p + ": missing tensors");
  return state;
}

}  // namespace umri
