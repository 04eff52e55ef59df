#include "lmlt/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lmlt/error.hpp"
#include "lmlt/rng.hpp"

namespace lmlt {

template <class T>
void WeightStore<T>::set(const std::string& name, Tensor<T> tensor) {
  if (name.empty() || name.find_first_of(" \t\n=") != std::string::npos) {
    throw ConfigError("invalid parameter name '" + name + "'");
  }
  tensors_[name] = std::move(tensor);
}

template <class T>
const Tensor<T>& WeightStore<T>::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

template <class T>
Tensor<T> WeightStore<T>::find(const std::string& name) const {
  auto it = tensors_.find(name);
  return it == tensors_.end() ? Tensor<T>{} : it->second;
}

template <class T>
std::int64_t WeightStore<T>::numel() const {
  std::int64_t total = 0;
  for (const auto& [name, t] : tensors_) total += t.numel();
  return total;
}

std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t D = cfg.channels;
  const std::int64_t d = cfg.head_dim();
  const std::int64_t M = cfg.window;
  const std::int64_t G = cfg.ccm_growth * D;
  std::map<std::string, ParamSpec> specs;
  auto add = [&](const std::string& name, Shape shape, InitKind kind, std::int64_t fan_in = 1) {
    specs[name] = ParamSpec{name, shape, kind, fan_in};
  };
  auto conv = [&](const std::string& prefix, std::int64_t out, std::int64_t in, std::int64_t k) {
    add(prefix + ".weight", {out, in, k, k}, InitKind::HeNormal, in * k * k);
    add(prefix + ".bias", {out, 1, 1, 1}, InitKind::Zeros);
  };

  conv("head_conv", D, 3, 3);
  for (std::int64_t b = 0; b < cfg.blocks; ++b) {
    const std::string blk = "block" + std::to_string(b);
    for (const char* ln : {".ln1", ".ln2"}) {
      add(blk + ln + ".weight", {D, 1, 1, 1}, InitKind::Ones);
      add(blk + ln + ".bias", {D, 1, 1, 1}, InitKind::Zeros);
    }
    for (std::int64_t i = 0; i < cfg.heads; ++i) {
      for (std::int64_t l = 0; l < cfg.flags.depth; ++l) {
        const std::string layer = blk + ".lmlt.head" + std::to_string(i) + ".layer" + std::to_string(l);
        for (const char* proj : {".wq", ".wk", ".wv", ".wo"}) {
          add(layer + proj + ".weight", {d, d, 1, 1}, InitKind::SmallNormal);
          if (cfg.flags.attn_bias) add(layer + proj + ".bias", {d, 1, 1, 1}, InitKind::Zeros);
        }
        if (cfg.flags.pe == PeMode::Lepe) {
          add(layer + ".lepe.weight", {d, 1, 3, 3}, InitKind::SmallNormal);
          add(layer + ".lepe.bias", {d, 1, 1, 1}, InitKind::Zeros);
        } else if (cfg.flags.pe == PeMode::Rpe) {
          add(layer + ".rpe.table", {1, 1, 2 * M - 1, 2 * M - 1}, InitKind::SmallNormal);
        }
      }
    }
    if (cfg.flags.aggregation) conv(blk + ".lmlt.merge", D, D, 1);
    conv(blk + ".ccm.conv1", G, D, 3);
    conv(blk + ".ccm.conv2", D, G, 1);
  }
  conv("tail_conv", 3 * cfg.scale * cfg.scale, D, 3);

  std::vector<ParamSpec> out;
  for (auto& [name, spec] : specs) out.push_back(spec);
  return out;
}

template <class T>
WeightStore<T> init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  WeightStore<T> ws;
  Rng rng(seed);
  for (const ParamSpec& p : parameter_layout(cfg)) {
    switch (p.init) {
      case InitKind::HeNormal:
        ws.set(p.name, tensor_new<T>(p.shape, fill::Normal{&rng, 0.0, std::sqrt(2.0 / static_cast<double>(p.fan_in))}));
        break;
      case InitKind::SmallNormal:
        ws.set(p.name, tensor_new<T>(p.shape, fill::Normal{&rng, 0.0, 0.02}));
        break;
      case InitKind::Ones:
        ws.set(p.name, tensor_new<T>(p.shape, fill::Ones{}));
        break;
      case InitKind::Zeros:
        ws.set(p.name, tensor_new<T>(p.shape, fill::Zeros{}));
        break;
    }
  }
  attach_config(ws, cfg);
  return ws;
}

template <class T>
WeightStore<T> zero_weights(const ModelConfig& cfg) {
  WeightStore<T> ws;
  for (const ParamSpec& p : parameter_layout(cfg)) ws.set(p.name, Tensor<T>::zeros(p.shape));
  attach_config(ws, cfg);
  return ws;
}

template <class T>
void attach_config(WeightStore<T>& ws, const ModelConfig& cfg) {
  for (const auto& [k, v] : cfg.to_kv()) ws.meta()["config." + k] = v;
}

template <class T>
ModelConfig config_from_meta(const WeightStore<T>& ws) {
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : ws.meta()) {
    if (k.rfind("config.", 0) == 0) kv[k.substr(7)] = v;
  }
  if (kv.empty()) throw ConfigError("weights carry no config metadata");
  return ModelConfig::from_kv(kv);
}

namespace {

constexpr char kMagic[8] = {'L', 'M', 'L', 'T', 'W', '0', '0', '1'};
constexpr std::size_t kAlign = 64;

std::size_t align_up(std::size_t v) { return (v + kAlign - 1) / kAlign * kAlign; }

std::string build_manifest(const WeightStoreF& ws, std::size_t data_start, std::vector<std::size_t>& offsets) {
  std::ostringstream os;
  os << "entries=" << ws.size() << '\n';
  for (const auto& [k, v] : ws.meta()) {
    if (k.find_first_of(" \n=") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ConfigError("metadata '" + k + "' cannot be serialized");
    }
    os << "meta " << k << '=' << v << '\n';
  }
  offsets.clear();
  std::size_t offset = data_start;
  for (const auto& [name, t] : ws.tensors()) {
    const Shape& s = t.shape();
    const std::size_t bytes = static_cast<std::size_t>(t.numel()) * 4;
    offsets.push_back(offset);
    os << "name=" << name << " dtype=f32 shape=" << s.n << ',' << s.c << ',' << s.h << ',' << s.w
       << " offset=" << offset << " bytes=" << bytes << '\n';
    offset = align_up(offset + bytes);
  }
  return os.str();
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

[[noreturn]] void fail(WeightFileError::Kind kind, const std::string& msg) { throw WeightFileError(kind, msg); }

std::int64_t parse_i64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(WeightFileError::Kind::Malformed, "bad " + what + " '" + text + "'");
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const WeightStoreF& ws) {
  std::vector<std::size_t> offsets;
  std::size_t data_start = 0;
  std::string manifest;
  // Offsets are absolute, so the manifest length and the data start depend on
  // each other; iterate to the fixed point.
  for (;;) {
    manifest = build_manifest(ws, data_start, offsets);
    const std::size_t start = align_up(sizeof kMagic + 4 + manifest.size());
    if (start == data_start) break;
    data_start = start;
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.insert(out.end(), manifest.begin(), manifest.end());
  std::size_t k = 0;
  for (const auto& [name, t] : ws.tensors()) {
    out.resize(offsets[k++], 0);
    for (float v : t.data()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      put_u32(out, bits);
    }
  }
  return out;
}

WeightStoreF deserialize_weights(const std::vector<std::uint8_t>& bytes) {
  using K = WeightFileError::Kind;
  if (bytes.size() < sizeof kMagic) fail(K::Truncated, "file shorter than the magic header");
  if (std::memcmp(bytes.data(), kMagic, 5) != 0) fail(K::BadMagic, "not an LMLT weight file");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(K::VersionMismatch, "unsupported weight file version '" +
                                 std::string(reinterpret_cast<const char*>(bytes.data()) + 5, 3) + "'");
  }
  if (bytes.size() < sizeof kMagic + 4) fail(K::Truncated, "missing manifest length");
  std::uint32_t mlen = 0;
  for (int i = 0; i < 4; ++i) mlen |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
  if (bytes.size() < 12 + static_cast<std::size_t>(mlen)) fail(K::Truncated, "manifest runs past end of file");
  const std::string manifest(reinterpret_cast<const char*>(bytes.data()) + 12, mlen);

  WeightStoreF ws;
  std::istringstream in(manifest);
  std::string line;
  std::int64_t declared = -1;
  std::int64_t seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("entries=", 0) == 0) {
      declared = parse_i64(line.substr(8), "entry count");
      continue;
    }
    if (line.rfind("meta ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(K::Malformed, "meta line without '=': " + line);
      ws.meta()[line.substr(5, eq - 5)] = line.substr(eq + 1);
      continue;
    }
    std::map<std::string, std::string> kv;
    std::istringstream fields(line);
    std::string field;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) fail(K::Malformed, "field without '=': " + field);
      kv[field.substr(0, eq)] = field.substr(eq + 1);
    }
    for (const char* key : {"name", "dtype", "shape", "offset", "bytes"}) {
      if (!kv.count(key)) fail(K::Malformed, std::string("entry missing '") + key + "': " + line);
    }
    if (kv["dtype"] != "f32") fail(K::Malformed, "unsupported dtype '" + kv["dtype"] + "'");
    std::vector<std::int64_t> dims;
    std::istringstream sh(kv["shape"]);
    std::string part;
    while (std::getline(sh, part, ',')) dims.push_back(parse_i64(part, "shape"));
    if (dims.size() != 4) fail(K::Malformed, "shape needs 4 dims: " + kv["shape"]);
    const Shape shape{dims[0], dims[1], dims[2], dims[3]};
    const auto offset = static_cast<std::size_t>(parse_i64(kv["offset"], "offset"));
    const auto length = static_cast<std::size_t>(parse_i64(kv["bytes"], "byte length"));
    if (offset % kAlign != 0) fail(K::Malformed, "blob '" + kv["name"] + "' not 64-byte aligned");
    if (checked_numel(shape) * 4 != length) {
      fail(K::ShapeDisagreement, "'" + kv["name"] + "' shape " + shape.str() + " disagrees with " +
                                     std::to_string(length) + " bytes");
    }
    if (offset < 12 + static_cast<std::size_t>(mlen) || offset + length > bytes.size()) {
      fail(K::Truncated, "blob '" + kv["name"] + "' runs past end of file");
    }
    std::vector<float> data(length / 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes[offset + 4 * i + b]) << (8 * b);
      data[i] = std::bit_cast<float>(v);
    }
    if (ws.contains(kv["name"])) fail(K::Malformed, "duplicate entry '" + kv["name"] + "'");
    ws.set(kv["name"], TensorF(shape, std::move(data)));
    ++seen;
  }
  if (declared < 0) fail(K::Malformed, "manifest lacks an entry count");
  if (declared != seen) {
    fail(K::Truncated, "manifest declares " + std::to_string(declared) + " entries, found " + std::to_string(seen));
  }
  return ws;
}

void save_weights(const WeightStoreF& ws, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(ws);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

WeightStoreF load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes);
}

template class WeightStore<float>;
template class WeightStore<double>;
template WeightStore<float> init_weights<float>(const ModelConfig&, std::uint64_t);
template WeightStore<double> init_weights<double>(const ModelConfig&, std::uint64_t);
template WeightStore<float> zero_weights<float>(const ModelConfig&);
template WeightStore<double> zero_weights<double>(const ModelConfig&);
template void attach_config<float>(WeightStore<float>&, const ModelConfig&);
template void attach_config<double>(WeightStore<double>&, const ModelConfig&);
template ModelConfig config_from_meta<float>(const WeightStore<float>&);
template ModelConfig config_from_meta<double>(const WeightStore<double>&);

}  // namespace lmlt
