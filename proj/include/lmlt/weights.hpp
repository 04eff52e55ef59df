#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lmlt/config.hpp"
#include "lmlt/tensor.hpp"

namespace lmlt {

/// Named parameters, iterated in lexicographic name order, plus free-form
/// string metadata (the model config is stored there under "config.<key>").
template <class T>
class WeightStore {
 public:
  void set(const std::string& name, Tensor<T> tensor);
  /// Throws ConfigError when absent.
  const Tensor<T>& get(const std::string& name) const;
  /// Undefined tensor when absent.
  Tensor<T> find(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }
  std::int64_t numel() const;

  const std::map<std::string, Tensor<T>>& tensors() const { return tensors_; }
  std::map<std::string, std::string>& meta() { return meta_; }
  const std::map<std::string, std::string>& meta() const { return meta_; }

  /// Deep copy converted to another scalar type.
  template <class U>
  WeightStore<U> cast() const {
    WeightStore<U> out;
    for (const auto& [name, t] : tensors_) out.set(name, lmlt::cast<U>(t));
    out.meta() = meta_;
    return out;
  }
  /// Deep copy.
  WeightStore clone() const { return cast<T>(); }

 private:
  std::map<std::string, Tensor<T>> tensors_;
  std::map<std::string, std::string> meta_;
};

using WeightStoreF = WeightStore<float>;
using WeightStoreD = WeightStore<double>;

enum class InitKind { HeNormal, SmallNormal, Ones, Zeros };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init;
  std::int64_t fan_in = 1;
};

/// Every parameter the config implies, in lexicographic name order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg);

/// Conv kernels He-normal (std sqrt(2/fan_in)); attention projections, LePE
/// and RPE N(0, 0.02); LN weight 1; biases 0. One Rng stream consumed in
/// name order.
template <class T>
WeightStore<T> init_weights(const ModelConfig& cfg, std::uint64_t seed);

/// Same layout, every value zero (LN weights included).
template <class T>
WeightStore<T> zero_weights(const ModelConfig& cfg);

/// Writes cfg into meta under "config.<key>".
template <class T>
void attach_config(WeightStore<T>& ws, const ModelConfig& cfg);
/// Reads "config.<key>" metadata; throws ConfigError when absent.
template <class T>
ModelConfig config_from_meta(const WeightStore<T>& ws);

/// File layout: "LMLTW001", u32 LE manifest length, UTF-8 manifest, then f32
/// LE blobs each starting on a 64-byte boundary. Manifest lines:
///   entries=<count>
///   meta <key>=<value>
///   name=<name> dtype=f32 shape=<n>,<c>,<h>,<w> offset=<abs byte offset> bytes=<length>
std::vector<std::uint8_t> serialize_weights(const WeightStoreF& ws);
WeightStoreF deserialize_weights(const std::vector<std::uint8_t>& bytes);

/// Throws IoError when the file cannot be written / read, WeightFileError on
/// format problems.
void save_weights(const WeightStoreF& ws, const std::filesystem::path& path);
WeightStoreF load_weights(const std::filesystem::path& path);

}  // namespace lmlt
