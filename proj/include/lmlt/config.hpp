#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "lmlt/nn.hpp"

namespace lmlt {

enum class PeMode { Lepe, Rpe, None };

std::string_view to_string(PeMode mode);
PeMode parse_pe_mode(std::string_view text);

struct AblationFlags {
  bool low_to_high = true;
  bool pooling = true;
  /// 1x1 merge conv after concatenating heads (also the "merge" switch).
  bool aggregation = true;
  bool gelu = true;
  bool modulate = true;
  PeMode pe = PeMode::Lepe;
  std::int64_t depth = 1;
  PoolMode pool = PoolMode::Avg;
  UpsampleMode upsample = UpsampleMode::Nearest;
  bool attn_bias = true;
  bool scale_logits = true;
};

struct ModelConfig {
  std::int64_t channels = 36;
  std::int64_t blocks = 8;
  std::int64_t heads = 4;
  std::int64_t window = 8;
  std::int64_t ccm_growth = 2;
  std::int64_t scale = 2;
  bool long_skip = true;
  AblationFlags flags;

  /// Throws ConfigError.
  void validate() const;
  std::int64_t head_dim() const { return channels / heads; }
  /// Pooling levels below the top head (heads - 1, or 0 without pooling).
  std::int64_t pool_levels() const { return flags.pooling ? heads - 1 : 0; }
  /// Inputs are padded to a multiple of this at model entry.
  std::int64_t grid_multiple() const { return window << (heads - 1); }

  /// tiny | small | base | large
  static ModelConfig preset(std::string_view name, std::int64_t scale = 2);

  std::map<std::string, std::string> to_kv() const;
  /// Applies recognized keys onto `base`; throws ConfigError on unknown keys
  /// or malformed values.
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv, ModelConfig base);
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);
  /// One "key=value" per line, keys sorted.
  std::string echo() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&);
};

bool operator==(const AblationFlags&, const AblationFlags&);

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> parse_kv_text(std::string_view text);

}  // namespace lmlt
