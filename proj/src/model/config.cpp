#include "lmlt/config.hpp"

#include <charconv>
#include <sstream>

#include "lmlt/error.hpp"

namespace lmlt {

std::string_view to_string(PeMode mode) {
  switch (mode) {
    case PeMode::Lepe: return "lepe";
    case PeMode::Rpe: return "rpe";
    case PeMode::None: return "none";
  }
  return "?";
}

PeMode parse_pe_mode(std::string_view text) {
  if (text == "lepe") return PeMode::Lepe;
  if (text == "rpe") return PeMode::Rpe;
  if (text == "none") return PeMode::None;
  throw ConfigError("unknown positional encoding '" + std::string(text) + "' (lepe|rpe|none)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (channels < 1) fail("channels must be >= 1");
  if (heads < 1) fail("heads must be >= 1");
  if (channels % heads != 0) {
    fail("channels (" + std::to_string(channels) + ") not divisible by heads (" + std::to_string(heads) + ")");
  }
  if (blocks < 0) fail("blocks must be >= 0");
  if (window < 1) fail("window must be >= 1");
  if (ccm_growth < 1) fail("ccm_growth must be >= 1");
  if (scale < 2 || scale > 4) fail("scale must be 2, 3 or 4");
  if (flags.depth < 1 || flags.depth > 3) fail("depth must be 1, 2 or 3");
  if (heads > 16) fail("heads must be <= 16");
}

ModelConfig ModelConfig::preset(std::string_view name, std::int64_t scale) {
  ModelConfig cfg;
  cfg.scale = scale;
  if (name == "tiny") {
    cfg.channels = 36;
    cfg.blocks = 8;
  } else if (name == "small") {
    cfg.channels = 36;
    cfg.blocks = 12;
  } else if (name == "base") {
    cfg.channels = 60;
    cfg.blocks = 8;
  } else if (name == "large") {
    cfg.channels = 84;
    cfg.blocks = 8;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (tiny|small|base|large)");
  }
  cfg.validate();
  return cfg;
}

namespace {

std::string bool_str(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_kv() const {
  return {
      {"aggregation", bool_str(flags.aggregation)},
      {"attn_bias", bool_str(flags.attn_bias)},
      {"blocks", std::to_string(blocks)},
      {"ccm_growth", std::to_string(ccm_growth)},
      {"channels", std::to_string(channels)},
      {"depth", std::to_string(flags.depth)},
      {"gelu", bool_str(flags.gelu)},
      {"heads", std::to_string(heads)},
      {"long_skip", bool_str(long_skip)},
      {"low_to_high", bool_str(flags.low_to_high)},
      {"modulate", bool_str(flags.modulate)},
      {"pe", std::string(to_string(flags.pe))},
      {"pool", flags.pool == PoolMode::Avg ? "avg" : "max"},
      {"pooling", bool_str(flags.pooling)},
      {"scale", std::to_string(scale)},
      {"scale_logits", bool_str(flags.scale_logits)},
      {"upsample", flags.upsample == UpsampleMode::Nearest ? "nearest" : "bilinear"},
      {"window", std::to_string(window)},
  };
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv, ModelConfig cfg) {
  for (const auto& [key, value] : kv) {
    if (key == "channels") cfg.channels = parse_int(key, value);
    else if (key == "blocks") cfg.blocks = parse_int(key, value);
    else if (key == "heads") cfg.heads = parse_int(key, value);
    else if (key == "window") cfg.window = parse_int(key, value);
    else if (key == "ccm_growth") cfg.ccm_growth = parse_int(key, value);
    else if (key == "scale") cfg.scale = parse_int(key, value);
    else if (key == "long_skip") cfg.long_skip = parse_bool(key, value);
    else if (key == "low_to_high") cfg.flags.low_to_high = parse_bool(key, value);
    else if (key == "pooling") cfg.flags.pooling = parse_bool(key, value);
    else if (key == "aggregation" || key == "merge") cfg.flags.aggregation = parse_bool(key, value);
    else if (key == "gelu") cfg.flags.gelu = parse_bool(key, value);
    else if (key == "modulate") cfg.flags.modulate = parse_bool(key, value);
    else if (key == "pe") cfg.flags.pe = parse_pe_mode(value);
    else if (key == "depth") cfg.flags.depth = parse_int(key, value);
    else if (key == "attn_bias") cfg.flags.attn_bias = parse_bool(key, value);
    else if (key == "scale_logits") cfg.flags.scale_logits = parse_bool(key, value);
    else if (key == "pool") {
      if (value == "avg") cfg.flags.pool = PoolMode::Avg;
      else if (value == "max") cfg.flags.pool = PoolMode::Max;
      else throw ConfigError("key 'pool': expected avg|max, got '" + value + "'");
    } else if (key == "upsample") {
      if (value == "nearest") cfg.flags.upsample = UpsampleMode::Nearest;
      else if (value == "bilinear") cfg.flags.upsample = UpsampleMode::Bilinear;
      else throw ConfigError("key 'upsample': expected nearest|bilinear, got '" + value + "'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) { return from_kv(kv, ModelConfig{}); }

std::string ModelConfig::echo() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_kv()) os << k << '=' << v << '\n';
  return os.str();
}

bool operator==(const AblationFlags& a, const AblationFlags& b) {
  return a.low_to_high == b.low_to_high && a.pooling == b.pooling && a.aggregation == b.aggregation &&
         a.gelu == b.gelu && a.modulate == b.modulate && a.pe == b.pe && a.depth == b.depth && a.pool == b.pool &&
         a.upsample == b.upsample && a.attn_bias == b.attn_bias && a.scale_logits == b.scale_logits;
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return a.channels == b.channels && a.blocks == b.blocks && a.heads == b.heads && a.window == b.window &&
         a.ccm_growth == b.ccm_growth && a.scale == b.scale && a.long_skip == b.long_skip && a.flags == b.flags;
}

std::map<std::string, std::string> parse_kv_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

}  // namespace lmlt
