#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lmlt {

struct LayerCount {
  std::string layer;
  std::int64_t macs = 0;
  std::int64_t acts = 0;
};

/// Per-invocation MAC / activation accumulator keyed by layer name. Rows keep
/// first-seen order; repeated names accumulate into one row.
class MacCounter {
 public:
  void add(std::string_view layer, std::int64_t macs, std::int64_t acts);
  const std::vector<LayerCount>& rows() const { return rows_; }
  const LayerCount* find(std::string_view layer) const;
  std::int64_t total_macs() const;
  std::int64_t total_acts() const;
  void clear();

 private:
  std::vector<LayerCount> rows_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Optional instrumentation handle passed to counted ops.
struct Probe {
  MacCounter* counter = nullptr;
  std::string layer;

  void add(std::int64_t macs, std::int64_t acts) const {
    if (counter) counter->add(layer, macs, acts);
  }
  /// Probe for a sub-layer: same counter, name "<layer>.<suffix>".
  Probe sub(std::string_view suffix) const {
    if (!counter) return {};
    return Probe{counter, layer.empty() ? std::string(suffix) : layer + "." + std::string(suffix)};
  }
  explicit operator bool() const { return counter != nullptr; }
};

}  // namespace lmlt
