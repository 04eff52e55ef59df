#include "lmlt/instrument.hpp"

namespace lmlt {

void MacCounter::add(std::string_view layer, std::int64_t macs, std::int64_t acts) {
  auto it = index_.find(layer);
  if (it == index_.end()) {
    it = index_.emplace(std::string(layer), rows_.size()).first;
    rows_.push_back(LayerCount{std::string(layer), 0, 0});
  }
  rows_[it->second].macs += macs;
  rows_[it->second].acts += acts;
}

const LayerCount* MacCounter::find(std::string_view layer) const {
  auto it = index_.find(layer);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

std::int64_t MacCounter::total_macs() const {
  std::int64_t total = 0;
  for (const auto& r : rows_) total += r.macs;
  return total;
}

std::int64_t MacCounter::total_acts() const {
  std::int64_t total = 0;
  for (const auto& r : rows_) total += r.acts;
  return total;
}

void MacCounter::clear() {
  rows_.clear();
  index_.clear();
}

}  // namespace lmlt
