#pragma once

#include <cstdint>
#include <vector>

#include "epochsim/types.hpp"

namespace epochsim {

struct CacheLine {
  bool valid = false;
  bool dirty = false;
  bool exclusive = false;
  uint8_t parity = 0;  // snapshot sense of the dirty data
  uint64_t line_id = 0;
  LinePayload data{};
  uint64_t version = 0;  // global write stamp of the newest word
  uint64_t lru = 0;
};

// Plain set-associative array, true-LRU. Indexing is line_id % sets.
class CacheArray {
 public:
  CacheArray(uint32_t sets, uint32_t ways)
      : sets_(sets), ways_(ways), lines_(sets * ways) {}

  uint32_t sets() const { return sets_; }
  uint32_t ways() const { return ways_; }

  CacheLine* find(uint64_t line_id) {
    CacheLine* base = &lines_[(line_id % sets_) * ways_];
    for (uint32_t w = 0; w < ways_; w++)
      if (base[w].valid && base[w].line_id == line_id) return &base[w];
    return nullptr;
  }
  const CacheLine* find(uint64_t line_id) const {
    return const_cast<CacheArray*>(this)->find(line_id);
  }

  // LRU way of the line's set; invalid ways win outright.
  CacheLine* victim_for(uint64_t line_id) {
    CacheLine* base = &lines_[(line_id % sets_) * ways_];
    CacheLine* v = &base[0];
    for (uint32_t w = 1; w < ways_; w++) {
      if (!base[w].valid) {
        if (v->valid || base[w].lru < v->lru) v = &base[w];
      } else if (v->valid && base[w].lru < v->lru) {
        v = &base[w];
      }
    }
    return v;
  }

  void touch(CacheLine* l) { l->lru = ++tick_; }

  CacheLine& at(uint32_t set, uint32_t way) { return lines_[set * ways_ + way]; }
  const CacheLine& at(uint32_t set, uint32_t way) const {
    return lines_[set * ways_ + way];
  }
  size_t size() const { return lines_.size(); }
  CacheLine& slot(size_t i) { return lines_[i]; }
  const CacheLine& slot(size_t i) const { return lines_[i]; }

  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto& l : lines_)
      if (l.valid) fn(l);
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& l : lines_)
      if (l.valid) fn(l);
  }

 private:
  uint32_t sets_, ways_;
  std::vector<CacheLine> lines_;
  uint64_t tick_ = 0;
};

}  // namespace epochsim
