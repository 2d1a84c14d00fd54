#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "epochsim/address.hpp"
#include "epochsim/types.hpp"

namespace epochsim {

inline constexpr uint32_t kTableFanout = 1024;  // 10 index bits per level
inline constexpr uint64_t kRateMin = 512;
inline constexpr uint64_t kRateMax = 262144;

// Per-epoch modified-page tracking: a 4-level radix tree over 40-bit page
// indices. Non-leaf entries hold a child table-page address and a valid
// bit; leaf entries hold a valid bit, a 2-bit private counter and the
// speculated flag.
class DramPageTable {
 public:
  struct LeafEntry {
    bool valid = false;
    bool speculated = false;
    uint8_t counter = 0;  // 2-bit saturating
  };

  struct RecordResult {
    bool first_touch = false;
    uint32_t nodes_allocated = 0;
  };

  explicit DramPageTable(uint64_t node_budget = 1u << 20)
      : node_budget_(node_budget) {}

  // Sets the leaf valid bit, allocating tree nodes along the path, and
  // saturating-increments the private counter.
  RecordResult record_write(uint64_t page);

  LeafEntry* find(uint64_t page);
  const LeafEntry* find(uint64_t page) const;
  bool contains(uint64_t page) const {
    const LeafEntry* e = find(page);
    return e && e->valid;
  }

  // Clears the valid bit (page persisted / moved out of this epoch).
  void invalidate(uint64_t page);

  // Flags a valid page as speculatively persisted. Returns false if the
  // page is absent or already flagged.
  bool mark_speculated(uint64_t page);

  void clear();

  uint64_t valid_count() const { return valid_count_; }
  uint64_t unspeculated_count() const { return unspeculated_count_; }
  uint64_t node_count() const { return nodes_.size(); }

  // In-order visit of valid leaves. fn(page, entry).
  void for_each_valid(
      const std::function<void(uint64_t, const LeafEntry&)>& fn) const;
  void for_each_valid_mut(const std::function<void(uint64_t, LeafEntry&)>& fn);

  // Walker internals need node-level access.
  struct Node {
    bool is_leaf = false;
    uint64_t self_addr = 0;  // simulated DRAM address of this table page
    std::vector<uint64_t> child_addr;  // non-leaf: kTableFanout entries
    std::vector<uint8_t> child_valid;
    std::vector<LeafEntry> leaves;  // leaf: kTableFanout entries
  };
  const Node* node_at(uint64_t addr) const;
  uint64_t root_addr() const { return root_addr_; }
  bool empty() const { return valid_count_ == 0; }

 private:
  Node* node_at_mut(uint64_t addr);
  uint64_t alloc_node(bool leaf);

  std::unordered_map<uint64_t, Node> nodes_;  // keyed by simulated address
  uint64_t root_addr_ = 0;                    // 0 = no root yet
  uint64_t next_addr_ = 0x800000000000ull;    // synthetic table-page addresses
  uint64_t node_budget_;
  uint64_t valid_count_ = 0;
  uint64_t unspeculated_count_ = 0;

  friend class PageWalker;
};

struct TableExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hierarchical per-level counter that walks a DramPageTable in order,
// with a small cache of recently read table pages (12 entries = 3 KB of
// 256 B table pages).
class PageWalker {
 public:
  static constexpr size_t kNodeCacheEntries = 12;

  void reset(const DramPageTable* table);

  struct StepResult {
    bool done = false;            // no more valid leaves
    uint64_t page = 0;            // next valid page (when !done)
    uint32_t dram_reads = 0;      // table-page fetches that missed the cache
    uint32_t parent_advances = 0;
  };

  // Advances to the next valid, unspeculated leaf. Leaves already
  // speculatively persisted are skipped (they carry no walk work).
  StepResult next(bool skip_speculated = true);

  uint64_t total_dram_reads = 0;

 private:
  bool touch_node(uint64_t addr, uint32_t* reads);

  const DramPageTable* table_ = nullptr;
  std::array<uint32_t, 4> counter_{};      // per-level 10-bit counters
  std::array<uint64_t, 4> level_base_{};   // cached node address per level
  std::vector<uint64_t> node_cache_;       // LRU, most recent at back
  bool exhausted_ = true;
};

// Shared 3-bit saturating counters, one per 64-page group, plus the
// cyclic-clear phase state.
class LocalityCounters {
 public:
  void bump_shared(uint64_t group);
  uint8_t shared(uint64_t group) const;

  // One predictor activation worth of decay: clears one private bit and
  // one shared bit on everything touched, alternating bit positions.
  int private_phase() const { return private_phase_; }
  int shared_phase() const { return shared_phase_; }
  void advance_phase();

  static uint8_t clear_bit(uint8_t value, int bit) {
    return value & ~(uint8_t(1) << bit);
  }

  void clear_private_bit(DramPageTable::LeafEntry& e) const {
    e.counter = clear_bit(e.counter, private_phase_) & 0x3;
  }
  void clear_shared_bit(uint64_t group);
  void decay_shared();  // clears the current phase bit on every group

  void reset() {
    shared_.clear();
    private_phase_ = 0;
    shared_phase_ = 0;
  }

 private:
  std::unordered_map<uint64_t, uint8_t> shared_;
  int private_phase_ = 0;  // alternates 0,1
  int shared_phase_ = 0;   // cycles 0,1,2
};

// delta = clamp((n - m)/n, 0, 1); R varies linearly between the bounds.
// n == 0 pins R to the minimum (maximally aggressive).
struct RateResult {
  double delta;
  uint64_t rate;
  bool budget_zero;
};
RateResult tune_rate(uint64_t budget_n, uint64_t modified_m);

// Page budget: c = CL * f minus the measured cache-scrub floor, divided
// by k (cycles per page persist).
struct BudgetResult {
  bool feasible;
  uint64_t n;
};
BudgetResult compute_page_budget(double cl_seconds, uint64_t frequency_hz,
                                 uint64_t k_cycles_per_page,
                                 uint64_t cl_min_cycles);

}  // namespace epochsim
