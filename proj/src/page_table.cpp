#include "epochsim/page_table.hpp"

#include <algorithm>
#include <cmath>

namespace epochsim {

namespace {

inline uint32_t level_slice(uint64_t page, int level) {
  return (uint32_t)((page >> (10 * (3 - level))) & 0x3FF);
}

}  // namespace

uint64_t DramPageTable::alloc_node(bool leaf) {
  if (nodes_.size() >= node_budget_)
    throw TableExhausted("page-table node pool exhausted (" +
                         std::to_string(node_budget_) + " nodes)");
  uint64_t addr = next_addr_;
  next_addr_ += kPageBytes;
  Node n;
  n.is_leaf = leaf;
  n.self_addr = addr;
  if (leaf) {
    n.leaves.resize(kTableFanout);
  } else {
    n.child_addr.resize(kTableFanout, 0);
    n.child_valid.resize(kTableFanout, 0);
  }
  nodes_.emplace(addr, std::move(n));
  return addr;
}

DramPageTable::Node* DramPageTable::node_at_mut(uint64_t addr) {
  auto it = nodes_.find(addr);
  return it == nodes_.end() ? nullptr : &it->second;
}

const DramPageTable::Node* DramPageTable::node_at(uint64_t addr) const {
  auto it = nodes_.find(addr);
  return it == nodes_.end() ? nullptr : &it->second;
}

DramPageTable::RecordResult DramPageTable::record_write(uint64_t page) {
  RecordResult r;
  if (root_addr_ == 0) {
    root_addr_ = alloc_node(false);
    r.nodes_allocated++;
  }
  uint64_t addr = root_addr_;
  for (int level = 0; level < 3; level++) {
    Node* n = node_at_mut(addr);
    uint32_t idx = level_slice(page, level);
    if (!n->child_valid[idx]) {
      uint64_t child = alloc_node(level == 2);
      r.nodes_allocated++;
      n = node_at_mut(addr);  // alloc_node may rehash
      n->child_addr[idx] = child;
      n->child_valid[idx] = 1;
    }
    addr = node_at_mut(addr)->child_addr[idx];
  }
  Node* leaf_node = node_at_mut(addr);
  LeafEntry& e = leaf_node->leaves[level_slice(page, 3)];
  if (!e.valid) {
    e.valid = true;
    e.speculated = false;
    e.counter = 0;
    valid_count_++;
    unspeculated_count_++;
    r.first_touch = true;
  } else if (e.speculated) {
    // A write landed on a speculatively persisted page: the earlier
    // persist is now stale and the page needs persisting again.
    e.speculated = false;
    unspeculated_count_++;
  }
  if (e.counter < 3) e.counter++;
  return r;
}

DramPageTable::LeafEntry* DramPageTable::find(uint64_t page) {
  if (root_addr_ == 0) return nullptr;
  uint64_t addr = root_addr_;
  for (int level = 0; level < 3; level++) {
    Node* n = node_at_mut(addr);
    uint32_t idx = level_slice(page, level);
    if (!n->child_valid[idx]) return nullptr;
    addr = n->child_addr[idx];
  }
  return &node_at_mut(addr)->leaves[level_slice(page, 3)];
}

const DramPageTable::LeafEntry* DramPageTable::find(uint64_t page) const {
  return const_cast<DramPageTable*>(this)->find(page);
}

void DramPageTable::invalidate(uint64_t page) {
  LeafEntry* e = find(page);
  if (e && e->valid) {
    if (!e->speculated) unspeculated_count_--;
    e->valid = false;
    e->speculated = false;
    valid_count_--;
  }
}

bool DramPageTable::mark_speculated(uint64_t page) {
  LeafEntry* e = find(page);
  if (!e || !e->valid || e->speculated) return false;
  e->speculated = true;
  unspeculated_count_--;
  return true;
}

void DramPageTable::clear() {
  nodes_.clear();
  root_addr_ = 0;
  valid_count_ = 0;
  unspeculated_count_ = 0;
}

void DramPageTable::for_each_valid(
    const std::function<void(uint64_t, const LeafEntry&)>& fn) const {
  const_cast<DramPageTable*>(this)->for_each_valid_mut(
      [&](uint64_t page, LeafEntry& e) { fn(page, e); });
}

void DramPageTable::for_each_valid_mut(
    const std::function<void(uint64_t, LeafEntry&)>& fn) {
  if (root_addr_ == 0) return;
  Node* root = node_at_mut(root_addr_);
  for (uint32_t i0 = 0; i0 < kTableFanout; i0++) {
    if (!root->child_valid[i0]) continue;
    Node* n1 = node_at_mut(root->child_addr[i0]);
    for (uint32_t i1 = 0; i1 < kTableFanout; i1++) {
      if (!n1->child_valid[i1]) continue;
      Node* n2 = node_at_mut(n1->child_addr[i1]);
      for (uint32_t i2 = 0; i2 < kTableFanout; i2++) {
        if (!n2->child_valid[i2]) continue;
        Node* leaf = node_at_mut(n2->child_addr[i2]);
        for (uint32_t i3 = 0; i3 < kTableFanout; i3++) {
          LeafEntry& e = leaf->leaves[i3];
          if (!e.valid) continue;
          uint64_t page = ((uint64_t)i0 << 30) | ((uint64_t)i1 << 20) |
                          ((uint64_t)i2 << 10) | i3;
          fn(page, e);
        }
      }
    }
  }
}

// --- PageWalker ---

void PageWalker::reset(const DramPageTable* table) {
  table_ = table;
  counter_.fill(0);
  level_base_.fill(0);
  node_cache_.clear();
  total_dram_reads = 0;
  exhausted_ = (table == nullptr || table->root_addr() == 0);
}

bool PageWalker::touch_node(uint64_t addr, uint32_t* reads) {
  auto it = std::find(node_cache_.begin(), node_cache_.end(), addr);
  bool hit = it != node_cache_.end();
  if (hit) {
    node_cache_.erase(it);
  } else {
    (*reads)++;
    total_dram_reads++;
    if (node_cache_.size() >= kNodeCacheEntries)
      node_cache_.erase(node_cache_.begin());
  }
  node_cache_.push_back(addr);
  return hit;
}

PageWalker::StepResult PageWalker::next(bool skip_speculated) {
  StepResult r;
  if (exhausted_ || !table_ || table_->root_addr() == 0) {
    r.done = true;
    return r;
  }
  const DramPageTable::Node* root = table_->node_at(table_->root_addr());
  while (counter_[0] < kTableFanout) {
    if (!root->child_valid[counter_[0]]) {
      counter_[0]++;
      counter_[1] = counter_[2] = counter_[3] = 0;
      continue;
    }
    uint64_t a1 = root->child_addr[counter_[0]];
    if (level_base_[1] != a1) {
      touch_node(a1, &r.dram_reads);
      level_base_[1] = a1;
    }
    const DramPageTable::Node* n1 = table_->node_at(a1);
    if (counter_[1] >= kTableFanout) {
      counter_[0]++;
      counter_[1] = counter_[2] = counter_[3] = 0;
      r.parent_advances++;
      continue;
    }
    if (!n1->child_valid[counter_[1]]) {
      counter_[1]++;
      counter_[2] = counter_[3] = 0;
      continue;
    }
    uint64_t a2 = n1->child_addr[counter_[1]];
    if (level_base_[2] != a2) {
      touch_node(a2, &r.dram_reads);
      level_base_[2] = a2;
    }
    const DramPageTable::Node* n2 = table_->node_at(a2);
    if (counter_[2] >= kTableFanout) {
      counter_[1]++;
      counter_[2] = counter_[3] = 0;
      r.parent_advances++;
      continue;
    }
    if (!n2->child_valid[counter_[2]]) {
      counter_[2]++;
      counter_[3] = 0;
      continue;
    }
    uint64_t a3 = n2->child_addr[counter_[2]];
    if (level_base_[3] != a3) {
      touch_node(a3, &r.dram_reads);
      level_base_[3] = a3;
    }
    const DramPageTable::Node* leaf = table_->node_at(a3);
    if (counter_[3] >= kTableFanout) {
      counter_[2]++;
      counter_[3] = 0;
      r.parent_advances++;
      continue;
    }
    const DramPageTable::LeafEntry& e = leaf->leaves[counter_[3]];
    bool eligible = e.valid && !(skip_speculated && e.speculated);
    if (!eligible) {
      counter_[3]++;
      continue;
    }
    r.page = ((uint64_t)counter_[0] << 30) | ((uint64_t)counter_[1] << 20) |
             ((uint64_t)counter_[2] << 10) | counter_[3];
    counter_[3]++;  // resume past this leaf next time
    return r;
  }
  exhausted_ = true;
  r.done = true;
  return r;
}

// --- LocalityCounters ---

void LocalityCounters::bump_shared(uint64_t group) {
  uint8_t& c = shared_[group];
  if (c < 7) c++;
}

uint8_t LocalityCounters::shared(uint64_t group) const {
  auto it = shared_.find(group);
  return it == shared_.end() ? 0 : it->second;
}

void LocalityCounters::advance_phase() {
  private_phase_ = (private_phase_ + 1) % 2;
  shared_phase_ = (shared_phase_ + 1) % 3;
}

void LocalityCounters::decay_shared() {
  for (auto& [group, c] : shared_) c = clear_bit(c, shared_phase_) & 0x7;
}

void LocalityCounters::clear_shared_bit(uint64_t group) {
  auto it = shared_.find(group);
  if (it != shared_.end()) it->second = clear_bit(it->second, shared_phase_) & 0x7;
}

// --- Tuning ---

RateResult tune_rate(uint64_t budget_n, uint64_t modified_m) {
  if (budget_n == 0) return {0.0, kRateMin, true};
  double delta =
      (double)((int64_t)budget_n - (int64_t)modified_m) / (double)budget_n;
  delta = std::clamp(delta, 0.0, 1.0);
  uint64_t rate =
      kRateMin + (uint64_t)std::llround(delta * (double)(kRateMax - kRateMin));
  return {delta, rate, false};
}

BudgetResult compute_page_budget(double cl_seconds, uint64_t frequency_hz,
                                 uint64_t k_cycles_per_page,
                                 uint64_t cl_min_cycles) {
  double c = cl_seconds * (double)frequency_hz;
  if (k_cycles_per_page == 0) k_cycles_per_page = 1;
  if (c <= (double)cl_min_cycles) return {false, 0};
  uint64_t n = (uint64_t)((c - (double)cl_min_cycles) / (double)k_cycles_per_page);
  return {true, n};
}

}  // namespace epochsim
