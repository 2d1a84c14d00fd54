#pragma once

#include <array>
#include <cstdint>

namespace epochsim {

// 48-bit physical address. The low 8 bits are a byte offset inside a
// 256-byte page; the remaining 40 bits select the page and split into
// four 10-bit radix indices for the page table.
struct PhysicalAddress {
  uint64_t raw = 0;

  static constexpr uint64_t kMax = (1ull << 48) - 1;

  uint64_t offset() const { return raw & 0xFF; }
  uint64_t page_index() const { return raw >> 8; }
  uint64_t line_in_page() const { return offset() / 64; }
  uint64_t group_index() const { return page_index() / 64; }
  uint64_t line_id() const { return raw >> 6; }
  uint64_t word_in_line() const { return (raw >> 3) & 7; }

  // level_index(0) is the root-level slice (most significant 10 bits).
  uint64_t level_index(int level) const {
    return (page_index() >> (10 * (3 - level))) & 0x3FF;
  }
  std::array<uint64_t, 4> level_indices() const {
    return {level_index(0), level_index(1), level_index(2), level_index(3)};
  }
};

struct AddressParts {
  uint64_t page_index;
  uint64_t offset;
  uint64_t line_in_page;
  uint64_t group_index;
  std::array<uint64_t, 4> level_indices;
};

inline AddressParts decompose(PhysicalAddress a) {
  return {a.page_index(), a.offset(), a.line_in_page(), a.group_index(),
          a.level_indices()};
}

inline PhysicalAddress compose(const AddressParts& p) {
  uint64_t page = 0;
  for (int i = 0; i < 4; i++) page = (page << 10) | (p.level_indices[i] & 0x3FF);
  return PhysicalAddress{(page << 8) | (p.offset & 0xFF)};
}

inline uint64_t page_of_line(uint64_t line_id) { return line_id >> 2; }
inline uint64_t group_of_page(uint64_t page) { return page >> 6; }

}  // namespace epochsim
