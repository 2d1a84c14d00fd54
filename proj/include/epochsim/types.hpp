#pragma once

#include <array>
#include <cstdint>

namespace epochsim {

using Cycle = uint64_t;

// Value tags stand in for data bytes: (core << 48) | per-core op sequence.
// Tag 0 means "never written".
using ValueTag = uint64_t;

inline ValueTag make_tag(uint32_t core, uint64_t seq) {
  return (static_cast<uint64_t>(core) << 48) | (seq & 0xFFFFFFFFFFFFull);
}
inline uint32_t tag_core(ValueTag t) { return static_cast<uint32_t>(t >> 48); }
inline uint64_t tag_seq(ValueTag t) { return t & 0xFFFFFFFFFFFFull; }

inline constexpr int kLineBytes = 64;
inline constexpr int kPageBytes = 256;
inline constexpr int kLinesPerPage = kPageBytes / kLineBytes;  // 4
inline constexpr int kWordsPerLine = kLineBytes / 8;           // 8
inline constexpr int kPagesPerGroup = 64;

// One cache line worth of word tags.
struct LinePayload {
  std::array<ValueTag, kWordsPerLine> word{};
  bool operator==(const LinePayload&) const = default;
};

// One NVM block (= one 256B page).
struct Block {
  std::array<LinePayload, kLinesPerPage> line{};
  bool operator==(const Block&) const = default;
};

// Element ids index into the simulator's flat element table.
using ElementId = uint16_t;
inline constexpr ElementId kNoElement = 0xFFFF;

enum class OpKind : uint8_t { Read, Write };

}  // namespace epochsim
