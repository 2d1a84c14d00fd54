#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epochsim/types.hpp"

namespace epochsim {

// Block-buffer write model: the device coalesces writes to the currently
// open block per bank; a block switch costs one block-level write.
class NvmDevice {
 public:
  explicit NvmDevice(uint32_t banks = 1) : open_(banks, kNoBlock) {}

  // Returns true if this call caused a block-level write (switch).
  bool write_block(uint64_t loc);

  uint64_t block_writes = 0;
  uint64_t bytes_written = 0;

 private:
  static constexpr uint64_t kNoBlock = ~0ull;
  std::vector<uint64_t> open_;
};

struct RegBlob {
  uint32_t core = 0;
  uint64_t epoch = 0;
  uint64_t cut_seq = 0;  // last pre-snapshot op index (+1, 0 = none)
  bool operator==(const RegBlob&) const = default;
};

struct LogRecord {
  enum Type : uint32_t { PageMap = 1, Blob = 2, EpochMark = 3 };
  uint32_t type = PageMap;
  uint64_t page = 0;
  uint64_t loc = 0;
  RegBlob blob;
  uint64_t epoch = 0;
  uint64_t checksum = 0;

  uint64_t compute_checksum() const;
  void seal() { checksum = compute_checksum(); }
  bool check() const { return checksum == compute_checksum(); }
};

struct RecoveredState {
  bool ok = false;
  std::string error;
  uint64_t epoch = 0;
  std::map<uint64_t, Block> pages;  // page index -> content
  std::map<uint32_t, RegBlob> blobs;
};

// Persistent NVM image: data blocks at allocated locations, the recovery
// page table at a known location, the atomic commit log, and register
// blobs. Every mutation goes through a journal hook so crash points can
// be replayed at single-step granularity.
class NvmStore {
 public:
  struct JournalOp {
    enum Kind : uint8_t {
      WriteBlock,
      AppendLog,
      SetCommitFlag,
      ApplyMap,
      ApplyBlob,
      SetEpoch,
      ClearLog
    };
    Kind kind;
    Cycle cycle = 0;
    uint64_t a = 0, b = 0;
    Block block{};
    LogRecord rec{};
    RegBlob blob{};
    bool flag = false;
  };

  bool journaling = false;

  // Data-path writes (never touch the recovery table).
  uint64_t alloc_loc() { return next_loc_++; }
  void write_block(Cycle cycle, uint64_t loc, const Block& b);
  const Block* block_at(uint64_t loc) const;
  std::optional<uint64_t> committed_loc(uint64_t page) const;

  // Commit sequence: each call is one atomic persistent step.
  void log_append(Cycle cycle, LogRecord rec);
  void set_commit_flag(Cycle cycle, bool v);
  void apply_map(Cycle cycle, uint64_t page, uint64_t loc);
  void apply_blob(Cycle cycle, const RegBlob& blob);
  void set_epoch(Cycle cycle, uint64_t epoch);
  void clear_log(Cycle cycle);

  RecoveredState recover() const;

  uint64_t committed_epoch() const { return committed_epoch_; }
  const std::vector<JournalOp>& journal() const { return journal_; }

  // Rebuilds the image that would survive a crash after `ops` journal
  // entries have reached the device.
  static NvmStore replay(const std::vector<JournalOp>& ops, size_t count);

  // Fault injection: flip a byte inside the given log record.
  void corrupt_log_record(size_t index);

  // Fixed-width little-endian binary image, versioned header.
  void save(const std::string& path) const;
  static NvmStore load(const std::string& path);
  bool image_equals(const NvmStore& other) const;

 private:
  void apply(const JournalOp& op);
  void record(JournalOp op);

  std::map<uint64_t, Block> blocks_;
  std::map<uint64_t, uint64_t> table_;  // page -> loc (committed)
  std::vector<LogRecord> log_;
  bool commit_flag_ = false;
  uint64_t committed_epoch_ = 0;
  std::map<uint32_t, RegBlob> blobs_;
  uint64_t next_loc_ = 1;
  std::vector<JournalOp> journal_;
};

// 16-page / 64-line access scheduler with scrub-request coalescing.
class AccessScheduler {
 public:
  static constexpr int kEntries = 16;

  enum class ScrubState : uint8_t { None, Requested, DataReceived, NakReceived };

  struct Entry {
    bool used = false;
    uint64_t page = 0;
    std::array<LinePayload, kLinesPerPage> slot{};
    std::array<bool, kLinesPerPage> present{};
    ScrubState scrub = ScrubState::None;
    uint64_t alloc_order = 0;
    bool page_was_speculated = false;  // nak due to earlier speculative persist
  };

  struct EnqueueResult {
    bool accepted = false;
    bool send_scrub_request = false;  // first touch of this page
  };

  // Later lines to the same slot overwrite earlier ones (coalescing).
  EnqueueResult enqueue(uint64_t page, int line_in_page, const LinePayload& data);

  // DRAM scrubber replies: page data fills the absent slots.
  void on_scrub_data(uint64_t page, const Block& data);
  void on_nak(uint64_t page, bool was_speculated);

  // Flushable = not awaiting a scrubber reply. Policy: full entries
  // first, then oldest-allocated.
  Entry* pick_flush(bool drain);
  void release(Entry* e);

  Entry* find(uint64_t page);
  int used_count() const;
  bool empty() const { return used_count() == 0; }
  bool any_awaiting_reply() const;

  uint64_t coalesced_line_writes = 0;  // line arrivals absorbed by an existing slot

 private:
  std::array<Entry, kEntries> entries_{};
  uint64_t alloc_counter_ = 0;
};

}  // namespace epochsim
