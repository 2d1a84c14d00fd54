#include "epochsim/nvm.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace epochsim {

// --- NvmDevice ---

bool NvmDevice::write_block(uint64_t loc) {
  uint32_t bank = (uint32_t)(loc % open_.size());
  bytes_written += kPageBytes;
  if (open_[bank] == loc) return false;
  open_[bank] = loc;
  block_writes++;
  return true;
}

// --- LogRecord ---

uint64_t LogRecord::compute_checksum() const {
  // FNV-1a over the record fields.
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; i++) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  mix(type);
  mix(page);
  mix(loc);
  mix(blob.core);
  mix(blob.epoch);
  mix(blob.cut_seq);
  mix(epoch);
  return h;
}

// --- NvmStore ---

void NvmStore::record(JournalOp op) {
  apply(op);
  if (journaling) journal_.push_back(std::move(op));
}

void NvmStore::apply(const JournalOp& op) {
  switch (op.kind) {
    case JournalOp::WriteBlock: blocks_[op.a] = op.block; break;
    case JournalOp::AppendLog: log_.push_back(op.rec); break;
    case JournalOp::SetCommitFlag: commit_flag_ = op.flag; break;
    case JournalOp::ApplyMap: table_[op.a] = op.b; break;
    case JournalOp::ApplyBlob: blobs_[op.blob.core] = op.blob; break;
    case JournalOp::SetEpoch: committed_epoch_ = op.a; break;
    case JournalOp::ClearLog: log_.clear(); break;
  }
}

void NvmStore::write_block(Cycle cycle, uint64_t loc, const Block& b) {
  JournalOp op;
  op.kind = JournalOp::WriteBlock;
  op.cycle = cycle;
  op.a = loc;
  op.block = b;
  if (loc >= next_loc_) next_loc_ = loc + 1;
  record(std::move(op));
}

const Block* NvmStore::block_at(uint64_t loc) const {
  auto it = blocks_.find(loc);
  return it == blocks_.end() ? nullptr : &it->second;
}

std::optional<uint64_t> NvmStore::committed_loc(uint64_t page) const {
  auto it = table_.find(page);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

void NvmStore::log_append(Cycle cycle, LogRecord rec) {
  JournalOp op;
  op.kind = JournalOp::AppendLog;
  op.cycle = cycle;
  op.rec = rec;
  record(std::move(op));
}

void NvmStore::set_commit_flag(Cycle cycle, bool v) {
  JournalOp op;
  op.kind = JournalOp::SetCommitFlag;
  op.cycle = cycle;
  op.flag = v;
  record(std::move(op));
}

void NvmStore::apply_map(Cycle cycle, uint64_t page, uint64_t loc) {
  JournalOp op;
  op.kind = JournalOp::ApplyMap;
  op.cycle = cycle;
  op.a = page;
  op.b = loc;
  record(std::move(op));
}

void NvmStore::apply_blob(Cycle cycle, const RegBlob& blob) {
  JournalOp op;
  op.kind = JournalOp::ApplyBlob;
  op.cycle = cycle;
  op.blob = blob;
  record(std::move(op));
}

void NvmStore::set_epoch(Cycle cycle, uint64_t epoch) {
  JournalOp op;
  op.kind = JournalOp::SetEpoch;
  op.cycle = cycle;
  op.a = epoch;
  record(std::move(op));
}

void NvmStore::clear_log(Cycle cycle) {
  JournalOp op;
  op.kind = JournalOp::ClearLog;
  op.cycle = cycle;
  record(std::move(op));
}

RecoveredState NvmStore::recover() const {
  RecoveredState r;
  std::map<uint64_t, uint64_t> table = table_;
  std::map<uint32_t, RegBlob> blobs = blobs_;
  uint64_t epoch = committed_epoch_;

  if (commit_flag_) {
    // Redo: a commit was flagged durable; replay the log on top.
    for (const LogRecord& rec : log_) {
      if (!rec.check()) {
        r.error = "corrupt log record detected during redo";
        return r;
      }
      switch (rec.type) {
        case LogRecord::PageMap: table[rec.page] = rec.loc; break;
        case LogRecord::Blob: blobs[rec.blob.core] = rec.blob; break;
        case LogRecord::EpochMark: epoch = rec.epoch; break;
        default: r.error = "unknown log record type"; return r;
      }
    }
  }
  // Without the flag the log is a torn, uncommitted attempt: discard it.

  for (auto& [page, loc] : table) {
    const Block* b = block_at(loc);
    if (!b) {
      r.error = "recovery table references a missing block";
      return r;
    }
    r.pages[page] = *b;
  }
  r.blobs = std::move(blobs);
  r.epoch = epoch;
  r.ok = true;
  return r;
}

NvmStore NvmStore::replay(const std::vector<JournalOp>& ops, size_t count) {
  NvmStore s;
  for (size_t i = 0; i < count && i < ops.size(); i++) s.apply(ops[i]);
  return s;
}

void NvmStore::corrupt_log_record(size_t index) {
  if (index < log_.size()) log_[index].page ^= 0xDEAD;
}

// --- serialization ---

namespace {

constexpr char kMagic[8] = {'E', 'S', 'N', 'V', '0', '0', '0', '1'};

template <typename T>
void put(std::ostream& o, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  o.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("truncated NVM image");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void put_block(std::ostream& o, const Block& b) {
  for (const auto& line : b.line)
    for (ValueTag t : line.word) put<uint64_t>(o, t);
}

Block get_block(std::istream& in) {
  Block b;
  for (auto& line : b.line)
    for (ValueTag& t : line.word) t = get<uint64_t>(in);
  return b;
}

void put_rec(std::ostream& o, const LogRecord& r) {
  put<uint32_t>(o, r.type);
  put<uint64_t>(o, r.page);
  put<uint64_t>(o, r.loc);
  put<uint32_t>(o, r.blob.core);
  put<uint64_t>(o, r.blob.epoch);
  put<uint64_t>(o, r.blob.cut_seq);
  put<uint64_t>(o, r.epoch);
  put<uint64_t>(o, r.checksum);
}

LogRecord get_rec(std::istream& in) {
  LogRecord r;
  r.type = get<uint32_t>(in);
  r.page = get<uint64_t>(in);
  r.loc = get<uint64_t>(in);
  r.blob.core = get<uint32_t>(in);
  r.blob.epoch = get<uint64_t>(in);
  r.blob.cut_seq = get<uint64_t>(in);
  r.epoch = get<uint64_t>(in);
  r.checksum = get<uint64_t>(in);
  return r;
}

}  // namespace

void NvmStore::save(const std::string& path) const {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw std::runtime_error("cannot write NVM image: " + path);
  o.write(kMagic, 8);
  put<uint64_t>(o, blocks_.size());
  for (auto& [loc, b] : blocks_) {
    put<uint64_t>(o, loc);
    put_block(o, b);
  }
  put<uint64_t>(o, table_.size());
  for (auto& [page, loc] : table_) {
    put<uint64_t>(o, page);
    put<uint64_t>(o, loc);
  }
  put<uint64_t>(o, log_.size());
  for (auto& r : log_) put_rec(o, r);
  put<uint8_t>(o, commit_flag_ ? 1 : 0);
  put<uint64_t>(o, committed_epoch_);
  put<uint64_t>(o, blobs_.size());
  for (auto& [core, b] : blobs_) {
    put<uint32_t>(o, core);
    put<uint64_t>(o, b.epoch);
    put<uint64_t>(o, b.cut_seq);
  }
  put<uint64_t>(o, next_loc_);
}

NvmStore NvmStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open NVM image: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("bad NVM image header: " + path);
  NvmStore s;
  uint64_t nb = get<uint64_t>(in);
  for (uint64_t i = 0; i < nb; i++) {
    uint64_t loc = get<uint64_t>(in);
    s.blocks_[loc] = get_block(in);
  }
  uint64_t nt = get<uint64_t>(in);
  for (uint64_t i = 0; i < nt; i++) {
    uint64_t page = get<uint64_t>(in);
    s.table_[page] = get<uint64_t>(in);
  }
  uint64_t nl = get<uint64_t>(in);
  for (uint64_t i = 0; i < nl; i++) s.log_.push_back(get_rec(in));
  s.commit_flag_ = get<uint8_t>(in) != 0;
  s.committed_epoch_ = get<uint64_t>(in);
  uint64_t nr = get<uint64_t>(in);
  for (uint64_t i = 0; i < nr; i++) {
    uint32_t core = get<uint32_t>(in);
    RegBlob b;
    b.core = core;
    b.epoch = get<uint64_t>(in);
    b.cut_seq = get<uint64_t>(in);
    s.blobs_[core] = b;
  }
  s.next_loc_ = get<uint64_t>(in);
  return s;
}

bool NvmStore::image_equals(const NvmStore& other) const {
  return blocks_ == other.blocks_ && table_ == other.table_ &&
         commit_flag_ == other.commit_flag_ &&
         committed_epoch_ == other.committed_epoch_ && blobs_ == other.blobs_;
}

// --- AccessScheduler ---

AccessScheduler::EnqueueResult AccessScheduler::enqueue(
    uint64_t page, int line_in_page, const LinePayload& data) {
  EnqueueResult r;
  Entry* e = find(page);
  if (!e) {
    for (auto& cand : entries_) {
      if (!cand.used) {
        e = &cand;
        break;
      }
    }
    if (!e) return r;  // all 16 pages busy: backpressure
    *e = Entry{};
    e->used = true;
    e->page = page;
    e->alloc_order = alloc_counter_++;
    e->scrub = ScrubState::Requested;
    r.send_scrub_request = true;
  } else if (e->present[line_in_page]) {
    coalesced_line_writes++;
  }
  e->slot[line_in_page] = data;
  e->present[line_in_page] = true;
  r.accepted = true;
  return r;
}

void AccessScheduler::on_scrub_data(uint64_t page, const Block& data) {
  Entry* e = find(page);
  if (!e || e->scrub != ScrubState::Requested) return;
  for (int i = 0; i < kLinesPerPage; i++) {
    if (!e->present[i]) {
      e->slot[i] = data.line[i];
      e->present[i] = true;
    }
  }
  e->scrub = ScrubState::DataReceived;
}

void AccessScheduler::on_nak(uint64_t page, bool was_speculated) {
  Entry* e = find(page);
  if (!e || e->scrub != ScrubState::Requested) return;
  e->scrub = ScrubState::NakReceived;
  e->page_was_speculated = was_speculated;
}

AccessScheduler::Entry* AccessScheduler::find(uint64_t page) {
  for (auto& e : entries_)
    if (e.used && e.page == page) return &e;
  return nullptr;
}

int AccessScheduler::used_count() const {
  int n = 0;
  for (auto& e : entries_)
    if (e.used) n++;
  return n;
}

bool AccessScheduler::any_awaiting_reply() const {
  for (auto& e : entries_)
    if (e.used && e.scrub == ScrubState::Requested) return true;
  return false;
}

AccessScheduler::Entry* AccessScheduler::pick_flush(bool drain) {
  Entry* best = nullptr;
  bool best_full = false;
  for (auto& e : entries_) {
    if (!e.used || e.scrub == ScrubState::Requested) continue;
    bool full = e.present[0] && e.present[1] && e.present[2] && e.present[3];
    bool nak = e.scrub == ScrubState::NakReceived;
    if (!drain && !full && !nak && used_count() < kEntries) continue;
    if (!best || (full && !best_full) ||
        (full == best_full && e.alloc_order < best->alloc_order)) {
      best = &e;
      best_full = full;
    }
  }
  return best;
}

void AccessScheduler::release(Entry* e) { *e = Entry{}; }

}  // namespace epochsim
