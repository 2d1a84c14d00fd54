#include "doctest.h"

#include <cstdio>

#include "epochsim/nvm.hpp"

using namespace epochsim;

namespace {

Block make_block(uint64_t tag) {
  Block b;
  for (int l = 0; l < kLinesPerPage; l++)
    for (int w = 0; w < kWordsPerLine; w++) b.line[l].word[w] = tag + l * 8 + w;
  return b;
}

// One full commit of {page -> fresh loc} entries against a journaling store.
void commit_epoch(NvmStore& s, uint64_t epoch,
                  const std::map<uint64_t, Block>& pages) {
  std::vector<LogRecord> log;
  std::map<uint64_t, uint64_t> locs;
  for (auto& [page, b] : pages) {
    uint64_t loc = s.alloc_loc();
    s.write_block(0, loc, b);
    locs[page] = loc;
    LogRecord r;
    r.type = LogRecord::PageMap;
    r.page = page;
    r.loc = loc;
    r.seal();
    log.push_back(r);
  }
  LogRecord mark;
  mark.type = LogRecord::EpochMark;
  mark.epoch = epoch;
  mark.seal();
  log.push_back(mark);

  for (auto& r : log) s.log_append(0, r);
  s.set_commit_flag(0, true);
  for (auto& [page, loc] : locs) s.apply_map(0, page, loc);
  s.set_epoch(0, epoch);
  s.set_commit_flag(0, false);
  s.clear_log(0);
}

}  // namespace

TEST_CASE("device block-buffer coalescing") {
  NvmDevice d(1);
  CHECK(d.write_block(10));
  CHECK_FALSE(d.write_block(10));  // open block absorbs the repeat
  CHECK(d.write_block(11));
  CHECK(d.write_block(10));  // switching back costs again
  CHECK(d.block_writes == 3);
  CHECK(d.bytes_written == 4 * kPageBytes);

  // with two banks, even/odd locs do not evict each other
  NvmDevice d2(2);
  d2.write_block(10);
  d2.write_block(11);
  CHECK_FALSE(d2.write_block(10));
  CHECK_FALSE(d2.write_block(11));
  CHECK(d2.block_writes == 2);
}

TEST_CASE("log record checksum") {
  LogRecord r;
  r.type = LogRecord::PageMap;
  r.page = 77;
  r.loc = 3;
  r.seal();
  CHECK(r.check());
  r.page ^= 1;
  CHECK_FALSE(r.check());
}

TEST_CASE("recover: committed state, redo and discard") {
  NvmStore s;
  commit_epoch(s, 1, {{5, make_block(100)}, {9, make_block(200)}});
  auto rec = s.recover();
  REQUIRE(rec.ok);
  CHECK(rec.epoch == 1);
  REQUIRE(rec.pages.size() == 2);
  CHECK(rec.pages[5] == make_block(100));
  CHECK(rec.pages[9] == make_block(200));

  // Torn attempt without the flag: log is discarded on recovery.
  uint64_t loc = s.alloc_loc();
  s.write_block(0, loc, make_block(300));
  LogRecord r;
  r.type = LogRecord::PageMap;
  r.page = 5;
  r.loc = loc;
  r.seal();
  s.log_append(0, r);
  rec = s.recover();
  REQUIRE(rec.ok);
  CHECK(rec.epoch == 1);
  CHECK(rec.pages[5] == make_block(100));

  // With the flag durable the same log must redo.
  s.set_commit_flag(0, true);
  rec = s.recover();
  REQUIRE(rec.ok);
  CHECK(rec.pages[5] == make_block(300));
}

TEST_CASE("recover rejects a corrupt log record under redo") {
  NvmStore s;
  uint64_t loc = s.alloc_loc();
  s.write_block(0, loc, make_block(1));
  LogRecord r;
  r.type = LogRecord::PageMap;
  r.page = 1;
  r.loc = loc;
  r.seal();
  s.log_append(0, r);
  s.set_commit_flag(0, true);
  CHECK(s.recover().ok);
  s.corrupt_log_record(0);
  auto rec = s.recover();
  CHECK_FALSE(rec.ok);
  CHECK(rec.error.find("corrupt") != std::string::npos);
}

TEST_CASE("journal replay reproduces every prefix deterministically") {
  NvmStore s;
  s.journaling = true;
  commit_epoch(s, 1, {{3, make_block(10)}});
  commit_epoch(s, 2, {{3, make_block(20)}, {4, make_block(30)}});
  const auto& j = s.journal();
  REQUIRE(j.size() > 0);
  for (size_t n = 0; n <= j.size(); n++) {
    NvmStore a = NvmStore::replay(j, n);
    NvmStore b = NvmStore::replay(j, n);
    CHECK(a.image_equals(b));
    auto rec = a.recover();
    REQUIRE(rec.ok);
    // every crash point recovers to epoch 0, 1 or 2, never in between
    CHECK(rec.epoch <= 2);
    if (rec.epoch == 2) CHECK(rec.pages[3] == make_block(20));
    if (rec.epoch == 1) CHECK(rec.pages[3] == make_block(10));
    if (rec.epoch == 0) CHECK(rec.pages.empty());
  }
  NvmStore full = NvmStore::replay(j, j.size());
  CHECK(full.image_equals(s));
}

TEST_CASE("save/load round-trip") {
  NvmStore s;
  s.journaling = true;
  commit_epoch(s, 1, {{7, make_block(70)}});
  RegBlob blob;
  blob.core = 2;
  blob.epoch = 1;
  blob.cut_seq = 55;
  s.apply_blob(0, blob);

  std::string path = "test_nvm_image.bin";
  s.save(path);
  NvmStore t = NvmStore::load(path);
  CHECK(t.image_equals(s));
  CHECK(t.committed_epoch() == 1);
  auto rec = t.recover();
  REQUIRE(rec.ok);
  CHECK(rec.blobs[2] == blob);
  std::remove(path.c_str());

  CHECK_THROWS(NvmStore::load("/nonexistent/image"));
}

TEST_CASE("scheduler enqueue, coalescing and scrub fill") {
  AccessScheduler sched;
  LinePayload l0, l1;
  l0.word[0] = 1;
  l1.word[0] = 2;

  auto r = sched.enqueue(12, 0, l0);
  CHECK(r.accepted);
  CHECK(r.send_scrub_request);  // first touch asks the scrubber
  r = sched.enqueue(12, 1, l1);
  CHECK(r.accepted);
  CHECK_FALSE(r.send_scrub_request);
  CHECK(sched.coalesced_line_writes == 0);

  // overwrite of a present slot is a coalesced line write
  sched.enqueue(12, 0, l1);
  CHECK(sched.coalesced_line_writes == 1);

  // awaiting the scrub reply: not flushable even in drain mode
  CHECK(sched.any_awaiting_reply());
  CHECK(sched.pick_flush(true) == nullptr);

  Block fill = make_block(500);
  sched.on_scrub_data(12, fill);
  auto* e = sched.find(12);
  REQUIRE(e != nullptr);
  for (int i = 0; i < kLinesPerPage; i++) CHECK(e->present[i]);
  CHECK(e->slot[2] == fill.line[2]);   // absent slots filled from DRAM
  CHECK(e->slot[0].word[0] == 2);      // enqueued data wins over the fill
  CHECK(sched.pick_flush(false) == e); // full entry is flushable

  sched.release(e);
  CHECK(sched.empty());
}

TEST_CASE("scheduler nak, flush policy and backpressure") {
  AccessScheduler sched;
  LinePayload l;
  sched.enqueue(1, 0, l);
  sched.on_nak(1, true);
  auto* e = sched.find(1);
  REQUIRE(e != nullptr);
  CHECK(e->scrub == AccessScheduler::ScrubState::NakReceived);
  CHECK(e->page_was_speculated);
  // nak entries flush even when partial
  CHECK(sched.pick_flush(false) == e);

  // full entries beat older partial ones
  AccessScheduler s2;
  s2.enqueue(1, 0, l);
  s2.on_scrub_data(1, make_block(0));     // full, older
  s2.enqueue(2, 0, l);
  s2.on_nak(2, false);                    // partial nak, newer
  auto* pick = s2.pick_flush(true);
  REQUIRE(pick != nullptr);
  CHECK(pick->page == 1);

  // all 16 entries busy: a 17th page bounces
  AccessScheduler s3;
  for (uint64_t p = 0; p < AccessScheduler::kEntries; p++)
    CHECK(s3.enqueue(p, 0, l).accepted);
  CHECK_FALSE(s3.enqueue(99, 0, l).accepted);
  // an existing page still lands
  CHECK(s3.enqueue(3, 1, l).accepted);
}
