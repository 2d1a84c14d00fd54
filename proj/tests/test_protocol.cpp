#include "doctest.h"

#include <vector>

#include "epochsim/directory.hpp"

using namespace epochsim;

namespace {

// 4 L2 elements 10..13, LLC homes 20..23 by line % 4.
constexpr ElementId kDir = 30;

Directory make_dir() {
  return Directory(kDir, {10, 11, 12, 13},
                   [](uint64_t line) { return (ElementId)(20 + line % 4); });
}

Message req(MsgKind kind, ElementId src, uint64_t line, bool excl = false) {
  Message m;
  m.kind = kind;
  m.src = src;
  m.dst = kDir;
  m.line = line;
  m.excl = excl;
  return m;
}

}  // namespace

TEST_CASE("GETS on an idle line fetches from the LLC home") {
  Directory d = make_dir();
  auto out = d.handle(req(MsgKind::GETS, 10, 5));
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::Fetch);
  CHECK(out[0].dst == 21);  // line 5 homes at tile 1
  CHECK(out[0].aux == 10);
  CHECK(d.state_of(5).state == Directory::St::S);
  CHECK((d.state_of(5).sharers & 1) == 1);
}

TEST_CASE("GETX grants exclusivity and invalidates sharers") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETS, 10, 8));
  d.handle(req(MsgKind::GETS, 11, 8));
  auto out = d.handle(req(MsgKind::GETX, 12, 8));
  // FetchX to the home plus INVs to both sharers
  REQUIRE(out.size() == 3);
  CHECK(out[0].op == CtrlOp::FetchX);
  int invs = 0;
  for (auto& m : out)
    if (m.kind == MsgKind::INV) invs++;
  CHECK(invs == 2);
  CHECK(d.state_of(8).state == Directory::St::E);
  CHECK(d.state_of(8).owner == 2);
}

TEST_CASE("GETX by a sharer upgrades without a fetch") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETS, 10, 8));
  d.handle(req(MsgKind::GETS, 11, 8));
  auto out = d.handle(req(MsgKind::GETX, 10, 8));
  REQUIRE(out.size() == 2);
  CHECK(out[0].op == CtrlOp::UpgradeAck);
  CHECK(out[0].dst == 10);
  CHECK(out[1].kind == MsgKind::INV);
  CHECK(out[1].dst == 11);
}

TEST_CASE("GETX on an owned line forwards to the owner") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 3));
  auto out = d.handle(req(MsgKind::GETX, 11, 3));
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::FwdGetx);
  CHECK(out[0].dst == 10);
  CHECK(out[0].aux == 11);
  CHECK(d.state_of(3).owner == 1);

  // repeat upgrade by the owner itself is just an ack
  out = d.handle(req(MsgKind::GETX, 11, 3));
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::UpgradeAck);
}

TEST_CASE("downgrade keeps steering reads at the ex-owner") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 3));
  // GETS downgrades E -> S but the ex-owner's writeback may still be in
  // flight, so it keeps serving fills
  auto out = d.handle(req(MsgKind::GETS, 11, 3));
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::FwdGets);
  CHECK(out[0].dst == 10);
  auto ls = d.state_of(3);
  CHECK(ls.state == Directory::St::S);
  CHECK(ls.owner_valid);

  // further readers also go to the ex-owner, not the possibly-stale LLC
  out = d.handle(req(MsgKind::GETS, 12, 3));
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::FwdGets);
  CHECK(out[0].dst == 10);

  // a non-sharing writer is served from the live copy too; the forward
  // doubles as the ex-owner's invalidation so no separate INV goes there
  out = d.handle(req(MsgKind::GETX, 13, 3));
  bool fwd_to_exowner = false, inv_to_exowner = false;
  for (auto& m : out) {
    if (m.op == CtrlOp::FwdGetx && m.dst == 10) fwd_to_exowner = true;
    if (m.kind == MsgKind::INV && m.dst == 10) inv_to_exowner = true;
  }
  CHECK(fwd_to_exowner);
  CHECK_FALSE(inv_to_exowner);
  CHECK_FALSE(d.state_of(3).owner_valid);
  CHECK(d.state_of(3).state == Directory::St::E);
}

TEST_CASE("dirty eviction by the owner relays data home") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 6));
  Message ev = req(MsgKind::EVICT, 10, 6, true);
  ev.ver = 99;
  ev.payload.word[0] = 0xAB;
  auto out = d.handle(ev);
  REQUIRE(out.size() == 1);
  CHECK(out[0].kind == MsgKind::WB);
  CHECK(out[0].op == CtrlOp::RelayWb);
  CHECK(out[0].dst == 22);  // line 6 homes at tile 2
  CHECK(out[0].aux == 10);  // whoever lands the data acks the evicter
  CHECK(out[0].ver == 99);
  CHECK(out[0].payload.word[0] == 0xAB);
  CHECK(out[0].payload_dirty);
  CHECK(d.state_of(6).state == Directory::St::I);
}

TEST_CASE("stale dirty eviction is acked and dropped") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 6));
  d.handle(req(MsgKind::GETX, 11, 6));  // ownership moved on
  auto out = d.handle(req(MsgKind::EVICT, 10, 6, true));
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::WbAck);
  CHECK(out[0].dst == 10);
  CHECK(d.stale_evicts == 1);
  CHECK(d.state_of(6).owner == 1);  // untouched
}

TEST_CASE("OwnerWb from a downgraded owner relays; stale one is acked") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 6));
  d.handle(req(MsgKind::GETS, 11, 6));  // downgrade, owner_valid set

  Message wb = req(MsgKind::EVICT, 10, 6);
  wb.op = CtrlOp::OwnerWb;
  wb.ver = 7;
  auto out = d.handle(wb);
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::RelayWb);
  CHECK(out[0].ver == 7);
  CHECK_FALSE(d.state_of(6).owner_valid);

  // a second ship after ownership moved on bounces
  out = d.handle(wb);
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::WbAck);
  CHECK(d.stale_evicts == 1);
}

TEST_CASE("clean evictions retire sharers and owner_valid") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 2));
  d.handle(req(MsgKind::GETS, 11, 2));
  REQUIRE(d.state_of(2).owner_valid);
  auto out = d.handle(req(MsgKind::EVICT, 10, 2, false));
  CHECK(out.empty());
  CHECK_FALSE(d.state_of(2).owner_valid);
  CHECK(d.state_of(2).state == Directory::St::S);
  out = d.handle(req(MsgKind::EVICT, 11, 2, false));
  CHECK(out.empty());
  CHECK(d.state_of(2).state == Directory::St::I);

  // sole exclusive owner evicting clean frees the line entirely
  d.handle(req(MsgKind::GETX, 12, 4));
  d.handle(req(MsgKind::EVICT, 12, 4, false));
  CHECK(d.state_of(4).state == Directory::St::I);
}

TEST_CASE("NAK re-serves from memory") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETX, 10, 9));
  d.handle(req(MsgKind::GETS, 11, 9));  // forward will miss: owner evicted
  Message nak = req(MsgKind::NAK, 10, 9);
  nak.aux = 11;  // original requester rides along
  auto out = d.handle(nak);
  REQUIRE(out.size() == 1);
  CHECK(out[0].op == CtrlOp::Fetch);
  CHECK(out[0].dst == 21);  // line 9 homes at tile 1
  CHECK(out[0].aux == 11);
  CHECK_FALSE(d.state_of(9).owner_valid);
  CHECK(d.naks_seen == 1);
}

TEST_CASE("marked requests propagate the mark to everything generated") {
  Directory d = make_dir();
  d.handle(req(MsgKind::GETS, 10, 8));
  d.handle(req(MsgKind::GETS, 11, 8));
  Message m = req(MsgKind::GETX, 12, 8);
  m.marked = true;
  m.parity = 0;
  m.counted_by = 3;
  auto out = d.handle(m);
  REQUIRE(out.size() == 3);
  for (auto& o : out) {
    CHECK(o.marked);
    CHECK(o.parity == 0);
    CHECK(o.counted_by == 3);
  }
}

TEST_CASE("unmarked requests pick up the directory's current sense") {
  Directory d = make_dir();
  d.sense = 1;
  auto out = d.handle(req(MsgKind::GETS, 10, 1));
  REQUIRE(out.size() == 1);
  CHECK(out[0].parity == 1);
  CHECK_FALSE(out[0].marked);
}
