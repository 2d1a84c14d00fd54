#pragma once

#include <cstdint>

#include "epochsim/types.hpp"

namespace epochsim {

enum class MsgKind : uint8_t {
  TOK,   // snapshot token (router-addressed)
  ACK,   // token acknowledgement (router-addressed)
  DATA,  // fills, forwards
  GETS,  // shared-copy request (L2 -> directory)
  GETX,  // exclusive-copy request (L2 -> directory)
  INV,   // invalidate (directory -> sharer)
  EVICT, // ownership writeback on eviction (L2 -> directory)
  WB,    // data push down the hierarchy (Alg.-style / scrub)
  NAK,   // forward missed (owner -> directory)
  CTRL,
};

enum class CtrlOp : uint8_t {
  None,
  Fetch,      // directory -> LLC: serve shared copy to aux
  FetchX,     // directory -> LLC: serve exclusive copy to aux, evict local
  FwdGets,    // directory -> owner L2
  FwdGetx,    // directory -> owner L2
  UpgradeAck, // directory -> upgrading L2
  WbAck,      // directory -> evicting L2 (frees the victim slot)
  OwnerWb,    // downgraded L2 -> directory: dirty data ship, line kept
  RelayWb,    // tag on a directory-relayed WB: whoever lands the data
              // sends the WbAck to aux (the evicting L2)
  FetchMem,   // LLC -> memory controller
  RegBlob,    // core -> memory controller (register state)
  CkptEvent,  // core -> checkpoint controller (trace directive)
  ScrubLlc,   // controller -> LLC tile: start scrubbing
  ScrubMark,  // L2 -> LLC tile: all of my flush pushes precede this
  ScrubDone,  // LLC tile -> memory controller (follows its writebacks)
  TableStable,  // controller -> memory controller
  DoCommit,     // controller -> memory controller
};

struct Message {
  uint64_t id = 0;
  MsgKind kind = MsgKind::CTRL;
  CtrlOp op = CtrlOp::None;

  uint8_t parity = 0;       // sender's snapshot sense at send time
  bool marked = false;      // counted toward xcount
  uint16_t counted_by = 0;  // router id + 1; 0 = not counted

  ElementId src = kNoElement;
  ElementId dst = kNoElement;
  int16_t dst_router = -1;  // for TOK/ACK; -1 = element-addressed

  uint64_t line = 0;  // line id (address >> 6)
  LinePayload payload{};
  uint8_t payload_parity = 0;
  bool payload_dirty = false;
  bool no_install = false;  // DATA to an LLC tile: forward without filling
  bool to_nvm = false;      // WB bound for the persist path
  bool excl = false;        // DATA: exclusive grant / EVICT: had data

  uint16_t aux = 0;         // requester element for forwards/fetches
  uint64_t req_seq = 0;     // requesting op index (rf-edge logging)
  uint64_t ver = 0;         // line version stamp carried with payloads

  uint64_t tok_es = 0;      // <ES, CL> tuple carried by the token
  double tok_cl = 0.0;
};

}  // namespace epochsim
