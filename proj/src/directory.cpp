#include "epochsim/directory.hpp"

#include <cassert>

namespace epochsim {

Message Directory::base(MsgKind kind, CtrlOp op, ElementId dst,
                        const Message& in) const {
  Message m;
  m.kind = kind;
  m.op = op;
  m.src = self_;
  m.dst = dst;
  m.line = in.line;
  m.aux = in.aux;
  m.req_seq = in.req_seq;
  m.parity = in.marked ? in.parity : sense;
  return m;
}

std::vector<Message> Directory::handle(const Message& in) {
  std::vector<Message> out;
  LineState& ls = lines_[in.line];

  auto requester_core = [&](ElementId e) {
    auto it = core_of_.find(e);
    assert(it != core_of_.end());
    return it->second;
  };

  switch (in.kind) {
    case MsgKind::GETS: {
      uint32_t rc = requester_core(in.src);
      Message fwd;
      if (ls.state == St::E) {
        fwd = base(MsgKind::CTRL, CtrlOp::FwdGets, l2_[ls.owner], in);
        fwd.aux = in.src;
        ls.state = St::S;
        ls.owner_valid = true;
        ls.sharers = (1ull << ls.owner) | (1ull << rc);
      } else if (ls.state == St::S && ls.owner_valid) {
        fwd = base(MsgKind::CTRL, CtrlOp::FwdGets, l2_[ls.owner], in);
        fwd.aux = in.src;
        ls.sharers |= (1ull << rc);
      } else {
        fwd = base(MsgKind::CTRL, CtrlOp::Fetch, llc_home_(in.line), in);
        fwd.aux = in.src;
        ls.state = St::S;
        ls.sharers |= (1ull << rc);
      }
      out.push_back(std::move(fwd));
      break;
    }
    case MsgKind::GETX: {
      uint32_t rc = requester_core(in.src);
      if (ls.state == St::E) {
        if (ls.owner == rc) {
          out.push_back(base(MsgKind::CTRL, CtrlOp::UpgradeAck, in.src, in));
        } else {
          Message fwd = base(MsgKind::CTRL, CtrlOp::FwdGetx, l2_[ls.owner], in);
          fwd.aux = in.src;
          out.push_back(std::move(fwd));
        }
      } else {
        uint64_t others = ls.sharers & ~(1ull << rc);
        if (ls.state == St::S && (ls.sharers >> rc) & 1) {
          out.push_back(base(MsgKind::CTRL, CtrlOp::UpgradeAck, in.src, in));
        } else if (ls.state == St::S && ls.owner_valid && ls.owner != rc) {
          // The ex-owner's writeback may still be racing the LLC; serve
          // from its live copy. The forward doubles as its invalidation.
          Message fwd = base(MsgKind::CTRL, CtrlOp::FwdGetx, l2_[ls.owner], in);
          fwd.aux = in.src;
          out.push_back(std::move(fwd));
          others &= ~(1ull << ls.owner);
        } else {
          Message fetch = base(MsgKind::CTRL, CtrlOp::FetchX, llc_home_(in.line), in);
          fetch.aux = in.src;
          out.push_back(std::move(fetch));
        }
        for (uint32_t c = 0; c < l2_.size(); c++)
          if ((others >> c) & 1)
            out.push_back(base(MsgKind::INV, CtrlOp::None, l2_[c], in));
      }
      ls.state = St::E;
      ls.owner = rc;
      ls.owner_valid = false;
      ls.sharers = 0;
      break;
    }
    case MsgKind::EVICT: {
      uint32_t ec = requester_core(in.src);
      if (in.op == CtrlOp::OwnerWb) {
        // Downgraded ex-owner ships its dirty data. Relay it home, then
        // stop steering requests at the ex-owner: every Fetch we issue
        // from here on trails the relayed data on the same path.
        if (ls.state == St::S && ls.owner_valid && ls.owner == ec) {
          Message wb = base(MsgKind::WB, CtrlOp::RelayWb, llc_home_(in.line), in);
          wb.payload = in.payload;
          wb.payload_parity = in.payload_parity;
          wb.payload_dirty = true;
          wb.ver = in.ver;
          wb.aux = in.src;  // ack comes from wherever the data lands
          out.push_back(std::move(wb));
          ls.owner_valid = false;
        } else {
          // Ownership moved on (a GETX forward carried the data onward).
          stale_evicts++;
          out.push_back(base(MsgKind::CTRL, CtrlOp::WbAck, in.src, in));
        }
        break;
      }
      if (in.excl) {  // dirty eviction, data attached
        if (ls.state == St::E && ls.owner == ec) {
          Message wb = base(MsgKind::WB, CtrlOp::RelayWb, llc_home_(in.line), in);
          wb.payload = in.payload;
          wb.payload_parity = in.payload_parity;
          wb.payload_dirty = true;
          wb.ver = in.ver;
          wb.aux = in.src;  // ack comes from wherever the data lands
          out.push_back(std::move(wb));
          ls.state = St::I;
          ls.sharers = 0;
        } else {
          // The line moved on while the eviction was in flight; the new
          // owner got the data via a forward. Just free the victim slot.
          stale_evicts++;
          out.push_back(base(MsgKind::CTRL, CtrlOp::WbAck, in.src, in));
        }
      } else {  // clean eviction: pure notification, nothing generated
        if (ls.state == St::E && ls.owner == ec) {
          ls.state = St::I;
          ls.sharers = 0;
        } else {
          ls.sharers &= ~(1ull << ec);
          if (ls.owner_valid && ls.owner == ec) ls.owner_valid = false;
          if (ls.state == St::S && ls.sharers == 0) ls.state = St::I;
        }
      }
      break;
    }
    case MsgKind::NAK: {
      // A forward missed: the old owner's copy was cleanly evicted before
      // the forward arrived. Memory is up to date; re-serve from there.
      naks_seen++;
      uint32_t nc = requester_core(in.src);
      ls.sharers &= ~(1ull << nc);
      if (ls.owner_valid && ls.owner == nc) ls.owner_valid = false;
      Message fetch = base(MsgKind::CTRL, in.excl ? CtrlOp::FetchX : CtrlOp::Fetch,
                           llc_home_(in.line), in);
      out.push_back(std::move(fetch));
      break;
    }
    default:
      assert(false && "unexpected message kind at directory");
  }

  if (in.marked)
    for (auto& m : out) {
      m.marked = true;
      m.counted_by = in.counted_by;
      m.parity = in.parity;
    }
  return out;
}

}  // namespace epochsim
