#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "epochsim/message.hpp"
#include "epochsim/types.hpp"

namespace epochsim {

// Single-node directory over the private L2s: I / S / E per line, owner
// and sharer set. handle() applies one request atomically and returns
// the generated messages; the caller injects them and reports the count
// for the snapshot bookkeeping.
class Directory {
 public:
  enum class St : uint8_t { I, S, E };

  struct LineState {
    St state = St::I;
    uint32_t owner = 0;      // core index, valid when state == E
    uint64_t sharers = 0;    // bitmask by core index
    // In S the downgraded ex-owner keeps serving fills until it evicts:
    // its writeback may still be in flight, so the LLC copy can be stale.
    bool owner_valid = false;
  };

  Directory(ElementId self, std::vector<ElementId> l2_elements,
            std::function<ElementId(uint64_t line)> llc_home)
      : self_(self), l2_(std::move(l2_elements)), llc_home_(std::move(llc_home)) {
    for (size_t i = 0; i < l2_.size(); i++) core_of_[l2_[i]] = (uint32_t)i;
  }

  // Current element sense, stamped on messages generated for unmarked
  // requests. Marked requests produce marked pre-parity messages.
  uint8_t sense = 0;

  std::vector<Message> handle(const Message& in);

  LineState state_of(uint64_t line) const {
    auto it = lines_.find(line);
    return it == lines_.end() ? LineState{} : it->second;
  }

  uint64_t naks_seen = 0;
  uint64_t stale_evicts = 0;

 private:
  Message base(MsgKind kind, CtrlOp op, ElementId dst, const Message& in) const;

  ElementId self_;
  std::vector<ElementId> l2_;
  std::function<ElementId(uint64_t)> llc_home_;
  std::unordered_map<ElementId, uint32_t> core_of_;
  std::unordered_map<uint64_t, LineState> lines_;
};

}  // namespace epochsim
