#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "epochsim/message.hpp"
#include "epochsim/types.hpp"

namespace epochsim {

// 2D torus with per-router snapshot state. Each router keeps five input
// queues (four directions + local) and, per outgoing link, a priority
// lane for tokens and a normal lane for everything else. Links are FIFO
// with a fixed per-link delay, so nothing in flight ever reorders.
class Network {
 public:
  enum Dir : int { E = 0, W = 1, S = 2, N = 3, Local = 4 };
  static int opposite(int d) { return d ^ 1; }

  Network(uint32_t width, uint32_t height, uint32_t link_delay);

  void attach(ElementId e, int router);
  int router_of(ElementId e) const;

  void set_link_delay(int router, int dir, uint32_t delay);
  uint32_t get_link_delay(int router, int dir) const;

  // Element-addressed delivery. The message is handed over by value.
  std::function<void(ElementId, Message&&)> deliver;
  // Fires when a router takes root: local elements snapshot now.
  std::function<void(int router, const Message& tok)> on_token;

  void inject(Message m);
  void inject_token(int router, uint64_t es, double cl);

  void begin_flush(uint8_t pre_parity);
  void end_flush();
  bool flush_active() const { return flush_active_; }
  uint8_t pre_parity() const { return pre_parity_; }

  // The directory defers counting: a marked delivery there is resolved
  // later by deferred_resolved(n) with n = messages it generated.
  void set_deferred_element(ElementId e) { deferred_ = e; }
  void deferred_resolved(int router, int n_generated);
  int deferred_pending() const { return dir_pending_; }

  bool mut_token_priority_bypass = false;
  bool mut_no_dir_adjust = false;

  void tick(Cycle cycle);

  struct RouterState {
    bool taken_root = false;
    uint64_t xcount = 0;
    uint64_t pcount = 0;
    bool windows_clear = false;
    uint32_t acks = 0;
  };
  RouterState router_state(int r) const;
  int router_count() const { return (int)routers_.size(); }
  uint64_t extra_xcount() const { return extra_xcount_; }
  uint64_t sum_xcount() const;  // includes the directory adjustments
  uint64_t sum_pcount() const;
  bool all_taken_root() const;
  bool all_windows_clear() const;

  // Oracle support: walk every message sitting in any queue or link.
  void for_each_message(const std::function<void(const Message&)>& fn) const;
  uint64_t count_preparity_messages() const;
  bool idle() const;  // no messages anywhere

  const std::vector<std::string>& violations() const { return violations_; }
  void clear_violations() { violations_.clear(); }

  uint64_t tokens_sent = 0;
  uint64_t messages_delivered = 0;

 private:
  struct Flit {
    Cycle at = 0;
    uint64_t seq = 0;
    Message m;
  };
  struct Link {
    std::deque<Flit> q;
    uint32_t delay = 1;
    uint64_t send_seq = 0;
    uint64_t recv_seq = 0;
  };
  struct Router {
    std::array<std::deque<Message>, 5> in;
    std::array<std::deque<Message>, 4> out_tok;
    std::array<std::deque<Message>, 4> out_norm;
    std::array<Link, 4> link;  // outgoing, indexed by direction
    bool taken_root = false;
    uint8_t parity = 0;
    uint64_t xcount = 0;
    uint64_t pcount = 0;
    uint32_t acks = 0;
    std::array<bool, 4> tok_seen{};
    std::array<bool, 4> window_open{};
    std::array<Cycle, 4> window_deadline{};
  };

  int neighbor(int r, int dir) const;
  int route_dir(int from, int to) const;
  void violation(const std::string& what);
  void mark_and_count(Router& r, Message& m);
  void arrive(int rid, int port, Message&& m, Cycle cycle);
  void handle_token(int rid, int port, const Message& tok, Cycle cycle);
  void process_router(int rid, Cycle cycle);
  void forward(Router& r, int dir, Message&& m);
  void deliver_local(int rid, Message&& m);
  static bool is_data_kind(const Message& m) {
    return m.kind != MsgKind::TOK && m.kind != MsgKind::ACK;
  }

  uint32_t width_, height_;
  std::vector<Router> routers_;
  std::unordered_map<ElementId, int> placement_;
  ElementId deferred_ = kNoElement;
  int dir_pending_ = 0;
  bool flush_active_ = false;
  uint8_t pre_parity_ = 0;
  uint64_t extra_xcount_ = 0;
  uint64_t next_msg_id_ = 1;
  std::vector<std::string> violations_;
};

}  // namespace epochsim
