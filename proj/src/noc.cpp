#include "epochsim/noc.hpp"

#include <cassert>

namespace epochsim {

Network::Network(uint32_t width, uint32_t height, uint32_t link_delay)
    : width_(width), height_(height), routers_(width * height) {
  for (auto& r : routers_)
    for (auto& l : r.link) l.delay = link_delay;
}

void Network::attach(ElementId e, int router) { placement_[e] = router; }

int Network::router_of(ElementId e) const {
  auto it = placement_.find(e);
  assert(it != placement_.end());
  return it->second;
}

void Network::set_link_delay(int router, int dir, uint32_t delay) {
  routers_[router].link[dir].delay = delay;
}

uint32_t Network::get_link_delay(int router, int dir) const {
  return routers_[router].link[dir].delay;
}

int Network::neighbor(int r, int dir) const {
  int x = r % (int)width_, y = r / (int)width_;
  switch (dir) {
    case E: x = (x + 1) % (int)width_; break;
    case W: x = (x + (int)width_ - 1) % (int)width_; break;
    case S: y = (y + 1) % (int)height_; break;
    case N: y = (y + (int)height_ - 1) % (int)height_; break;
  }
  return y * (int)width_ + x;
}

// Dimension-ordered, shortest wraparound path, ties broken toward +.
int Network::route_dir(int from, int to) const {
  int fx = from % (int)width_, fy = from / (int)width_;
  int tx = to % (int)width_, ty = to / (int)width_;
  if (fx != tx) {
    int d = (tx - fx + (int)width_) % (int)width_;
    return 2 * d <= (int)width_ ? E : W;
  }
  if (fy != ty) {
    int d = (ty - fy + (int)height_) % (int)height_;
    return 2 * d <= (int)height_ ? S : N;
  }
  return Local;
}

void Network::violation(const std::string& what) { violations_.push_back(what); }

void Network::mark_and_count(Router& r, Message& m) {
  if (m.marked) {
    violation("message " + std::to_string(m.id) + " counted twice");
    return;
  }
  m.marked = true;
  m.counted_by = (uint16_t)((&r - routers_.data()) + 1);
  r.xcount++;
}

void Network::inject(Message m) {
  if (m.id == 0) m.id = next_msg_id_++;
  int rid = m.src != kNoElement ? router_of(m.src) : m.dst_router;
  routers_[rid].in[Local].push_back(std::move(m));
}

void Network::inject_token(int router, uint64_t es, double cl) {
  Message tok;
  tok.id = next_msg_id_++;
  tok.kind = MsgKind::TOK;
  tok.dst_router = (int16_t)router;
  tok.tok_es = es;
  tok.tok_cl = cl;
  routers_[router].in[Local].push_back(std::move(tok));
}

void Network::begin_flush(uint8_t pre_parity) {
  flush_active_ = true;
  pre_parity_ = pre_parity;
  extra_xcount_ = 0;
  dir_pending_ = 0;
  for (auto& r : routers_) {
    if (r.parity != pre_parity)
      violation("router parity out of sync at flush start");
    r.taken_root = false;
    r.xcount = r.pcount = 0;
    r.acks = 0;
    r.tok_seen.fill(false);
    r.window_open.fill(false);
  }
}

void Network::end_flush() {
  if (dir_pending_ != 0)
    violation("flush ended with unresolved directory deliveries");
  flush_active_ = false;
}

void Network::deferred_resolved(int router, int n_generated) {
  if (mut_no_dir_adjust) return;  // counted as plain consumption on delivery
  if (dir_pending_ <= 0) {
    violation("deferred_resolved without pending delivery");
    return;
  }
  dir_pending_--;
  if (n_generated == 0) {
    routers_[router].pcount++;
  } else if (n_generated >= 2) {
    extra_xcount_ += (uint64_t)(n_generated - 1);
  }
  // n == 1: the single generated message inherits the mark; its own
  // delivery supplies the pcount.
}

void Network::arrive(int rid, int port, Message&& m, Cycle cycle) {
  Router& r = routers_[rid];
  if (m.kind == MsgKind::TOK) {
    if (r.tok_seen[port])
      violation("duplicate token on router " + std::to_string(rid) + " port " +
                std::to_string(port));
    r.tok_seen[port] = true;
    r.window_open[port] = false;  // window closes the moment the token lands
  } else if (flush_active_ && r.taken_root && is_data_kind(m) &&
             m.parity == pre_parity_ && !m.marked) {
    if (!r.tok_seen[port]) {
      mark_and_count(r, m);  // missed message: in flight at marking time
    } else {
      violation("pre-snapshot message " + std::to_string(m.id) +
                " after token on router " + std::to_string(rid));
    }
  }
  (void)cycle;
  r.in[port].push_back(std::move(m));
}

void Network::handle_token(int rid, int port, const Message& tok, Cycle cycle) {
  Router& r = routers_[rid];
  if (!r.taken_root) {
    r.taken_root = true;
    // Buffered pre-snapshot messages belong to the snapshot.
    for (auto& q : r.in)
      for (auto& m : q)
        if (is_data_kind(m) && m.parity == pre_parity_ && !m.marked)
          mark_and_count(r, m);
    for (auto& q : r.out_norm)
      for (auto& m : q)
        if (is_data_kind(m) && m.parity == pre_parity_ && !m.marked)
          mark_and_count(r, m);
    r.parity ^= 1;
    for (int d = 0; d < 4; d++) {
      if (!r.tok_seen[d]) {
        r.window_open[d] = true;
        r.window_deadline[d] =
            cycle + 2 * (r.link[d].delay +
                         routers_[neighbor(rid, d)].link[opposite(d)].delay) +
            8;
      }
      Message t;
      t.id = next_msg_id_++;
      t.kind = MsgKind::TOK;
      t.dst_router = (int16_t)neighbor(rid, d);
      t.tok_es = tok.tok_es;
      t.tok_cl = tok.tok_cl;
      r.out_tok[d].push_back(std::move(t));
      tokens_sent++;
    }
    if (on_token) on_token(rid, tok);
  }
  if (port != Local) {
    Message ack;
    ack.id = next_msg_id_++;
    ack.kind = MsgKind::ACK;
    ack.dst_router = (int16_t)neighbor(rid, port);
    ack.parity = r.parity;
    r.out_norm[port].push_back(std::move(ack));
  }
}

void Network::deliver_local(int rid, Message&& m) {
  Router& r = routers_[rid];
  if (flush_active_ && !r.taken_root &&
      (m.marked || (is_data_kind(m) && m.parity != pre_parity_)))
    violation("post-snapshot or marked message " + std::to_string(m.id) +
              " reached not-taken-root router " + std::to_string(rid));
  if (m.marked) {
    if (m.dst == deferred_ && !mut_no_dir_adjust)
      dir_pending_++;
    else
      r.pcount++;
  }
  messages_delivered++;
  if (deliver) deliver(m.dst, std::move(m));
}

void Network::forward(Router& r, int dir, Message&& m) {
  if (mut_token_priority_bypass && m.kind == MsgKind::DATA)
    r.out_tok[dir].push_front(std::move(m));  // overtakes a queued token
  else
    r.out_norm[dir].push_back(std::move(m));
}

void Network::process_router(int rid, Cycle cycle) {
  Router& r = routers_[rid];
  // Tokens preempt: pull them out of every input queue first.
  for (int p = 0; p < 5; p++) {
    auto& q = r.in[p];
    for (auto it = q.begin(); it != q.end();) {
      if (it->kind == MsgKind::TOK) {
        Message tok = std::move(*it);
        it = q.erase(it);
        handle_token(rid, p, tok, cycle);
      } else {
        ++it;
      }
    }
  }
  for (int p = 0; p < 5; p++) {
    auto& q = r.in[p];
    if (q.empty()) continue;
    Message m = std::move(q.front());
    q.pop_front();
    if (m.kind == MsgKind::ACK) {
      if (m.dst_router == rid) {
        r.acks++;
        continue;
      }
      forward(r, route_dir(rid, m.dst_router), std::move(m));
      continue;
    }
    int dest_router = m.dst_router >= 0 ? m.dst_router : router_of(m.dst);
    int d = route_dir(rid, dest_router);
    if (d == Local)
      deliver_local(rid, std::move(m));
    else
      forward(r, d, std::move(m));
  }
}

void Network::tick(Cycle cycle) {
  // 1. Link arrivals.
  for (int rid = 0; rid < (int)routers_.size(); rid++) {
    Router& r = routers_[rid];
    for (int d = 0; d < 4; d++) {
      Link& l = r.link[d];
      int dst = neighbor(rid, d);
      while (!l.q.empty() && l.q.front().at <= cycle) {
        Flit f = std::move(l.q.front());
        l.q.pop_front();
        if (f.seq != l.recv_seq++)
          violation("link reorder on router " + std::to_string(rid) + " dir " +
                    std::to_string(d));
        arrive(dst, opposite(d), std::move(f.m), cycle);
      }
    }
  }
  // 2. Router processing.
  for (int rid = 0; rid < (int)routers_.size(); rid++) process_router(rid, cycle);
  // 3. Outputs: one flit per link per cycle, tokens first.
  for (auto& r : routers_) {
    for (int d = 0; d < 4; d++) {
      std::deque<Message>* lane =
          !r.out_tok[d].empty() ? &r.out_tok[d]
                                : (!r.out_norm[d].empty() ? &r.out_norm[d] : nullptr);
      if (!lane) continue;
      Link& l = r.link[d];
      Flit f;
      f.at = cycle + l.delay;
      f.seq = l.send_seq++;
      f.m = std::move(lane->front());
      lane->pop_front();
      l.q.push_back(std::move(f));
    }
  }
  // 4. Window deadlines (sanity bound: the token must show up).
  if (flush_active_) {
    for (int rid = 0; rid < (int)routers_.size(); rid++) {
      Router& r = routers_[rid];
      for (int d = 0; d < 4; d++)
        if (r.window_open[d] && cycle > r.window_deadline[d]) {
          violation("missed-message window overrun on router " +
                    std::to_string(rid));
          r.window_open[d] = false;
        }
    }
  }
}

Network::RouterState Network::router_state(int rid) const {
  const Router& r = routers_[rid];
  RouterState s;
  s.taken_root = r.taken_root;
  s.xcount = r.xcount;
  s.pcount = r.pcount;
  s.windows_clear = true;
  for (int d = 0; d < 4; d++)
    if (!r.tok_seen[d]) s.windows_clear = false;
  s.acks = r.acks;
  return s;
}

uint64_t Network::sum_xcount() const {
  uint64_t x = extra_xcount_;
  for (const auto& r : routers_) x += r.xcount;
  return x;
}

uint64_t Network::sum_pcount() const {
  uint64_t p = 0;
  for (const auto& r : routers_) p += r.pcount;
  return p;
}

bool Network::all_taken_root() const {
  for (const auto& r : routers_)
    if (!r.taken_root) return false;
  return true;
}

bool Network::all_windows_clear() const {
  for (int rid = 0; rid < (int)routers_.size(); rid++)
    if (!router_state(rid).windows_clear) return false;
  return true;
}

void Network::for_each_message(
    const std::function<void(const Message&)>& fn) const {
  for (const auto& r : routers_) {
    for (const auto& q : r.in)
      for (const auto& m : q) fn(m);
    for (const auto& q : r.out_tok)
      for (const auto& m : q) fn(m);
    for (const auto& q : r.out_norm)
      for (const auto& m : q) fn(m);
    for (const auto& l : r.link)
      for (const auto& f : l.q) fn(f.m);
  }
}

uint64_t Network::count_preparity_messages() const {
  uint64_t n = 0;
  for_each_message([&](const Message& m) {
    if (is_data_kind(m) && m.parity == pre_parity_) n++;
  });
  return n;
}

bool Network::idle() const {
  bool any = false;
  for_each_message([&](const Message&) { any = true; });
  return !any;
}

}  // namespace epochsim
