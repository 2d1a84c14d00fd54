#include "epochsim/sim.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace epochsim {

namespace {
inline uint64_t word_index(uint64_t word_addr) { return (word_addr >> 3) & 7; }
}  // namespace

Simulator::Simulator(const SimConfig& cfg, const Trace& trace)
    : cfg_(cfg), trace_(&trace), nvm_dev_(cfg.nvm_banks) {
  cfg_.validate();
  net_ = std::make_unique<Network>(cfg_.noc_width, cfg_.noc_height,
                                   cfg_.link_delay);
  net_->mut_token_priority_bypass = cfg_.mut_token_priority_bypass;
  net_->mut_no_dir_adjust = cfg_.mut_no_dir_adjust;

  for (uint32_t c = 0; c < cfg_.core_count; c++)
    cores_.push_back(std::make_unique<CoreTile>(c, cfg_));
  for (uint32_t t = 0; t < cfg_.llc_tiles; t++)
    llcs_.push_back(std::make_unique<LlcTile>(t, cfg_));

  uint32_t rc = cfg_.router_count();
  for (ElementId e = 0; e <= e_ctl(); e++) net_->attach(e, e % rc);

  std::vector<ElementId> l2s;
  for (uint32_t c = 0; c < cfg_.core_count; c++) l2s.push_back(e_tile(c));
  dir_ = std::make_unique<Directory>(
      e_dir(), l2s, [this](uint64_t line) { return llc_home(line); });
  net_->set_deferred_element(e_dir());

  mem_ = std::make_unique<MemCtrl>();
  mem_->es_cycles = cfg_.epoch_size_cycles;
  mem_->cl_seconds = cfg_.cl_target_seconds;
  mem_->next_subepoch = std::max<Cycle>(1, cfg_.epoch_size_cycles / 50);
  mem_->rate = kRateMax;
  mem_->next_spec = mem_->rate;
  mem_->spec_walker.reset(&mem_->table[0]);

  net_->deliver = [this](ElementId dst, Message&& m) {
    deliver(dst, std::move(m));
  };
  net_->on_token = [this](int router, const Message& tok) {
    handle_token_at_router(router, tok);
  };

  last_cuts_.assign(cfg_.core_count, 0);
  cur_es_ = cfg_.epoch_size_cycles;
  cur_cl_ = cfg_.cl_target_seconds;
  next_checkpoint_ = cfg_.epoch_size_cycles;
}

uint8_t Simulator::sense_of(ElementId e) const {
  if (e < cfg_.core_count) return cores_[e]->sense;
  if (e < cfg_.core_count + cfg_.llc_tiles)
    return llcs_[e - cfg_.core_count]->sense;
  if (e == e_dir()) return dir_->sense;
  if (e == e_mem()) return mem_->sense;
  return parity_;
}

void Simulator::send_later(ElementId from, Message m, Cycle delay) {
  m.src = from;
  delayed_.push_back({cycle_ + delay, from, std::move(m)});
}

void Simulator::pump_delayed() {
  if (delayed_.empty()) return;
  std::vector<DelayedMsg> keep;
  keep.reserve(delayed_.size());
  for (auto& d : delayed_) {
    if (d.due <= cycle_) {
      if (!d.m.marked) d.m.parity = sense_of(d.from);
      net_->inject(std::move(d.m));
    } else {
      keep.push_back(std::move(d));
    }
  }
  delayed_.swap(keep);
}

void Simulator::deliver(ElementId dst, Message&& m) {
  if (dst < cfg_.core_count) {
    cores_[dst]->inbox.push_back(std::move(m));
  } else if (dst < cfg_.core_count + cfg_.llc_tiles) {
    llcs_[dst - cfg_.core_count]->inbox.push_back(std::move(m));
  } else if (dst == e_dir()) {
    dir_inbox_.push_back(std::move(m));
  } else if (dst == e_mem()) {
    mem_->inbox.push_back(std::move(m));
  } else if (dst == e_ctl()) {
    ctl_inbox_.push_back(std::move(m));
  } else {
    note("delivery to unknown element " + std::to_string(dst));
  }
}

// --- snapshot ---

void Simulator::snapshot_tile(CoreTile& t, const Message&) {
  t.sense ^= 1;
  last_cuts_[t.id] = t.completed_ops;
  if (observer) observer->on_cut(t.id, t.completed_ops, committed_epochs_ + 1);
  Message blob;
  blob.kind = MsgKind::CTRL;
  blob.op = CtrlOp::RegBlob;
  blob.dst = e_mem();
  blob.aux = (uint16_t)t.id;
  blob.req_seq = t.completed_ops;
  send_later(e_tile(t.id), std::move(blob), 1);
  t.scrub_active = true;
  t.scrub_cursor = 0;
  t.scrub_done = false;
  t.scrub_started = cycle_;
}

void Simulator::handle_token_at_router(int router, const Message& tok) {
  for (ElementId e = 0; e <= e_ctl(); e++) {
    if (net_->router_of(e) != router) continue;
    if (e < cfg_.core_count) {
      snapshot_tile(*cores_[e], tok);
    } else if (e < cfg_.core_count + cfg_.llc_tiles) {
      LlcTile& t = *llcs_[e - cfg_.core_count];
      t.sense ^= 1;
      t.scrub_done = false;
      t.scrub_active = false;
      t.scrub_cursor = 0;
      t.markers = 0;
      t.commanded = false;
      t.passthrough = false;
    } else if (e == e_dir()) {
      dir_->sense ^= 1;
    } else if (e == e_mem()) {
      MemCtrl& m = *mem_;
      uint8_t pre = m.sense;
      m.sense ^= 1;
      m.epoch_start = cycle_;
      m.es_cycles = tok.tok_es ? tok.tok_es : m.es_cycles;
      if (tok.tok_cl > 0) m.cl_seconds = tok.tok_cl;
      m.walking = true;
      m.walk_parity = pre;
      m.walker.reset(&m.table[pre]);
      m.spec_walker.reset(&m.table[m.sense]);
      m.commit_map = std::move(m.spec_pending[pre]);
      m.spec_pending[pre].clear();
      m.commit_vers.clear();
      for (const auto& [page, loc] : m.commit_map) record_commit_vers(page);
      m.table_stable = false;
      m.llc_done = 0;
      m.walk_done = false;
      m.committed = false;
      m.committing = false;
      m.commit_log.clear();
      m.commit_pos = m.apply_pos = 0;
      m.flag_set = false;
      m.pace_idle = 0;
      m.next_walk = cycle_ + 1;
      m.next_subepoch = cycle_ + std::max<Cycle>(1, m.es_cycles / 50);
      cur_row_.modified_m = m.table[pre].valid_count();
    }
    // controller: parity_ already advanced in start_flush
  }
}

// --- core tile ---

void Simulator::l1_fill(CoreTile& t, uint64_t line_id, const LinePayload& data,
                        uint64_t ver) {
  CacheLine* v = t.l1.victim_for(line_id);
  v->valid = true;
  v->dirty = false;
  v->exclusive = false;
  v->line_id = line_id;
  v->data = data;
  v->version = ver;
  t.l1.touch(v);
}

void Simulator::complete_read(CoreTile& t, const LinePayload& data,
                              uint64_t word_addr, uint64_t seq) {
  ValueTag v = data.word[word_index(word_addr)];
  if (observer) observer->on_read_complete(t.id, seq, word_addr, v);
  t.completed_ops++;
}

void Simulator::perform_write(CoreTile& t, CacheLine* l, uint64_t word_addr,
                              uint64_t seq) {
  if (l->dirty && l->parity != t.sense) push_line(t, *l);
  // seq + 1 keeps tag 0 reserved for "never written"
  l->data.word[word_index(word_addr)] = make_tag(t.id, seq + 1);
  l->dirty = true;
  l->parity = t.sense;
  l->version = ++write_stamp_;
  t.l2.touch(l);
  if (CacheLine* l1l = t.l1.find(l->line_id)) {
    l1l->data = l->data;
    l1l->version = l->version;
  }
  if (observer) observer->on_write_perform(t.id, seq, word_addr, t.sense);
  t.completed_ops++;
}

void Simulator::push_line(CoreTile& t, CacheLine& l) {
  Message wb;
  wb.kind = MsgKind::WB;
  wb.dst = llc_home(l.line_id);
  wb.line = l.line_id;
  wb.payload = l.data;
  wb.payload_parity = l.parity;
  wb.payload_dirty = true;
  wb.ver = l.version;
  send_later(e_tile(t.id), std::move(wb), 1);
  l.dirty = false;
}

void Simulator::evict_for(CoreTile& t, uint64_t line_id) {
  CacheLine* v = t.l2.victim_for(line_id);
  if (!v->valid) return;
  Message ev;
  ev.kind = MsgKind::EVICT;
  ev.dst = e_dir();
  ev.line = v->line_id;
  if (v->dirty) {
    ev.excl = true;
    ev.payload = v->data;
    ev.payload_parity = v->parity;
    ev.payload_dirty = true;
    ev.ver = v->version;
    t.victims.push_back({v->line_id, v->data, v->parity, v->version});
  }
  send_later(e_tile(t.id), std::move(ev), 1);
  if (CacheLine* l1l = t.l1.find(v->line_id)) l1l->valid = false;
  v->valid = false;
}

void Simulator::install_l2(CoreTile& t, uint64_t line_id,
                           const LinePayload& data, bool excl,
                           uint8_t data_parity, bool dirty) {
  evict_for(t, line_id);
  CacheLine* v = t.l2.victim_for(line_id);
  v->valid = true;
  v->dirty = dirty;
  v->exclusive = excl;
  v->parity = data_parity;
  v->line_id = line_id;
  v->data = data;
  t.l2.touch(v);
}

void Simulator::handle_forward(CoreTile& t, Message& m) {
  bool getx = m.op == CtrlOp::FwdGetx;
  CacheLine* l = t.l2.find(m.line);
  if (l && l->valid) {
    if (l->dirty) {
      if (getx) {
        push_line(t, *l);
      } else {
        // Downgrade: ship the dirty data home through the directory so
        // it clears us as serving owner only once the data is ordered
        // ahead of any later Fetch to the LLC. We keep the line and keep
        // serving fills; the victim entry covers the in-flight window.
        Message ship;
        ship.kind = MsgKind::EVICT;
        ship.op = CtrlOp::OwnerWb;
        ship.dst = e_dir();
        ship.line = l->line_id;
        ship.excl = true;
        ship.payload = l->data;
        ship.payload_parity = l->parity;
        ship.payload_dirty = true;
        ship.ver = l->version;
        t.victims.push_back({l->line_id, l->data, l->parity, l->version});
        send_later(e_tile(t.id), std::move(ship), 1);
        l->dirty = false;
      }
    }
    Message d;
    d.kind = MsgKind::DATA;
    d.dst = m.aux;
    d.line = m.line;
    d.payload = l->data;
    d.payload_parity = l->parity;
    d.excl = getx;
    d.req_seq = m.req_seq;
    d.ver = l->version;
    send_later(e_tile(t.id), std::move(d), cfg_.l2.latency);
    if (getx) {
      if (CacheLine* l1l = t.l1.find(m.line)) l1l->valid = false;
      l->valid = false;
    } else {
      l->exclusive = false;
    }
    return;
  }
  for (auto& ve : t.victims) {
    if (ve.line_id == m.line) {
      Message d;
      d.kind = MsgKind::DATA;
      d.dst = m.aux;
      d.line = m.line;
      d.payload = ve.data;
      d.payload_parity = ve.parity;
      d.excl = getx;
      d.req_seq = m.req_seq;
      d.ver = ve.version;
      send_later(e_tile(t.id), std::move(d), cfg_.l2.latency);
      return;
    }
  }
  if (t.mshr.active && t.mshr.line_id == m.line) {
    t.mshr.stashed.push_back(m);
    return;
  }
  Message nak;
  nak.kind = MsgKind::NAK;
  nak.dst = e_dir();
  nak.line = m.line;
  nak.aux = m.aux;
  nak.excl = getx;
  nak.req_seq = m.req_seq;
  send_later(e_tile(t.id), std::move(nak), 1);
}

void Simulator::tile_process(CoreTile& t, Message& m) {
  switch (m.kind) {
    case MsgKind::DATA: {
      if (!(t.mshr.active && t.mshr.line_id == m.line)) {
        note("stray data fill at tile " + std::to_string(t.id));
        return;
      }
      install_l2(t, m.line, m.payload, m.excl, m.payload_parity, false);
      CacheLine* l = t.l2.find(m.line);
      l->version = m.ver;
      if (t.mshr.kind == OpKind::Write) {
        perform_write(t, l, t.mshr.word_addr, t.mshr.seq);
      } else {
        l1_fill(t, m.line, l->data, l->version);
        complete_read(t, l->data, t.mshr.word_addr, t.mshr.seq);
      }
      t.busy_until = cycle_ + cfg_.l2.latency;
      t.mshr.active = false;
      std::deque<Message> stash;
      stash.swap(t.mshr.stashed);
      for (auto& s : stash) tile_process(t, s);
      break;
    }
    case MsgKind::INV: {
      CacheLine* l = t.l2.find(m.line);
      if (l && l->valid) {
        if (l->dirty) push_line(t, *l);
        if (CacheLine* l1l = t.l1.find(m.line)) l1l->valid = false;
        l->valid = false;
      } else if (t.mshr.active && t.mshr.line_id == m.line) {
        t.mshr.stashed.push_back(m);
      }
      break;
    }
    case MsgKind::CTRL:
      switch (m.op) {
        case CtrlOp::UpgradeAck: {
          CacheLine* l = t.l2.find(m.line);
          if (!(t.mshr.active && t.mshr.line_id == m.line) || !l) {
            note("unexpected upgrade ack at tile " + std::to_string(t.id));
            return;
          }
          l->exclusive = true;
          perform_write(t, l, t.mshr.word_addr, t.mshr.seq);
          t.busy_until = cycle_ + cfg_.l2.latency;
          t.mshr.active = false;
          std::deque<Message> stash;
          stash.swap(t.mshr.stashed);
          for (auto& s : stash) tile_process(t, s);
          break;
        }
        case CtrlOp::FwdGets:
        case CtrlOp::FwdGetx:
          handle_forward(t, m);
          break;
        case CtrlOp::WbAck:
          for (auto it = t.victims.begin(); it != t.victims.end(); ++it)
            if (it->line_id == m.line) {
              t.victims.erase(it);
              break;
            }
          break;
        default:
          note("unexpected ctrl op at tile");
      }
      break;
    default:
      note("unexpected message kind at tile");
  }
}

void Simulator::tile_scrub(CoreTile& t) {
  uint8_t pre = net_->pre_parity();
  if (t.scrub_active &&
      (cfg_.scrubbing_granularity <= 1 ||
       cycle_ % cfg_.scrubbing_granularity == 0)) {
    for (uint32_t i = 0; i < cfg_.scrubbing_step && t.scrub_active; i++) {
      CacheLine& l = t.l2.slot(t.scrub_cursor);
      if (l.valid && l.dirty && l.parity == pre) push_line(t, l);
      if (++t.scrub_cursor >= t.l2.size()) t.scrub_active = false;
    }
  }
  if (!t.scrub_active && !t.scrub_done) {
    // Completion waits on pre-parity victims: their data is still being
    // relayed through the directory.
    for (const auto& ve : t.victims)
      if (ve.parity == pre) return;
    t.scrub_done = true;
    t.scrub_finished = cycle_;
    for (uint32_t tt = 0; tt < cfg_.llc_tiles; tt++) {
      Message mark;
      mark.kind = MsgKind::CTRL;
      mark.op = CtrlOp::ScrubMark;
      mark.dst = e_llc(tt);
      send_later(e_tile(t.id), std::move(mark), 1);
    }
  }
}

void Simulator::issue_op(CoreTile& t, const MemOp& op) {
  uint64_t line = op.address.line_id();
  uint64_t word_addr = op.address.raw & ~7ull;
  if (op.kind == OpKind::Read) {
    if (CacheLine* l1l = t.l1.find(line)) {
      t.l1.touch(l1l);
      complete_read(t, l1l->data, word_addr, op.seq);
      t.busy_until = cycle_ + cfg_.l1.latency + cfg_.op_gap;
      return;
    }
    CacheLine* l = t.l2.find(line);
    if (l && l->valid) {
      t.l2.touch(l);
      l1_fill(t, line, l->data, l->version);
      complete_read(t, l->data, word_addr, op.seq);
      t.busy_until = cycle_ + cfg_.l2.latency + cfg_.op_gap;
      return;
    }
    t.mshr = Mshr{true, line, OpKind::Read, word_addr, op.seq, {}};
    Message g;
    g.kind = MsgKind::GETS;
    g.dst = e_dir();
    g.line = line;
    g.req_seq = op.seq;
    send_later(e_tile(t.id), std::move(g), cfg_.l2.latency);
    return;
  }
  // write
  CacheLine* l = t.l2.find(line);
  if (l && l->valid && l->exclusive) {
    perform_write(t, l, word_addr, op.seq);
    t.busy_until = cycle_ + cfg_.l2.latency + cfg_.op_gap;
    return;
  }
  t.mshr = Mshr{true, line, OpKind::Write, word_addr, op.seq, {}};
  Message g;
  g.kind = MsgKind::GETX;
  g.dst = e_dir();
  g.line = line;
  g.req_seq = op.seq;
  send_later(e_tile(t.id), std::move(g), cfg_.l2.latency);
}

void Simulator::tick_core(CoreTile& t) {
  if (t.id == 0) {
    while (next_directive_ < trace_->directives.size() &&
           trace_->directives[next_directive_].after_op_index <= t.trace_pos) {
      const Directive& d = trace_->directives[next_directive_++];
      Message c;
      c.kind = MsgKind::CTRL;
      c.op = CtrlOp::CkptEvent;
      c.dst = e_ctl();
      c.aux = (uint16_t)d.kind;
      c.tok_es = d.es_cycles;
      c.tok_cl = d.cl_seconds;
      send_later(e_tile(0), std::move(c), 1);
    }
  }
  while (!t.inbox.empty()) {
    Message m = std::move(t.inbox.front());
    t.inbox.pop_front();
    tile_process(t, m);
  }
  tile_scrub(t);
  if (t.mshr.active || cycle_ < t.busy_until) return;
  const auto& ops = trace_->per_core[t.id];
  if (t.trace_pos >= ops.size()) return;
  const MemOp& op = ops[t.trace_pos++];
  issue_op(t, op);
}

// --- LLC tile ---

void Simulator::llc_install(LlcTile& t, uint64_t line_id,
                            const LinePayload& data, bool dirty,
                            uint8_t parity) {
  // handled by caller via llc_process; kept for scrub-time installs
  CacheLine* l = t.array.find(line_id);
  if (!l) {
    CacheLine* v = t.array.victim_for(line_id);
    if (v->valid && v->dirty) {
      Message wb;
      wb.kind = MsgKind::WB;
      wb.dst = e_mem();
      wb.line = v->line_id;
      wb.payload = v->data;
      wb.payload_parity = v->parity;
      wb.payload_dirty = true;
      wb.ver = v->version;
      send_later(e_llc(t.id), std::move(wb), 1);
    }
    v->valid = true;
    v->dirty = false;
    v->line_id = line_id;
    v->version = 0;
    v->parity = parity;
    v->data = data;
    l = v;
  }
  if (dirty && l->dirty && l->parity != parity) {
    // Level-local push-then-write: older-sense dirty data must reach the
    // memory controller before this install overwrites it.
    Message wb;
    wb.kind = MsgKind::WB;
    wb.dst = e_mem();
    wb.line = l->line_id;
    wb.payload = l->data;
    wb.payload_parity = l->parity;
    wb.payload_dirty = true;
    wb.ver = l->version;
    send_later(e_llc(t.id), std::move(wb), 1);
    l->dirty = false;
  }
  l->data = data;
  if (dirty) {
    l->dirty = true;
    l->parity = parity;
  }
  t.array.touch(l);
}

void Simulator::llc_process(LlcTile& t, Message& m) {
  switch (m.kind) {
    case MsgKind::WB: {
      CacheLine* l = t.array.find(m.line);
      auto ack_evicter = [&] {
        if (m.op != CtrlOp::RelayWb) return;
        Message a;
        a.kind = MsgKind::CTRL;
        a.op = CtrlOp::WbAck;
        a.dst = m.aux;
        a.line = m.line;
        send_later(e_llc(t.id), std::move(a), 1);
      };
      if (l && l->version > m.ver) {  // stale writeback, superseded
        ack_evicter();
        return;
      }
      uint8_t pre = net_->pre_parity();
      if ((t.passthrough || t.scrub_active) && m.payload_dirty &&
          m.payload_parity == pre) {
        // Straggler from the epoch being flushed after this tile started
        // scrubbing: forward it straight to memory. A relayed WB keeps
        // its ack duty attached, so the victim slot stays held until the
        // data is actually home.
        Message wb = m;
        wb.dst = e_mem();
        wb.marked = false;
        send_later(e_llc(t.id), std::move(wb), 1);
        llc_install(t, m.line, m.payload, false, m.payload_parity);
        if (CacheLine* nl = t.array.find(m.line)) nl->version = m.ver;
        return;
      }
      llc_install(t, m.line, m.payload, m.payload_dirty, m.payload_parity);
      if (CacheLine* nl = t.array.find(m.line)) nl->version = m.ver;
      ack_evicter();
      break;
    }
    case MsgKind::CTRL:
      switch (m.op) {
        case CtrlOp::Fetch:
        case CtrlOp::FetchX: {
          CacheLine* l = t.array.find(m.line);
          if (l && l->valid) {
            t.array.touch(l);
            Message d;
            d.kind = MsgKind::DATA;
            d.dst = m.aux;
            d.line = m.line;
            d.payload = l->data;
            d.payload_parity = l->parity;
            d.excl = m.op == CtrlOp::FetchX;
            d.req_seq = m.req_seq;
            d.ver = l->version;
            // a marked request is accounted on arrival here; the reply is a
            // fresh post-snapshot message (payload_parity carries the epoch)
            send_later(e_llc(t.id), std::move(d), cfg_.llc.latency);
          } else {
            Message f;
            f.kind = MsgKind::CTRL;
            f.op = CtrlOp::FetchMem;
            f.dst = e_mem();
            f.line = m.line;
            f.aux = m.aux;
            f.excl = m.op == CtrlOp::FetchX;
            f.req_seq = m.req_seq;
            send_later(e_llc(t.id), std::move(f), cfg_.llc.latency);
          }
          break;
        }
        case CtrlOp::ScrubLlc:
          t.commanded = true;
          break;
        case CtrlOp::ScrubMark:
          t.markers++;
          break;
        default:
          note("unexpected ctrl op at llc tile");
      }
      break;
    default:
      note("unexpected message kind at llc tile");
  }
}

void Simulator::llc_scrub(LlcTile& t) {
  if (!t.scrub_active) return;
  if (cfg_.scrubbing_granularity > 1 && cycle_ % cfg_.scrubbing_granularity)
    return;
  uint8_t pre = net_->pre_parity();
  for (uint32_t i = 0; i < cfg_.scrubbing_step && t.scrub_active; i++) {
    CacheLine& l = t.array.slot(t.scrub_cursor);
    if (l.valid && l.dirty && l.parity == pre) {
      Message wb;
      wb.kind = MsgKind::WB;
      wb.dst = e_mem();
      wb.line = l.line_id;
      wb.payload = l.data;
      wb.payload_parity = l.parity;
      wb.payload_dirty = true;
      wb.ver = l.version;
      send_later(e_llc(t.id), std::move(wb), 1);
      l.dirty = false;
    }
    if (++t.scrub_cursor >= t.array.size()) {
      t.scrub_active = false;
      t.scrub_done = true;
      t.passthrough = true;
      Message done;
      done.kind = MsgKind::CTRL;
      done.op = CtrlOp::ScrubDone;
      done.dst = e_mem();
      send_later(e_llc(t.id), std::move(done), 1);
    }
  }
}

void Simulator::tick_llc(LlcTile& t) {
  while (!t.inbox.empty()) {
    Message m = std::move(t.inbox.front());
    t.inbox.pop_front();
    llc_process(t, m);
  }
  if (t.commanded && t.markers >= cfg_.core_count && !t.scrub_active &&
      !t.scrub_done) {
    t.scrub_active = true;
    t.scrub_cursor = 0;
  }
  llc_scrub(t);
}

// --- directory ---

void Simulator::tick_dir() {
  while (!dir_inbox_.empty()) {
    Message m = std::move(dir_inbox_.front());
    dir_inbox_.pop_front();
    bool was_marked = m.marked;
    std::vector<Message> outs = dir_->handle(m);
    int n = (int)outs.size();
    for (auto& o : outs) send_later(e_dir(), std::move(o), 1);
    if (was_marked)
      net_->deferred_resolved(net_->router_of(e_dir()), n);
  }
}

// --- memory controller ---

Block Simulator::block_from_dram(uint64_t page) const {
  Block b;
  for (int i = 0; i < kLinesPerPage; i++) {
    auto it = mem_->dram.find(page * kLinesPerPage + i);
    if (it != mem_->dram.end()) b.line[i] = it->second.data;
  }
  return b;
}

void Simulator::record_commit_vers(uint64_t page) {
  auto& vers = mem_->commit_vers[page];
  for (int i = 0; i < kLinesPerPage; i++) {
    auto it = mem_->dram.find(page * kLinesPerPage + i);
    vers[i] = it != mem_->dram.end() ? it->second.ver : 0;
  }
}

void Simulator::mem_persist_page(uint64_t page, bool from_walk,
                                 uint64_t dram_reads) {
  MemCtrl& m = *mem_;
  Block b = block_from_dram(page);
  uint64_t loc = nvm_store_.alloc_loc();
  nvm_store_.write_block(cycle_, loc, b);
  nvm_dev_.write_block(loc);
  uint64_t cost = (dram_reads + 1) * cfg_.dram_latency + cfg_.nvm_write_latency;
  m.nvm_busy_until = std::max(m.nvm_busy_until, cycle_) + cost;
  if (from_walk)
    m.blocks_walk[m.walk_parity]++;
  else
    m.blocks_cache[m.walk_parity]++;
  m.commit_map[page] = loc;
  record_commit_vers(page);
  m.table[m.walk_parity].invalidate(page);
  m.k_samples.push_back(cost);
  if (m.k_samples.size() > 16) m.k_samples.pop_front();
}

void Simulator::mem_merge_commit(uint64_t page, int line_in_page,
                                 const LinePayload& data, uint64_t ver) {
  MemCtrl& m = *mem_;
  auto it = m.commit_map.find(page);
  if (it == m.commit_map.end()) return;
  auto& vers = m.commit_vers[page];
  if (ver <= vers[line_in_page]) return;  // block already has newer content
  const Block* old = nvm_store_.block_at(it->second);
  Block b = old ? *old : Block{};
  b.line[line_in_page] = data;
  uint64_t loc = nvm_store_.alloc_loc();
  nvm_store_.write_block(cycle_, loc, b);
  nvm_dev_.write_block(loc);
  m.nvm_busy_until =
      std::max(m.nvm_busy_until, cycle_) + cfg_.nvm_write_latency;
  m.blocks_cache[m.walk_parity]++;
  it->second = loc;
  vers[line_in_page] = ver;
}

void Simulator::mem_write_dram(uint64_t line_id, const LinePayload& data,
                               uint8_t parity, uint64_t ver, bool stale) {
  MemCtrl& m = *mem_;
  uint64_t page = page_of_line(line_id);
  int li = (int)(line_id % kLinesPerPage);
  // A flush-parity writeback for a page already persisted this flush
  // (urgent persist raced ahead of it) is merged into the committed
  // block instead of re-entering the modified-page table.
  if (m.walking && parity == m.walk_parity && m.commit_map.count(page) &&
      !m.table[m.walk_parity].contains(page)) {
    mem_merge_commit(page, li, data, ver);
    if (!stale) m.dram[line_id] = {data, ver};
    return;
  }
  if (stale) return;  // a newer version of this line already landed
  // Urgent persist: newer-sense data landing on a page that still awaits
  // persist for the epoch being flushed must not contaminate its image.
  if (m.walking && parity != m.walk_parity) {
    const DramPageTable::LeafEntry* e = m.table[m.walk_parity].find(page);
    if (e && e->valid && !e->speculated) {
      mem_persist_page(page, true, kLinesPerPage);
      // Any scheduler entry for the page is now redundant: its lines
      // are all in DRAM and were captured by the persist.
      if (auto* se = m.sched.find(page)) m.sched.release(se);
    }
  }
  // sharing heuristic for the group counters
  auto it = m.dram.find(line_id);
  if (it != m.dram.end()) {
    for (int w = 0; w < kWordsPerLine; w++) {
      ValueTag oldv = it->second.data.word[w], newv = data.word[w];
      if (newv != oldv && oldv != 0 && tag_core(oldv) != tag_core(newv)) {
        m.locality.bump_shared(group_of_page(page));
        break;
      }
    }
  }
  bool was_spec = false;
  if (const auto* e = m.table[parity].find(page))
    was_spec = e->valid && e->speculated;
  m.table[parity].record_write(page);
  m.touched[parity].insert(page);
  if (was_spec) m.mispredictions[parity]++;
  m.dram[line_id] = {data, ver};
  if (m.walking && parity == m.walk_parity && cfg_.scheduler_enabled) {
    auto res = m.sched.enqueue(page, li, data);
    if (res.accepted && res.send_scrub_request)
      m.scrub_replies.push_back({cycle_ + cfg_.dram_latency, page});
  }
}

void Simulator::flush_scheduler_entry(AccessScheduler::Entry* e) {
  MemCtrl& m = *mem_;
  Block b;
  uint32_t reads = 0;
  for (int i = 0; i < kLinesPerPage; i++) {
    if (e->present[i]) {
      b.line[i] = e->slot[i];
    } else {
      auto it = m.dram.find(e->page * kLinesPerPage + i);
      if (it != m.dram.end()) b.line[i] = it->second.data;
      reads++;
    }
  }
  uint64_t loc = nvm_store_.alloc_loc();
  nvm_store_.write_block(cycle_, loc, b);
  nvm_dev_.write_block(loc);
  uint64_t cost = reads * cfg_.dram_latency + cfg_.nvm_write_latency;
  m.nvm_busy_until = std::max(m.nvm_busy_until, cycle_) + cost;
  m.blocks_cache[m.walk_parity]++;
  m.commit_map[e->page] = loc;
  record_commit_vers(e->page);
  m.table[m.walk_parity].invalidate(e->page);
  m.k_samples.push_back(cost);
  if (m.k_samples.size() > 16) m.k_samples.pop_front();
  m.sched.release(e);
}

void Simulator::mem_walk_step() {
  MemCtrl& m = *mem_;
  DramPageTable& t = m.table[m.walk_parity];
  for (int attempt = 0; attempt < 4; attempt++) {
    auto step = m.walker.next(true);
    if (step.done) {
      if (t.unspeculated_count() > 0) m.walker.reset(&t);
      return;
    }
    if (m.sched.find(step.page)) continue;  // scheduler owns this page
    mem_persist_page(step.page, true, step.dram_reads);
    // pacing toward the configured checkpoint latency
    uint64_t remaining = t.unspeculated_count();
    // log append + redo apply are both batched 8 records per device write
    uint64_t est_commit =
        ((m.commit_map.size() + remaining + cfg_.core_count + 1) / 8 * 2 + 4) *
        cfg_.nvm_write_latency;
    uint64_t cl_cycles =
        (uint64_t)(m.cl_seconds * (double)cfg_.frequency_hz);
    Cycle target = m.epoch_start + cl_cycles;
    target = target > est_commit ? target - est_commit : m.epoch_start;
    if (cycle_ >= target || remaining == 0) {
      m.next_walk = cycle_ + 1;
    } else {
      m.next_walk = cycle_ + std::max<Cycle>(1, (target - cycle_) / (remaining + 1));
    }
    return;
  }
  m.next_walk = cycle_ + 1;
}

void Simulator::mem_speculate() {
  MemCtrl& m = *mem_;
  DramPageTable& t = m.table[m.sense];
  for (int attempt = 0; attempt < 8; attempt++) {
    auto step = m.spec_walker.next(true);
    if (step.done) {
      m.spec_walker.reset(&t);
      break;
    }
    const auto* e = t.find(step.page);
    if (!e || !e->valid || e->speculated) continue;
    // predictor off = always-persist baseline: no locality filtering
    if (cfg_.predictor_enabled) {
      if (e->counter != 0) continue;
      if (m.locality.shared(group_of_page(step.page)) > 1) continue;
    }
    Block b = block_from_dram(step.page);
    uint64_t loc = nvm_store_.alloc_loc();
    nvm_store_.write_block(cycle_, loc, b);
    nvm_dev_.write_block(loc);
    uint64_t cost =
        (step.dram_reads + 1) * cfg_.dram_latency + cfg_.nvm_write_latency;
    m.nvm_busy_until = std::max(m.nvm_busy_until, cycle_) + cost;
    t.mark_speculated(step.page);
    m.spec_pending[m.sense][step.page] = loc;
    m.spec_persists[m.sense]++;
    break;
  }
  m.next_spec = cycle_ + std::max<uint64_t>(1, m.rate);
}

void Simulator::mem_subepoch() {
  MemCtrl& m = *mem_;
  m.next_subepoch = cycle_ + std::max<Cycle>(1, m.es_cycles / 50);
  m.locality.advance_phase();
  m.table[m.sense].for_each_valid_mut(
      [&](uint64_t, DramPageTable::LeafEntry& e) {
        m.locality.clear_private_bit(e);
      });
  m.locality.decay_shared();
  uint64_t k_avg = cfg_.dram_latency + cfg_.nvm_write_latency;
  if (!m.k_samples.empty()) {
    uint64_t s = 0;
    for (uint64_t v : m.k_samples) s += v;
    k_avg = s / m.k_samples.size();
  }
  uint64_t mm = m.table[m.sense].valid_count();
  auto budget = compute_page_budget(m.cl_seconds, cfg_.frequency_hz, k_avg,
                                    m.cl_min_cycles);
  uint64_t n = budget.feasible ? budget.n : 0;
  auto rr = tune_rate(n, mm);
  m.budget_n = n;
  m.delta = rr.delta;
  m.rate = cfg_.predictor_enabled ? rr.rate : kRateMin;
}

void Simulator::finish_epoch_row() {
  MemCtrl& m = *mem_;
  EpochRow& r = cur_row_;
  r.epoch = committed_epochs_ + 1;
  r.commit_cycle = cycle_;
  r.cl_obs_cycles = cycle_ - r.token_cycle;
  // measured floor: how fast this epoch could have committed had pacing
  // never idled; the ScrubDone-time estimate misses urgent-persist load
  uint64_t idle = std::min<uint64_t>(m.pace_idle, r.cl_obs_cycles);
  r.cl_min_cycles = std::max(m.cl_min_cycles, r.cl_obs_cycles - idle);
  m.cl_min_cycles = r.cl_min_cycles;
  uint8_t p = m.walk_parity;
  r.block_writes =
      m.blocks_cache[p] + m.blocks_walk[p] + m.spec_persists[p];
  r.dirty_pages = m.touched[p].size();
  r.wa = r.dirty_pages ? (double)r.block_writes / (double)r.dirty_pages : 0.0;
  r.budget_n = m.budget_n;
  r.delta = m.delta;
  r.rate = m.rate;
  r.blocks_from_cache = m.blocks_cache[p];
  r.blocks_from_walk = m.blocks_walk[p];
  r.coalesced_lines =
      m.sched.coalesced_line_writes - m.coalesced_at_epoch_start;
  r.spec_persists = m.spec_persists[p];
  r.mispredictions = m.mispredictions[p];
  r.pct_dram_wa =
      r.dirty_pages && r.block_writes > r.dirty_pages
          ? 100.0 * (double)(r.block_writes - r.dirty_pages) /
                (double)r.dirty_pages
          : 0.0;
  epochs_.push_back(r);
  total_spec_persists_ += m.spec_persists[p];
  total_mispredictions_ += m.mispredictions[p];
  committed_epochs_++;
  if (observer) observer->on_commit(cycle_, committed_epochs_);
  // reset per-epoch accounting
  m.table[p].clear();
  m.touched[p].clear();
  m.blocks_cache[p] = m.blocks_walk[p] = 0;
  m.spec_persists[p] = m.mispredictions[p] = 0;
  m.coalesced_at_epoch_start = m.sched.coalesced_line_writes;
  m.commit_map.clear();
  m.commit_vers.clear();
  m.blobs.clear();
}

void Simulator::mem_commit_step() {
  MemCtrl& m = *mem_;
  if (cycle_ < m.commit_next) return;
  if (m.commit_pos < m.commit_log.size()) {
    size_t end = std::min(m.commit_pos + 8, m.commit_log.size());
    for (; m.commit_pos < end; m.commit_pos++)
      nvm_store_.log_append(cycle_, m.commit_log[m.commit_pos]);
    m.commit_next = cycle_ + cfg_.nvm_write_latency;
    return;
  }
  if (!m.flag_set) {
    nvm_store_.set_commit_flag(cycle_, true);
    m.flag_set = true;
    m.commit_next = cycle_ + cfg_.nvm_write_latency;
    return;
  }
  if (m.apply_pos < m.commit_log.size()) {
    size_t end = std::min(m.apply_pos + 8, m.commit_log.size());
    for (; m.apply_pos < end; m.apply_pos++) {
      const LogRecord& rec = m.commit_log[m.apply_pos];
      switch (rec.type) {
        case LogRecord::PageMap:
          nvm_store_.apply_map(cycle_, rec.page, rec.loc);
          break;
        case LogRecord::Blob:
          nvm_store_.apply_blob(cycle_, rec.blob);
          break;
        case LogRecord::EpochMark:
          nvm_store_.set_epoch(cycle_, rec.epoch);
          break;
      }
    }
    m.commit_next = cycle_ + cfg_.nvm_write_latency;
    return;
  }
  nvm_store_.clear_log(cycle_);
  nvm_store_.set_commit_flag(cycle_, false);
  m.committing = false;
  m.committed = true;
  m.walking = false;
  finish_epoch_row();
}

void Simulator::tick_mem() {
  MemCtrl& m = *mem_;
  while (!m.inbox.empty()) {
    Message msg = std::move(m.inbox.front());
    m.inbox.pop_front();
    switch (msg.kind) {
      case MsgKind::WB: {
        auto it = m.dram.find(msg.line);
        bool stale = it != m.dram.end() && it->second.ver > msg.ver;
        if (m.committing && msg.payload_parity == m.walk_parity)
          note("flush-parity writeback reached memory during commit");
        mem_write_dram(msg.line, msg.payload, msg.payload_parity, msg.ver,
                       stale);
        if (msg.op == CtrlOp::RelayWb) {
          Message a;
          a.kind = MsgKind::CTRL;
          a.op = CtrlOp::WbAck;
          a.dst = msg.aux;
          a.line = msg.line;
          send_later(e_mem(), std::move(a), 1);
        }
        break;
      }
      case MsgKind::CTRL:
        switch (msg.op) {
          case CtrlOp::FetchMem: {
            Message d;
            d.kind = MsgKind::DATA;
            d.dst = msg.aux;
            d.line = msg.line;
            auto it = m.dram.find(msg.line);
            if (it != m.dram.end()) {
              d.payload = it->second.data;
              d.ver = it->second.ver;
            }
            d.excl = msg.excl;
            d.req_seq = msg.req_seq;
            send_later(e_mem(), std::move(d), cfg_.dram_latency);
            break;
          }
          case CtrlOp::RegBlob:
            m.blobs[msg.aux] =
                RegBlob{msg.aux, committed_epochs_ + 1, msg.req_seq};
            break;
          case CtrlOp::ScrubDone:
            if (++m.llc_done >= cfg_.llc_tiles && !m.table_stable) {
              m.table_stable = true;
              // Achievable-latency floor: scrub time so far plus a
              // full-speed walk of what is left plus the commit itself.
              uint64_t k_avg = 2 * cfg_.dram_latency + cfg_.nvm_write_latency;
              if (!m.k_samples.empty()) {
                uint64_t s = 0;
                for (uint64_t v : m.k_samples) s += v;
                k_avg = s / m.k_samples.size();
              }
              uint64_t remaining =
                  m.table[m.walk_parity].unspeculated_count();
              uint64_t recs = m.commit_map.size() + remaining +
                              cfg_.core_count + 1;
              uint64_t est_commit =
                  (recs / 8 * 2 + 4) * cfg_.nvm_write_latency;
              m.cl_min_cycles =
                  (cycle_ - m.epoch_start) + remaining * k_avg + est_commit;
            }
            break;
          case CtrlOp::DoCommit: {
            m.committing = true;
            m.commit_pos = m.apply_pos = 0;
            m.flag_set = false;
            m.commit_next = cycle_;
            m.commit_log.clear();
            for (const auto& [page, loc] : m.commit_map) {
              LogRecord rec;
              rec.type = LogRecord::PageMap;
              rec.page = page;
              rec.loc = loc;
              rec.seal();
              m.commit_log.push_back(rec);
            }
            for (const auto& [core, blob] : m.blobs) {
              LogRecord rec;
              rec.type = LogRecord::Blob;
              rec.blob = blob;
              rec.seal();
              m.commit_log.push_back(rec);
            }
            LogRecord mark;
            mark.type = LogRecord::EpochMark;
            mark.epoch = committed_epochs_ + 1;
            mark.seal();
            m.commit_log.push_back(mark);
            break;
          }
          default:
            note("unexpected ctrl op at memory controller");
        }
        break;
      default:
        note("unexpected message kind at memory controller");
    }
  }
  // scrub-request replies
  while (!m.scrub_replies.empty() && m.scrub_replies.front().first <= cycle_) {
    uint64_t page = m.scrub_replies.front().second;
    m.scrub_replies.pop_front();
    const auto* e = m.table[m.walk_parity].find(page);
    if (e && e->valid && !e->speculated) {
      m.sched.on_scrub_data(page, block_from_dram(page));
    } else if (auto* se = m.sched.find(page)) {
      // Page already persisted (or never pending): entry is redundant,
      // its lines are in DRAM and covered elsewhere.
      m.sched.release(se);
    }
  }
  // scheduler flush pump
  if (cycle_ >= m.nvm_busy_until) {
    if (auto* e = m.sched.pick_flush(m.table_stable)) flush_scheduler_entry(e);
  }
  // paced table walk; starts once the caches are confirmed clean so the
  // persisted image cannot miss dirty lines still above us
  if (m.walking && m.table_stable && cycle_ >= m.next_walk &&
      cycle_ >= m.nvm_busy_until)
    mem_walk_step();
  if (m.walking && !m.walk_done && m.table_stable &&
      m.table[m.walk_parity].unspeculated_count() == 0 && m.sched.empty() &&
      m.scrub_replies.empty()) {
    // The scheduler can drain the table well ahead of the pacing target;
    // hold the commit so the epoch still lands on the requested latency.
    uint64_t recs = m.commit_map.size() + cfg_.core_count + 1;
    uint64_t est_commit = (recs / 8 * 2 + 4) * cfg_.nvm_write_latency;
    uint64_t cl_cycles = (uint64_t)(m.cl_seconds * (double)cfg_.frequency_hz);
    Cycle hold = m.epoch_start + cl_cycles;
    hold = hold > est_commit ? hold - est_commit : m.epoch_start;
    if (cycle_ >= hold) m.walk_done = true;
  }
  // the reported floor is observed latency minus deliberate idling, so
  // count every cycle the device was free but pacing held work back
  if (m.walking && m.table_stable && !m.walk_done && !m.committing &&
      cycle_ >= m.nvm_busy_until && m.sched.empty() &&
      m.scrub_replies.empty()) {
    uint64_t remaining = m.table[m.walk_parity].unspeculated_count();
    if (remaining == 0 || cycle_ < m.next_walk) m.pace_idle++;
  }
  // speculation + periodic tuning
  if (cycle_ >= m.next_spec) mem_speculate();
  if (cycle_ >= m.next_subepoch) mem_subepoch();
  if (m.committing) mem_commit_step();
}

// --- controller ---

void Simulator::start_flush(uint64_t es, double cl) {
  cur_es_ = es;
  cur_cl_ = cl;
  directive_checkpoint_ = false;
  token_cycle_ = cycle_;
  net_->begin_flush(parity_);
  net_->inject_token(net_->router_of(e_ctl()), es, cl);
  parity_ ^= 1;
  phase_ = Phase::Flushing;
  oracle_flush_seen_ = false;
  oracle_flush_cycle_ = 0;
  flush_declared_cycle_ = 0;
  view_queue_.clear();
  view_ = View{};
  cur_row_ = EpochRow{};
  cur_row_.token_cycle = cycle_;
  cur_row_.cl_target_cycles = (uint64_t)(cl * (double)cfg_.frequency_hz);
  next_checkpoint_ = cycle_ + es;
  if (observer) observer->on_flush_begin(cycle_, committed_epochs_ + 1);
}

void Simulator::refresh_view() {
  Cycle view_delay =
      8 + (Cycle)(cfg_.noc_width + cfg_.noc_height) *
              std::max<Cycle>(cfg_.link_delay, 4);
  if (cycle_ >= next_view_poll_) {
    next_view_poll_ = cycle_ + std::max<uint32_t>(1, cfg_.report_interval);
    View v;
    v.valid = true;
    v.all_tr = net_->all_taken_root();
    v.windows_clear = net_->all_windows_clear();
    v.sum_x = net_->sum_xcount();
    v.sum_p = net_->sum_pcount();
    v.dir_pending = net_->deferred_pending();
    v.l2_scrubs_done = true;
    for (const auto& t : cores_)
      if (!t->scrub_done) v.l2_scrubs_done = false;
    v.llc_scrubs_done = true;
    for (const auto& t : llcs_)
      if (!t->scrub_done) v.llc_scrubs_done = false;
    v.walk_done = mem_->walk_done;
    v.committed = mem_->committed;
    view_queue_.push_back({cycle_ + view_delay, v});
  }
  while (!view_queue_.empty() && view_queue_.front().first <= cycle_) {
    view_ = view_queue_.front().second;
    view_queue_.erase(view_queue_.begin());
  }
}

void Simulator::tick_controller() {
  while (!ctl_inbox_.empty()) {
    Message m = std::move(ctl_inbox_.front());
    ctl_inbox_.pop_front();
    if (m.kind == MsgKind::CTRL && m.op == CtrlOp::CkptEvent) {
      switch ((DirectiveKind)m.aux) {
        case DirectiveKind::Checkpoint:
          directive_checkpoint_ = true;
          break;
        case DirectiveKind::SetEs:
          pending_es_ = m.tok_es;
          break;
        case DirectiveKind::SetCl:
          pending_cl_ = m.tok_cl;
          break;
      }
    }
  }
  bool trace_done = true;
  for (const auto& t : cores_)
    if (t->trace_pos < trace_->per_core[t->id].size() || t->mshr.active ||
        !t->inbox.empty())
      trace_done = false;
  draining_ = trace_done && next_directive_ >= trace_->directives.size();

  refresh_view();

  switch (phase_) {
    case Phase::Idle: {
      if (draining_ && final_checkpoint_done_) {
        finished_ = true;
        return;
      }
      bool want = directive_checkpoint_ ||
                  (cfg_.timer_enabled && cycle_ >= next_checkpoint_) ||
                  draining_;
      if (want) {
        if (draining_) final_checkpoint_done_ = true;
        uint64_t es = pending_es_.value_or(cur_es_);
        double cl = pending_cl_.value_or(cur_cl_);
        pending_es_.reset();
        pending_cl_.reset();
        start_flush(es, cl);
      }
      break;
    }
    case Phase::Flushing:
      if (view_.valid && view_.all_tr && view_.windows_clear &&
          view_.sum_x == view_.sum_p && view_.dir_pending == 0 &&
          view_.l2_scrubs_done) {
        flush_declared_cycle_ = cycle_;
        cur_row_.sum_x = view_.sum_x;
        cur_row_.sum_p = view_.sum_p;
        net_->end_flush();
        if (observer) observer->on_flush_declared(cycle_, committed_epochs_ + 1);
        for (uint32_t t = 0; t < cfg_.llc_tiles; t++) {
          Message c;
          c.kind = MsgKind::CTRL;
          c.op = CtrlOp::ScrubLlc;
          c.dst = e_llc(t);
          send_later(e_ctl(), std::move(c), 1);
        }
        phase_ = Phase::LlcScrub;
      }
      break;
    case Phase::LlcScrub:
      if (view_.llc_scrubs_done) phase_ = Phase::AwaitDram;
      break;
    case Phase::AwaitDram:
      if (view_.walk_done) {
        Message c;
        c.kind = MsgKind::CTRL;
        c.op = CtrlOp::DoCommit;
        c.dst = e_mem();
        send_later(e_ctl(), std::move(c), 1);
        phase_ = Phase::Committing;
      }
      break;
    case Phase::Committing:
      if (view_.committed) phase_ = Phase::Idle;
      break;
  }
}

// --- oracle / checks ---

bool Simulator::caches_clean_of(uint8_t p) const {
  for (const auto& t : cores_) {
    bool bad = false;
    t->l2.for_each([&](const CacheLine& l) {
      if (l.dirty && l.parity == p) bad = true;
    });
    if (bad) return false;
    for (const auto& v : t->victims)
      if (v.parity == p) return false;
  }
  for (const auto& t : llcs_) {
    bool bad = false;
    t->array.for_each([&](const CacheLine& l) {
      if (l.dirty && l.parity == p) bad = true;
    });
    if (bad) return false;
  }
  return true;
}

void Simulator::update_oracle_truth() {
  if (phase_ != Phase::Flushing || oracle_flush_seen_) return;
  if (!net_->all_taken_root()) return;
  if (net_->count_preparity_messages() != 0) return;
  if (net_->deferred_pending() != 0) return;
  // Messages still queued inside elements get stamped with the sender's
  // sense at release; after all routers are TR every element is post, so
  // only marked (counted) messages can still carry the old epoch here.
  // Pre-epoch *payloads* riding post messages are the scrub stragglers
  // the marker/ScrubDone chain orders in front of the table walk.
  for (const auto& d : delayed_) {
    const Message& m = d.m;
    if (m.kind == MsgKind::TOK || m.kind == MsgKind::ACK) continue;
    if (m.marked) return;
  }
  oracle_flush_seen_ = true;
  oracle_flush_cycle_ = cycle_;
}

// --- top level ---

bool Simulator::step() {
  if (finished_) return false;
  pump_delayed();
  for (auto& t : cores_) tick_core(*t);
  tick_dir();
  for (auto& t : llcs_) tick_llc(*t);
  tick_mem();
  tick_controller();
  if (finished_) return false;
  net_->tick(cycle_);
  update_oracle_truth();
  cycle_++;
  return true;
}

void Simulator::run(Cycle max_cycles) {
  Cycle bound = max_cycles
                    ? max_cycles
                    : cfg_.epoch_size_cycles * 8 + trace_->total_ops * 5000 +
                          20'000'000ull;
  while (!finished_) {
    if (!step()) break;
    if (cycle_ > bound)
      throw std::runtime_error("simulation exceeded cycle bound (" +
                               std::to_string(bound) + ")");
  }
}

const std::vector<std::string>& Simulator::violations() const {
  all_violations_ = net_->violations();
  all_violations_.insert(all_violations_.end(), own_violations_.begin(),
                         own_violations_.end());
  return all_violations_;
}

}  // namespace epochsim
