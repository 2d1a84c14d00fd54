#include "epochsim/harness.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

namespace epochsim {

namespace {

void put_word(std::map<uint64_t, Block>& image, uint64_t word_addr,
              ValueTag v) {
  uint64_t page = word_addr >> 8;
  int li = (int)((word_addr >> 6) & 3);
  int wi = (int)((word_addr >> 3) & 7);
  image[page].line[li].word[wi] = v;
}

std::string block_diff(const Block& got, const Block& want) {
  std::ostringstream os;
  for (int li = 0; li < kLinesPerPage; li++)
    for (int wi = 0; wi < kWordsPerLine; wi++)
      if (got.line[li].word[wi] != want.line[li].word[wi])
        os << " [l" << li << "w" << wi << " got=" << std::hex
           << got.line[li].word[wi] << " want=" << want.line[li].word[wi]
           << std::dec << "]";
  return os.str();
}

}  // namespace

void GlobalObserver::on_write_perform(uint32_t core, uint64_t seq,
                                      uint64_t word_addr, uint8_t sense) {
  pending_[sense][word_addr] = make_tag(core, seq + 1);
}

void GlobalObserver::on_read_complete(uint32_t core, uint64_t seq,
                                      uint64_t word_addr, ValueTag value) {
  (void)word_addr;
  reads_.push_back({core, seq, value});
}

void GlobalObserver::on_cut(uint32_t core, uint64_t completed_ops,
                            uint64_t epoch) {
  auto& v = cuts_[epoch];
  if (v.size() <= core) v.resize(sim_->config().core_count, 0);
  v[core] = completed_ops;
}

void GlobalObserver::on_flush_declared(Cycle cycle, uint64_t epoch) {
  uint64_t stragglers = sim_->net().count_preparity_messages();
  if (stragglers != 0)
    errors_.push_back("epoch " + std::to_string(epoch) + ": " +
                      std::to_string(stragglers) +
                      " pre-snapshot messages in the NoC at flush completion");
  Cycle oracle = sim_->oracle_flush_cycle();
  if (oracle == 0)
    errors_.push_back("epoch " + std::to_string(epoch) +
                      ": flush declared before the oracle saw a clean NoC");
  else if (cycle < oracle)
    errors_.push_back("epoch " + std::to_string(epoch) +
                      ": flush declared at cycle " + std::to_string(cycle) +
                      " before oracle clean cycle " + std::to_string(oracle));
}

void GlobalObserver::on_commit(Cycle cycle, uint64_t epoch) {
  (void)cycle;
  uint8_t p = (uint8_t)((epoch - 1) & 1);
  for (const auto& [word, tag] : pending_[p]) put_word(committed_, word, tag);
  pending_[p].clear();
  images_[epoch] = committed_;

  std::map<uint32_t, RegBlob> blobs;
  auto cit = cuts_.find(epoch);
  for (uint32_t c = 0; c < sim_->config().core_count; c++) {
    uint64_t cut = cit != cuts_.end() && c < cit->second.size()
                       ? cit->second[c]
                       : 0;
    blobs[c] = RegBlob{c, epoch, cut};
  }
  expected_blobs_[epoch] = blobs;

  RecoveredState r = sim_->nvm().recover();
  std::string tag = "epoch " + std::to_string(epoch) + ": ";
  if (!r.ok) {
    errors_.push_back(tag + "recovery failed: " + r.error);
    return;
  }
  if (r.epoch != epoch)
    errors_.push_back(tag + "recovered epoch " + std::to_string(r.epoch));
  if (r.blobs != blobs) errors_.push_back(tag + "register blobs differ");
  for (const auto& [page, want] : committed_) {
    auto it = r.pages.find(page);
    if (it == r.pages.end()) {
      errors_.push_back(tag + "page " + std::to_string(page) +
                        " missing from the recovered image");
    } else if (!(it->second == want)) {
      errors_.push_back(tag + "page " + std::to_string(page) + " differs" +
                        block_diff(it->second, want));
    }
  }
  for (const auto& [page, got] : r.pages)
    if (!committed_.count(page))
      errors_.push_back(tag + "unexpected page " + std::to_string(page) +
                        " in the recovered image");
}

bool GlobalObserver::check_consistent_cut() {
  bool ok = true;
  for (const auto& [epoch, cut] : cuts_) {
    for (const auto& r : reads_) {
      if (r.value == 0) continue;  // never-written word
      if (r.core >= cut.size() || r.seq >= cut[r.core]) continue;  // post-cut
      uint32_t wc = tag_core(r.value);
      uint64_t ws = tag_seq(r.value) - 1;
      if (wc >= cut.size() || ws >= cut[wc]) {
        errors_.push_back(
            "epoch " + std::to_string(epoch) + ": pre-cut read (core " +
            std::to_string(r.core) + ", op " + std::to_string(r.seq) +
            ") observed post-cut write (core " + std::to_string(wc) + ", op " +
            std::to_string(ws) + ")");
        ok = false;
      }
    }
  }
  return ok;
}

// --- crash replay ---

CrashCheckResult check_crash_recovery(const Simulator& sim,
                                      const GlobalObserver& obs,
                                      uint64_t random_points, uint64_t seed) {
  CrashCheckResult res;
  const auto& journal = sim.nvm().journal();
  if (journal.empty()) {
    res.errors.push_back("journal is empty; enable journaling before run()");
    res.failures = 1;
    return res;
  }

  std::set<size_t> points;
  for (size_t i = 0; i < journal.size(); i++) {
    switch (journal[i].kind) {
      case NvmStore::JournalOp::AppendLog:
      case NvmStore::JournalOp::SetCommitFlag:
      case NvmStore::JournalOp::ApplyMap:
      case NvmStore::JournalOp::ApplyBlob:
      case NvmStore::JournalOp::SetEpoch:
      case NvmStore::JournalOp::ClearLog:
        points.insert(i);      // crash just before this step
        points.insert(i + 1);  // and just after it
        break;
      default:
        break;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, journal.size());
  for (uint64_t i = 0; i < random_points; i++) points.insert(pick(rng));

  for (size_t k : points) {
    res.points_checked++;
    uint64_t expected_epoch = 0;
    for (size_t i = 0; i < k && i < journal.size(); i++)
      if (journal[i].kind == NvmStore::JournalOp::SetCommitFlag &&
          journal[i].flag)
        expected_epoch++;

    NvmStore crashed = NvmStore::replay(journal, k);
    RecoveredState r = crashed.recover();
    std::string tag = "crash point " + std::to_string(k) + ": ";
    if (!r.ok) {
      res.failures++;
      res.errors.push_back(tag + "recovery failed: " + r.error);
      continue;
    }
    if (r.epoch != expected_epoch) {
      res.failures++;
      res.errors.push_back(tag + "recovered epoch " + std::to_string(r.epoch) +
                           ", expected " + std::to_string(expected_epoch));
      continue;
    }
    std::map<uint64_t, Block> want;
    std::map<uint32_t, RegBlob> want_blobs;
    if (expected_epoch > 0) {
      auto it = obs.images().find(expected_epoch);
      auto bt = obs.blobs().find(expected_epoch);
      if (it == obs.images().end() || bt == obs.blobs().end()) {
        res.failures++;
        res.errors.push_back(tag + "no golden image for epoch " +
                             std::to_string(expected_epoch));
        continue;
      }
      want = it->second;
      want_blobs = bt->second;
    }
    if (r.pages != want || r.blobs != want_blobs) {
      res.failures++;
      res.errors.push_back(tag + "recovered state differs from epoch " +
                           std::to_string(expected_epoch) + " golden image");
    }
  }
  return res;
}

// --- standalone NoC flush-termination trial ---

NocRunResult run_noc_flush_trial(uint64_t seed, bool mut_token_bypass,
                                 bool mut_no_dir_adjust) {
  NocRunResult res;
  std::mt19937_64 rng(seed);
  auto ri = [&rng](int lo, int hi) {
    return (int)(lo + rng() % (uint64_t)(hi - lo + 1));
  };

  int w = ri(2, 4), h = ri(2, 4);
  int routers = w * h;
  Network net((uint32_t)w, (uint32_t)h, 1);
  net.mut_token_priority_bypass = mut_token_bypass;
  net.mut_no_dir_adjust = mut_no_dir_adjust;
  for (int r = 0; r < routers; r++)
    for (int d = 0; d < 4; d++) net.set_link_delay(r, d, (uint32_t)ri(1, 4));

  // One element per router plus a directory-like deferred element.
  for (int r = 0; r < routers; r++) net.attach((ElementId)r, r);
  ElementId def = (ElementId)routers;
  int def_router = ri(0, routers - 1);
  net.attach(def, def_router);
  net.set_deferred_element(def);

  std::vector<uint8_t> sense(routers + 1, 0);
  net.on_token = [&](int router, const Message&) {
    for (int e = 0; e <= routers; e++)
      if (net.router_of((ElementId)e) == router) sense[e] ^= 1;
  };

  uint64_t delivered = 0;
  std::vector<Message> to_inject;
  net.deliver = [&](ElementId dst, Message&& m) {
    delivered++;
    if (dst == def && m.marked) {
      int n = ri(0, 3);
      net.deferred_resolved(net.router_of(def), n);
      for (int i = 0; i < n; i++) {
        Message out;
        out.kind = MsgKind::DATA;
        out.src = def;
        out.dst = (ElementId)ri(0, routers - 1);
        if (!mut_no_dir_adjust) {
          out.marked = true;  // generated messages inherit the mark
          out.counted_by = m.counted_by;
          out.parity = m.parity;
        } else {
          out.parity = m.parity;  // seeded bug: mark dropped on the floor
        }
        to_inject.push_back(std::move(out));
      }
    } else if (dst == def) {
      // unmarked request: the directory answers with its own sense
      int n = ri(0, 2);
      for (int i = 0; i < n; i++) {
        Message out;
        out.kind = MsgKind::DATA;
        out.src = def;
        out.dst = (ElementId)ri(0, routers - 1);
        out.parity = sense[def];
        to_inject.push_back(std::move(out));
      }
    }
  };

  Cycle token_at = (Cycle)ri(20, 200);
  Cycle traffic_until = token_at + (Cycle)ri(0, 150);
  int token_router = ri(0, routers - 1);
  double load = 0.1 + 0.5 * (double)(rng() % 1000) / 1000.0;
  Cycle max_cycles = 20000;

  bool flushing = false;
  for (Cycle c = 0; c < max_cycles; c++) {
    if (c == token_at) {
      net.begin_flush(0);
      net.inject_token(token_router, 0, 0.0);
      flushing = true;
    }
    if (c < traffic_until) {
      int burst = ri(0, 3);
      for (int i = 0; i < burst; i++) {
        if ((double)(rng() % 1000) / 1000.0 > load) continue;
        Message m;
        m.kind = rng() % 4 ? MsgKind::DATA : MsgKind::GETS;
        int src = ri(0, routers - 1);
        m.src = (ElementId)src;
        m.dst = rng() % 3 == 0 ? def : (ElementId)ri(0, routers - 1);
        m.parity = sense[src];
        net.inject(std::move(m));
      }
    }
    for (auto& m : to_inject) net.inject(std::move(m));
    to_inject.clear();
    net.tick(c);

    if (flushing) {
      bool pending_pre = false;
      for (const auto& m : to_inject)
        if (m.marked || m.parity == 0) pending_pre = true;
      bool truth_clean = net.all_taken_root() &&
                         net.count_preparity_messages() == 0 &&
                         net.deferred_pending() == 0 && !pending_pre;
      if (res.oracle == 0 && truth_clean) res.oracle = c;
      bool declared = net.all_taken_root() && net.all_windows_clear() &&
                      net.sum_xcount() == net.sum_pcount() &&
                      net.deferred_pending() == 0;
      if (declared) {
        res.completed = true;
        res.declared = c;
        res.clean_at_completion = net.count_preparity_messages() == 0;
        break;
      }
    }
  }
  res.oracle_order_ok =
      res.completed && res.oracle != 0 && res.declared >= res.oracle;
  // Drain a little further so in-flight Lemma checks can still fire.
  for (Cycle c = 0; c < 600; c++) net.tick(max_cycles + c);
  res.violations = net.violations();
  return res;
}

}  // namespace epochsim
