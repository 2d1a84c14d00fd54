#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "epochsim/cache.hpp"
#include "epochsim/config.hpp"
#include "epochsim/directory.hpp"
#include "epochsim/message.hpp"
#include "epochsim/noc.hpp"
#include "epochsim/nvm.hpp"
#include "epochsim/page_table.hpp"
#include "epochsim/trace.hpp"
#include "epochsim/types.hpp"

namespace epochsim {

// Verification hooks. The simulator calls these at architectural events;
// the harness builds its oracles from them.
struct Observer {
  virtual ~Observer() = default;
  virtual void on_write_perform(uint32_t core, uint64_t seq, uint64_t word_addr,
                                uint8_t sense) {}
  virtual void on_read_complete(uint32_t core, uint64_t seq, uint64_t word_addr,
                                ValueTag value) {}
  virtual void on_cut(uint32_t core, uint64_t completed_ops, uint64_t epoch) {}
  virtual void on_flush_begin(Cycle cycle, uint64_t epoch) {}
  virtual void on_flush_declared(Cycle cycle, uint64_t epoch) {}
  virtual void on_commit(Cycle cycle, uint64_t epoch) {}
};

struct EpochRow {
  uint64_t epoch = 0;
  Cycle token_cycle = 0;
  Cycle commit_cycle = 0;
  uint64_t cl_target_cycles = 0;
  uint64_t cl_obs_cycles = 0;
  uint64_t cl_min_cycles = 0;  // measured cache-flush floor
  uint64_t block_writes = 0;
  uint64_t dirty_pages = 0;
  double wa = 0.0;
  uint64_t budget_n = 0;
  uint64_t modified_m = 0;
  double delta = 0.0;
  uint64_t rate = 0;
  uint64_t blocks_from_cache = 0;
  uint64_t blocks_from_walk = 0;
  uint64_t coalesced_lines = 0;
  uint64_t spec_persists = 0;
  uint64_t mispredictions = 0;
  double pct_dram_wa = 0.0;
  uint64_t sum_x = 0;
  uint64_t sum_p = 0;
};

class Simulator {
 public:
  Simulator(const SimConfig& cfg, const Trace& trace);

  Observer* observer = nullptr;

  // Runs to completion: trace drained, pipelines idle, final checkpoint
  // committed. max_cycles is a safety net (0 = default bound).
  void run(Cycle max_cycles = 0);
  bool step();  // one cycle; false once finished
  Cycle now() const { return cycle_; }
  bool finished() const { return finished_; }

  const SimConfig& config() const { return cfg_; }
  const std::vector<EpochRow>& epochs() const { return epochs_; }
  Network& net() { return *net_; }
  const Network& net() const { return *net_; }
  NvmStore& nvm() { return nvm_store_; }
  const NvmStore& nvm() const { return nvm_store_; }
  NvmDevice& nvm_device() { return nvm_dev_; }

  const std::vector<std::string>& violations() const;
  uint64_t committed_epoch() const { return committed_epochs_; }
  uint64_t total_spec_persists() const { return total_spec_persists_; }
  uint64_t total_mispredictions() const { return total_mispredictions_; }

  // --- harness access ---
  struct CoreTile;
  struct LlcTile;
  struct MemCtrl;
  CoreTile& core_tile(uint32_t c) { return *cores_[c]; }
  LlcTile& llc_tile(uint32_t t) { return *llcs_[t]; }
  MemCtrl& memctrl() { return *mem_; }
  Directory& directory() { return *dir_; }
  uint64_t cut_of(uint32_t core) const { return last_cuts_[core]; }
  uint8_t epoch_parity() const { return parity_; }
  bool in_flush() const { return phase_ != Phase::Idle; }
  Cycle flush_declared_cycle() const { return flush_declared_cycle_; }
  // Brute-force oracle truth: first cycle at which every router took
  // root, no pre-parity or marked message remained anywhere (network or
  // pending injection), and no directory resolution was outstanding.
  Cycle oracle_flush_cycle() const { return oracle_flush_cycle_; }
  bool caches_clean_of(uint8_t parity) const;
  int attached_router(ElementId e) const { return net_->router_of(e); }

  // Element ids.
  ElementId e_tile(uint32_t c) const { return (ElementId)c; }
  ElementId e_llc(uint32_t t) const { return (ElementId)(cfg_.core_count + t); }
  ElementId e_dir() const {
    return (ElementId)(cfg_.core_count + cfg_.llc_tiles);
  }
  ElementId e_mem() const {
    return (ElementId)(cfg_.core_count + cfg_.llc_tiles + 1);
  }
  ElementId e_ctl() const {
    return (ElementId)(cfg_.core_count + cfg_.llc_tiles + 2);
  }

  struct VictimEntry {
    uint64_t line_id = 0;
    LinePayload data{};
    uint8_t parity = 0;
    uint64_t version = 0;
  };

  struct Mshr {
    bool active = false;
    uint64_t line_id = 0;
    OpKind kind = OpKind::Read;
    uint64_t word_addr = 0;
    uint64_t seq = 0;
    std::deque<Message> stashed;
  };

  struct CoreTile {
    uint32_t id = 0;
    uint8_t sense = 0;
    CacheArray l1;
    CacheArray l2;
    std::vector<VictimEntry> victims;
    Mshr mshr;
    std::deque<Message> inbox;
    size_t trace_pos = 0;
    Cycle busy_until = 0;
    uint64_t completed_ops = 0;
    // flush scrub
    bool scrub_active = false;
    size_t scrub_cursor = 0;
    bool scrub_done = true;
    Cycle scrub_started = 0, scrub_finished = 0;
    CoreTile(uint32_t cid, const SimConfig& c)
        : id(cid), l1(c.l1.sets, c.l1.ways), l2(c.l2.sets, c.l2.ways) {}
  };

  struct LlcTile {
    uint32_t id = 0;
    uint8_t sense = 0;
    CacheArray array;
    std::deque<Message> inbox;
    bool scrub_active = false;
    size_t scrub_cursor = 0;
    bool scrub_done = true;
    uint32_t markers = 0;    // ScrubMark messages seen this flush
    bool commanded = false;  // ScrubLlc received
    // After this tile scrubbed, straggler pre-parity writebacks are
    // passed straight through to the memory controller.
    bool passthrough = false;
    LlcTile(uint32_t tid, const SimConfig& c)
        : id(tid), array(c.llc.sets, c.llc.ways) {}
  };

  struct DramLine {
    LinePayload data{};
    uint64_t ver = 0;
  };

  struct MemCtrl {
    uint8_t sense = 0;
    std::deque<Message> inbox;
    std::map<uint64_t, DramLine> dram;  // backing store, absent = zeros
    DramPageTable table[2];                // indexed by data parity
    std::set<uint64_t> touched[2];         // distinct pages this epoch
    LocalityCounters locality;
    PageWalker walker;
    PageWalker spec_walker;
    AccessScheduler sched;
    // pacing / tuning
    Cycle epoch_start = 0;
    uint64_t es_cycles = 0;
    double cl_seconds = 0;
    Cycle next_walk = 0;
    Cycle next_spec = 0;
    Cycle next_subepoch = 0;
    Cycle nvm_busy_until = 0;
    uint64_t rate = kRateMax;
    double delta = 0.0;
    uint64_t budget_n = 0;
    std::deque<uint64_t> k_samples;  // per-page persist cost, 16-deep
    uint64_t cl_min_cycles = 0;      // last measured cache-flush floor
    uint64_t pace_idle = 0;          // cycles the pacer chose not to persist
    // flush state
    bool walking = false;
    bool table_stable = false;  // caches confirmed clean
    bool walk_done = false;
    uint8_t walk_parity = 0;
    Cycle walk_deadline = 0;
    std::map<uint64_t, uint64_t> commit_map;  // page -> loc, this epoch
    // Per-line version stamps of each committed block, for merging late
    // pre-parity writebacks into already-persisted pages.
    std::map<uint64_t, std::array<uint64_t, kLinesPerPage>> commit_vers;
    std::vector<std::pair<uint64_t, Block>> pending_scrub;  // page + reply due
    std::deque<std::pair<Cycle, uint64_t>> scrub_replies;   // (due, page)
    // commit sequencing
    bool committing = false;
    std::vector<LogRecord> commit_log;
    size_t commit_pos = 0;  // append cursor
    size_t apply_pos = 0;   // redo-apply cursor
    bool flag_set = false;
    Cycle commit_next = 0;
    bool committed = false;
    std::map<uint32_t, RegBlob> blobs;
    // per-epoch counters, indexed by the parity the persist targets
    uint64_t blocks_cache[2] = {0, 0}, blocks_walk[2] = {0, 0};
    uint64_t spec_persists[2] = {0, 0}, mispredictions[2] = {0, 0};
    uint64_t coalesced_at_epoch_start = 0;
    uint32_t llc_done = 0;  // ScrubDone messages this flush
    std::map<uint64_t, uint64_t> spec_pending[2];  // page -> loc, by parity
  };

 private:
  enum class Phase { Idle, Flushing, LlcScrub, AwaitDram, Committing };

  struct DelayedMsg {
    Cycle due;
    ElementId from;
    Message m;
  };

  // Out-of-band controller view, refreshed on a delay.
  struct View {
    bool valid = false;
    bool all_tr = false;
    bool windows_clear = false;
    uint64_t sum_x = 0, sum_p = 0;
    int dir_pending = 0;
    bool l2_scrubs_done = false;
    bool llc_scrubs_done = false;
    bool walk_done = false;
    bool committed = false;
  };

  void send_later(ElementId from, Message m, Cycle delay);
  void pump_delayed();
  void deliver(ElementId dst, Message&& m);
  void handle_token_at_router(int router, const Message& tok);
  void snapshot_tile(CoreTile& t, const Message& tok);
  uint8_t sense_of(ElementId e) const;
  void note(const std::string& what) { own_violations_.push_back(what); }
  Block block_from_dram(uint64_t page) const;
  void handle_forward(CoreTile& t, Message& m);
  void l1_fill(CoreTile& t, uint64_t line_id, const LinePayload& data,
               uint64_t ver);

  void tick_core(CoreTile& t);
  void issue_op(CoreTile& t, const MemOp& op);
  void perform_write(CoreTile& t, CacheLine* line, uint64_t word_addr,
                     uint64_t seq);
  void complete_read(CoreTile& t, const LinePayload& data, uint64_t word_addr,
                     uint64_t seq);
  void tile_process(CoreTile& t, Message& m);
  void tile_scrub(CoreTile& t);
  void evict_for(CoreTile& t, uint64_t line_id);
  void install_l2(CoreTile& t, uint64_t line_id, const LinePayload& data,
                  bool excl, uint8_t data_parity, bool dirty);
  void push_line(CoreTile& t, CacheLine& line);  // WB toward the LLC home

  void tick_llc(LlcTile& t);
  void llc_process(LlcTile& t, Message& m);
  void llc_install(LlcTile& t, uint64_t line_id, const LinePayload& data,
                   bool dirty, uint8_t parity);
  void llc_scrub(LlcTile& t);

  void tick_dir();
  void tick_mem();
  void mem_write_dram(uint64_t line_id, const LinePayload& data, uint8_t parity,
                      uint64_t ver, bool stale);
  void mem_merge_commit(uint64_t page, int line_in_page,
                        const LinePayload& data, uint64_t ver);
  void record_commit_vers(uint64_t page);
  void mem_persist_page(uint64_t page, bool from_walk, uint64_t dram_reads);
  void mem_walk_step();
  void mem_speculate();
  void mem_subepoch();
  void mem_commit_step();
  void flush_scheduler_entry(AccessScheduler::Entry* e);

  void tick_controller();
  void start_flush(uint64_t es, double cl);
  void refresh_view();
  void update_oracle_truth();
  void finish_epoch_row();

  ElementId llc_home(uint64_t line_id) const {
    return e_llc((uint32_t)(line_id % cfg_.llc_tiles));
  }

  SimConfig cfg_;
  const Trace* trace_;
  Cycle cycle_ = 0;
  uint64_t write_stamp_ = 0;  // global write-order stamp
  bool finished_ = false;
  uint8_t parity_ = 0;  // current epoch sense at the controller

  std::unique_ptr<Network> net_;
  std::vector<std::unique_ptr<CoreTile>> cores_;
  std::vector<std::unique_ptr<LlcTile>> llcs_;
  std::unique_ptr<Directory> dir_;
  std::deque<Message> dir_inbox_;
  std::unique_ptr<MemCtrl> mem_;
  std::deque<Message> ctl_inbox_;
  NvmDevice nvm_dev_;
  NvmStore nvm_store_;
  std::vector<std::string> own_violations_;
  mutable std::vector<std::string> all_violations_;

  std::vector<DelayedMsg> delayed_;
  std::vector<std::pair<Cycle, View>> view_queue_;
  View view_;
  Cycle next_view_poll_ = 0;

  // controller
  Phase phase_ = Phase::Idle;
  Cycle next_checkpoint_ = 0;
  uint64_t cur_es_ = 0;
  double cur_cl_ = 0;
  std::optional<uint64_t> pending_es_;
  std::optional<double> pending_cl_;
  bool directive_checkpoint_ = false;
  size_t next_directive_ = 0;
  Cycle token_cycle_ = 0;
  Cycle flush_declared_cycle_ = 0;
  Cycle oracle_flush_cycle_ = 0;
  bool oracle_flush_seen_ = false;
  uint64_t committed_epochs_ = 0;
  bool final_checkpoint_done_ = false;
  bool draining_ = false;

  std::vector<uint64_t> last_cuts_;
  std::vector<EpochRow> epochs_;
  EpochRow cur_row_;
  uint64_t total_spec_persists_ = 0;
  uint64_t total_mispredictions_ = 0;
};

}  // namespace epochsim
