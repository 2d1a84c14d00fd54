#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "epochsim/nvm.hpp"
#include "epochsim/sim.hpp"
#include "epochsim/types.hpp"

namespace epochsim {

// Omniscient run observer: shadows every performed write into a golden
// word map, logs rf edges and per-core cuts, and cross-checks the NVM
// image against the golden committed state at every commit. Read-only
// with respect to the simulator.
class GlobalObserver : public Observer {
 public:
  explicit GlobalObserver(Simulator& sim) : sim_(&sim) { sim.observer = this; }

  void on_write_perform(uint32_t core, uint64_t seq, uint64_t word_addr,
                        uint8_t sense) override;
  void on_read_complete(uint32_t core, uint64_t seq, uint64_t word_addr,
                        ValueTag value) override;
  void on_cut(uint32_t core, uint64_t completed_ops, uint64_t epoch) override;
  void on_flush_declared(Cycle cycle, uint64_t epoch) override;
  void on_commit(Cycle cycle, uint64_t epoch) override;

  // Fig.-4 property over the whole run: no rf edge from a post-cut write
  // into a pre-cut read, for any epoch. Appends to errors() on failure.
  bool check_consistent_cut();

  const std::vector<std::string>& errors() const { return errors_; }
  bool clean() const { return errors_.empty(); }

  // Golden committed image per epoch (page -> block content).
  const std::map<uint64_t, std::map<uint64_t, Block>>& images() const {
    return images_;
  }
  const std::map<uint64_t, std::map<uint32_t, RegBlob>>& blobs() const {
    return expected_blobs_;
  }
  // cuts()[epoch][core] = completed-op count at that core's token.
  const std::map<uint64_t, std::vector<uint64_t>>& cuts() const {
    return cuts_;
  }
  uint64_t reads_logged() const { return reads_.size(); }

 private:
  struct ReadRec {
    uint32_t core;
    uint64_t seq;
    ValueTag value;
  };

  Simulator* sim_;
  std::map<uint64_t, ValueTag> pending_[2];  // word addr -> tag, by sense
  std::map<uint64_t, Block> committed_;      // rolling golden image
  std::map<uint64_t, std::map<uint64_t, Block>> images_;
  std::map<uint64_t, std::map<uint32_t, RegBlob>> expected_blobs_;
  std::map<uint64_t, std::vector<uint64_t>> cuts_;
  std::vector<ReadRec> reads_;
  std::vector<std::string> errors_;
};

// Crash-point replay: rebuild the NVM image after every prefix of the
// device journal and require recovery to land bit-exactly on a committed
// epoch image. Sweeps every commit-machinery step plus random points.
struct CrashCheckResult {
  uint64_t points_checked = 0;
  uint64_t failures = 0;
  std::vector<std::string> errors;
};
CrashCheckResult check_crash_recovery(const Simulator& sim,
                                      const GlobalObserver& obs,
                                      uint64_t random_points, uint64_t seed);

// Standalone randomized flush-termination campaign on a bare Network:
// random torus, random per-link delays, random traffic with a deferred
// (directory-like) element, token at a random time. Checks the
// distributed completion against a brute-force clean-cycle oracle.
struct NocRunResult {
  bool completed = false;
  bool clean_at_completion = false;
  bool oracle_order_ok = false;  // declared >= oracle clean cycle
  Cycle declared = 0;
  Cycle oracle = 0;
  std::vector<std::string> violations;
  bool detected() const {  // for mutated (negative-control) runs
    return !violations.empty() || !clean_at_completion || !oracle_order_ok ||
           !completed;
  }
  bool ok() const {
    return completed && clean_at_completion && oracle_order_ok &&
           violations.empty();
  }
};
NocRunResult run_noc_flush_trial(uint64_t seed, bool mut_token_bypass,
                                 bool mut_no_dir_adjust);

}  // namespace epochsim
