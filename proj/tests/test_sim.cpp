#include "doctest.h"

#include <string>

#include "epochsim/harness.hpp"
#include "epochsim/report.hpp"
#include "epochsim/sim.hpp"
#include "epochsim/tracegen.hpp"

using namespace epochsim;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.epoch_size_cycles = 30000;
  c.cl_target_seconds = 0.001;  // 20000 cycles at the desk-scale clock
  c.seed = 3;
  return c;
}

Trace small_trace(uint64_t seed = 21, double share = 0.2) {
  TraceGenParams p;
  p.cores = 4;
  p.ops_per_core = 4000;
  p.pages = 24;
  p.shared_pages = 8;
  p.share_frac = share;
  p.write_frac = 0.5;
  p.seed = seed;
  return parse_trace_text(generate_trace_text(p), p.cores);
}

}  // namespace

TEST_CASE("csv column contract") {
  CHECK(csv_header() ==
        "epoch,token_cycle,commit_cycle,cl_target_cycles,cl_obs_cycles,"
        "cl_obs_s,cl_min_cycles,block_writes,dirty_pages,wa,budget_n,"
        "modified_m,delta,rate,blocks_from_cache,blocks_from_walk,"
        "coalesced_lines,spec_persists,mispredictions,pct_dram_wa,"
        "sum_x,sum_p\n");
}

TEST_CASE("identical config+trace+seed reproduces bit-identical output") {
  SimConfig cfg = small_config();
  Trace t = small_trace();

  Simulator a(cfg, t), b(cfg, t);
  a.run();
  b.run();
  CHECK(a.now() == b.now());
  CHECK(report_csv(a) == report_csv(b));
  CHECK(a.nvm().image_equals(b.nvm()));
}

TEST_CASE("end-to-end run passes the in-loop oracles") {
  SimConfig cfg = small_config();
  Trace t = small_trace();
  Simulator sim(cfg, t);
  GlobalObserver obs(sim);
  sim.nvm().journaling = true;
  sim.run();

  CHECK(sim.finished());
  CHECK(sim.committed_epoch() >= 2);
  CHECK(sim.violations().empty());
  CHECK(obs.check_consistent_cut());
  CHECK(obs.clean());

  // recovered image must match the golden image of the last commit
  auto rec = sim.nvm().recover();
  REQUIRE(rec.ok);
  CHECK(rec.epoch == sim.committed_epoch());
  REQUIRE(!obs.images().empty());
  const auto& golden = obs.images().rbegin()->second;
  CHECK(rec.pages.size() == golden.size());
  for (auto& [page, block] : golden) {
    REQUIRE(rec.pages.count(page) == 1);
    CHECK(rec.pages.at(page) == block);
  }

  // every crash prefix lands on some committed image
  auto crash = check_crash_recovery(sim, obs, 50, 9);
  CHECK(crash.points_checked > 0);
  CHECK(crash.failures == 0);
}

TEST_CASE("flush declaration never precedes the oracle") {
  SimConfig cfg = small_config();
  Trace t = small_trace(33, 0.5);
  Simulator sim(cfg, t);
  GlobalObserver obs(sim);
  sim.run();
  CHECK(sim.violations().empty());
  CHECK(obs.clean());
}

TEST_CASE("scheduler on/off persists the same architectural content") {
  Trace t = small_trace(5);
  SimConfig on = small_config();
  on.scheduler_enabled = true;
  SimConfig off = small_config();
  off.scheduler_enabled = false;

  Simulator sa(on, t), sb(off, t);
  sa.run();
  sb.run();
  auto ra = sa.nvm().recover();
  auto rb = sb.nvm().recover();
  REQUIRE(ra.ok);
  REQUIRE(rb.ok);
  CHECK(ra.epoch == rb.epoch);
  CHECK(ra.pages == rb.pages);
  CHECK(ra.blobs == rb.blobs);
}

TEST_CASE("trace directives steer the checkpoint controller") {
  // Ten writes, a directive-forced checkpoint, ten more writes with a
  // tightened CL. The ES is huge so only directives cause mid-run commits.
  std::string text;
  for (int i = 0; i < 10; i++)
    text += "0 W 0x" + std::to_string(1000 + i) + "00\n";
  text += "! CHECKPOINT\n";
  text += "! SET CL 0.002\n";
  for (int i = 0; i < 10; i++)
    text += "0 W 0x" + std::to_string(2000 + i) + "00\n";
  Trace t = parse_trace_text(text, 1);

  SimConfig cfg;
  cfg.core_count = 1;
  cfg.epoch_size_cycles = 5'000'000;
  cfg.cl_target_seconds = 0.02;
  Simulator sim(cfg, t);
  sim.run();

  REQUIRE(sim.epochs().size() >= 2);
  CHECK(sim.violations().empty());
  // first epoch was cut by the directive, well before ES
  CHECK(sim.epochs()[0].commit_cycle < cfg.epoch_size_cycles);
  // the SET CL applies to a later epoch
  bool saw_new_cl = false;
  for (auto& r : sim.epochs())
    if (r.cl_target_cycles == (uint64_t)(0.002 * 20'000'000)) saw_new_cl = true;
  CHECK(saw_new_cl);
}

TEST_CASE("per-epoch rows are internally consistent") {
  SimConfig cfg = small_config();
  Trace t = small_trace(77);
  Simulator sim(cfg, t);
  sim.run();
  REQUIRE(!sim.epochs().empty());
  for (auto& r : sim.epochs()) {
    CHECK(r.commit_cycle > r.token_cycle);
    CHECK(r.cl_obs_cycles == r.commit_cycle - r.token_cycle);
    CHECK(r.block_writes ==
          r.blocks_from_cache + r.blocks_from_walk + r.spec_persists);
    CHECK(r.block_writes >= r.dirty_pages);
    if (r.dirty_pages)
      CHECK(r.wa == doctest::Approx((double)r.block_writes / r.dirty_pages));
    CHECK(r.sum_x == r.sum_p);  // flush terminated balanced
  }
}
