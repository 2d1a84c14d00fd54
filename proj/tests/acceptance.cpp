// Acceptance gate: one criterion per invocation (--criterion N), one
// pass/fail line on stdout, nonzero exit on failure. Run from the
// repository root so the bundled traces resolve.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "epochsim/harness.hpp"
#include "epochsim/report.hpp"
#include "epochsim/sim.hpp"
#include "epochsim/tracegen.hpp"

using namespace epochsim;

namespace {

double now_s() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

SimConfig cfg_with(uint64_t es, double cl) {
  SimConfig c;
  c.epoch_size_cycles = es;
  c.cl_target_seconds = cl;
  c.validate();
  return c;
}

Trace bundled(const std::string& name) {
  return load_trace("traces/" + name + ".trace", 4);
}

// Average per-epoch write amplification of one run.
double avg_wa(const Simulator& sim) {
  double s = 0;
  for (const auto& r : sim.epochs()) s += r.wa;
  return sim.epochs().empty() ? 0.0 : s / (double)sim.epochs().size();
}

uint64_t total_blocks(const Simulator& sim) {
  uint64_t s = 0;
  for (const auto& r : sim.epochs()) s += r.block_writes;
  return s;
}

int emit(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", n, pass ? "PASS" : "FAIL",
              detail.c_str());
  return pass ? 0 : 1;
}

char buf[512];

// --- criterion 1: CL tracking on the bundled traces -----------------------

int criterion1() {
  struct Plan {
    const char* trace;
    uint64_t es;
    std::vector<double> cls;  // 5x span each
  };
  const std::vector<Plan> plans = {
      {"high-locality", 2600000, {0.025, 0.05, 0.075, 0.1, 0.125}},
      {"streaming", 5200000, {0.05, 0.08, 0.12, 0.18, 0.25}},
      {"shared-heavy", 600000, {0.005, 0.009, 0.014, 0.02, 0.025}},
      {"small-working-set", 150000, {0.001, 0.0015, 0.0025, 0.004, 0.005}},
  };
  double worst_err = 0, worst_time = 0;
  uint64_t gated_total = 0;
  std::string fail;
  for (const auto& plan : plans) {
    Trace t = bundled(plan.trace);
    double t0 = now_s();
    uint64_t gated_here = 0;
    for (double cl : plan.cls) {
      Simulator sim(cfg_with(plan.es, cl), t);
      sim.run();
      for (const auto& r : sim.epochs()) {
        // only epochs where the target clears the measured floor with
        // margin are required to track
        if ((double)r.cl_target_cycles <= 1.2 * (double)r.cl_min_cycles)
          continue;
        gated_here++;
        double err = std::fabs((double)r.cl_obs_cycles -
                               (double)r.cl_target_cycles) /
                     (double)r.cl_target_cycles;
        if (err > worst_err) worst_err = err;
        if (err > 0.05) {
          std::snprintf(buf, sizeof buf, "%s cl=%g epoch %llu err %.2f%%",
                        plan.trace, cl, (unsigned long long)r.epoch,
                        100 * err);
          fail = buf;
        }
      }
    }
    double dt = now_s() - t0;
    if (dt > worst_time) worst_time = dt;
    if (dt > 300) {
      std::snprintf(buf, sizeof buf, "%s sweep took %.0fs (budget 300s)",
                    plan.trace, dt);
      fail = buf;
    }
    if (gated_here == 0) fail = std::string(plan.trace) + ": no epoch cleared the feasibility gate";
    gated_total += gated_here;
  }
  std::snprintf(buf, sizeof buf,
                "max |CL_obs-CL|/CL %.2f%% over %llu gated epochs, 4 traces x "
                "5 CL points (5x span), slowest trace %.0fs%s%s",
                100 * worst_err, (unsigned long long)gated_total, worst_time,
                fail.empty() ? "" : "; first failure: ", fail.c_str());
  return emit(1, fail.empty(), buf);
}

// --- criterion 2: CL and ES tradeoff monotonicity --------------------------

int criterion2() {
  const double tol = 1.01;  // 1% jitter allowance
  std::string fail;

  // WA falls (or holds) as CL relaxes
  Trace hl = bundled("high-locality");
  std::vector<double> cls = {0.002, 0.004, 0.008, 0.016, 0.025};
  std::vector<double> was;
  for (double cl : cls) {
    Simulator sim(cfg_with(600000, cl), hl);
    sim.run();
    was.push_back(avg_wa(sim));
  }
  for (size_t i = 1; i < was.size(); i++)
    if (was[i] > was[i - 1] * tol) {
      std::snprintf(buf, sizeof buf, "WA rose along CL: %.3f -> %.3f",
                    was[i - 1], was[i]);
      fail = buf;
    }

  // total persisted blocks fall with longer epochs, with diminishing returns
  Trace sws = bundled("small-working-set");
  std::vector<uint64_t> es_pts = {100000, 200000, 400000, 800000};
  std::vector<double> blocks;
  for (uint64_t es : es_pts) {
    Simulator sim(cfg_with(es, 0.001), sws);
    sim.run();
    blocks.push_back((double)total_blocks(sim));
  }
  for (size_t i = 1; i < blocks.size(); i++)
    if (blocks[i] > blocks[i - 1] * tol) {
      std::snprintf(buf, sizeof buf, "blocks rose along ES: %.0f -> %.0f",
                    blocks[i - 1], blocks[i]);
      fail = buf;
    }
  double first_step = blocks[0] - blocks[1];
  double last_step = blocks[2] - blocks[3];
  if (!(last_step < first_step)) fail = "no diminishing returns along ES";

  std::snprintf(buf, sizeof buf,
                "CL sweep WA %.3f..%.3f non-increasing; ES sweep blocks "
                "%.0f..%.0f, steps %.0f -> %.0f%s%s",
                was.front(), was.back(), blocks.front(), blocks.back(),
                first_step, last_step, fail.empty() ? "" : "; ",
                fail.c_str());
  return emit(2, fail.empty(), buf);
}

// --- criterion 3: distributed flush termination ----------------------------

int criterion3() {
  const int runs = 1000;
  int clean = 0, order_ok = 0, lemma_hits = 0;
  double t0 = now_s();
  for (int i = 0; i < runs; i++) {
    auto r = run_noc_flush_trial(1000 + (uint64_t)i, false, false);
    if (r.completed && r.clean_at_completion) clean++;
    if (r.oracle_order_ok) order_ok++;
    lemma_hits += (int)r.violations.size();
  }
  double dt = now_s() - t0;
  bool pass =
      clean == runs && order_ok == runs && lemma_hits == 0 && dt <= 600;
  std::snprintf(buf, sizeof buf,
                "assert_flush_clean %d/%d, completion >= oracle %d/%d, "
                "lemma assertions fired %d times, %.1fs",
                clean, runs, order_ok, runs, lemma_hits, dt);
  return emit(3, pass, buf);
}

// --- criterion 4: consistent cuts -----------------------------------------

struct CutRun {
  bool cut_ok = false;
  bool detected = false;  // any oracle tripped (for mutation runs)
};

CutRun one_cut_run(std::mt19937_64& rng, bool mut_bypass, bool mut_no_adjust) {
  TraceGenParams p;
  p.cores = 4;
  p.ops_per_core = 500 + rng() % 700;
  p.pages = 8 + rng() % 16;
  p.shared_pages = 8 + rng() % 16;
  p.share_frac = 0.4 + 0.4 * ((double)(rng() % 1000) / 1000.0);
  p.zipf = (double)(rng() % 100) / 100.0;
  p.write_frac = 0.5;
  p.seed = rng();

  SimConfig cfg;
  cfg.epoch_size_cycles = 20000 + rng() % 40000;
  cfg.cl_target_seconds =
      (double)(cfg.epoch_size_cycles / 5) / (double)cfg.frequency_hz;
  cfg.predictor_enabled = rng() % 2;
  cfg.scheduler_enabled = rng() % 2;
  cfg.seed = rng();
  cfg.mut_token_priority_bypass = mut_bypass;
  cfg.mut_no_dir_adjust = mut_no_adjust;

  Trace t = parse_trace_text(generate_trace_text(p), p.cores);
  Simulator sim(cfg, t);
  GlobalObserver obs(sim);
  CutRun r;
  try {
    sim.run();
  } catch (const std::exception&) {
    // a fault that wedges the flush never reaches the cycle bound in a
    // healthy build, so hitting it counts as detection
    r.cut_ok = false;
    r.detected = true;
    return r;
  }
  r.cut_ok = obs.check_consistent_cut() && obs.clean();
  r.detected = !r.cut_ok || !sim.violations().empty();
  return r;
}

int criterion4() {
  std::string fail;
  std::mt19937_64 rng(2024);
  int ok = 0;
  const int runs = 1000;
  for (int i = 0; i < runs; i++)
    if (one_cut_run(rng, false, false).cut_ok) ok++;
  if (ok != runs) {
    std::snprintf(buf, sizeof buf, "only %d/%d randomized runs consistent", ok,
                  runs);
    fail = buf;
  }

  // Scripted scenario: two cores ping-pong a flag and a payload around a
  // forced checkpoint, so cross-core rf edges straddle the cut.
  std::string text;
  for (int i = 0; i < 40; i++) {
    text += "0 W 0x1000\n1 R 0x1000\n1 W 0x1040\n0 R 0x1040\n";
    if (i == 20) text += "! CHECKPOINT\n";
  }
  Trace scripted = parse_trace_text(text, 4);
  SimConfig cfg = cfg_with(500000, 0.01);
  Simulator sim(cfg, scripted);
  GlobalObserver obs(sim);
  sim.run();
  bool scripted_ok = obs.check_consistent_cut() && obs.clean() &&
                     obs.reads_logged() > 0 && sim.committed_epoch() >= 1;
  if (!scripted_ok) fail = "scripted sharing scenario failed the cut check";

  // Negative controls: each fault must be caught within 100 runs.
  int first_bypass = -1, first_noadj = -1;
  std::mt19937_64 mrng(777);
  for (int i = 0; i < 100 && first_bypass < 0; i++)
    if (one_cut_run(mrng, true, false).detected) first_bypass = i;
  mrng.seed(777);
  for (int i = 0; i < 100 && first_noadj < 0; i++)
    if (one_cut_run(mrng, false, true).detected) first_noadj = i;
  if (first_bypass < 0) fail = "token-priority bypass went undetected in 100 runs";
  if (first_noadj < 0) fail = "missing directory adjustment went undetected in 100 runs";

  std::snprintf(buf, sizeof buf,
                "%d/%d randomized sharing runs consistent, scripted scenario "
                "%s, mutations caught at run %d and %d%s%s",
                ok, runs, scripted_ok ? "ok" : "FAILED", first_bypass,
                first_noadj, fail.empty() ? "" : "; ", fail.c_str());
  return emit(4, fail.empty(), buf);
}

// --- criterion 5: crash recovery ------------------------------------------

int criterion5() {
  std::string fail;
  // Small private L2s spill the working set to DRAM so the speculative
  // persist path is exercised; journaling captures every device step.
  TraceGenParams p;
  p.cores = 4;
  p.ops_per_core = 4000;
  p.pages = 48;
  p.shared_pages = 8;
  p.share_frac = 0.2;
  p.zipf = 0.9;
  p.seed = 31;
  SimConfig cfg = cfg_with(120000, 0.004);
  cfg.l2 = {8, 4, 8};
  cfg.llc = {16, 4, 30};

  Trace t = parse_trace_text(generate_trace_text(p), p.cores);
  Simulator sim(cfg, t);
  sim.nvm().journaling = true;
  GlobalObserver obs(sim);
  sim.run();
  if (!obs.clean() || !sim.violations().empty())
    fail = "baseline run tripped an oracle";
  if (sim.total_spec_persists() == 0)
    fail = "no speculative persists: the invariance claim would be vacuous";

  // every atomic log step of every commit, plus 200 random points
  auto crash = check_crash_recovery(sim, obs, 200, 5150);
  if (crash.failures != 0) {
    std::snprintf(buf, sizeof buf, "%llu/%llu crash points failed: %s",
                  (unsigned long long)crash.failures,
                  (unsigned long long)crash.points_checked,
                  crash.errors.empty() ? "?" : crash.errors[0].c_str());
    fail = buf;
  }

  std::snprintf(buf, sizeof buf,
                "%llu crash points (full per-commit sweep + 200 random) all "
                "recovered bit-exact committed images; %llu speculative "
                "persists in flight%s%s",
                (unsigned long long)crash.points_checked,
                (unsigned long long)sim.total_spec_persists(),
                fail.empty() ? "" : "; ", fail.c_str());
  return emit(5, fail.empty(), buf);
}

// --- criterion 6: predictor benefit ---------------------------------------

int criterion6() {
  std::string fail;
  Trace hl = bundled("high-locality");
  SimConfig on = cfg_with(600000, 0.025);
  SimConfig off = on;
  off.predictor_enabled = false;  // always-persist baseline

  Simulator sa(on, hl), sb(off, hl);
  sa.run();
  sb.run();
  double wa_on = avg_wa(sa), wa_off = avg_wa(sb);
  if (!(wa_on <= wa_off)) fail = "predictor made write amplification worse";

  double pct = 0;
  for (const auto& r : sa.epochs()) pct += r.pct_dram_wa;
  pct /= (double)sa.epochs().size();
  if (pct < 5.0 || pct > 60.0) {
    std::snprintf(buf, sizeof buf, "DRAM-side WA overhead %.1f%% outside 5-60%%",
                  pct);
    fail = buf;
  }

  std::snprintf(buf, sizeof buf,
                "WA %.3f (predictor) vs %.3f (always-persist); overhead vs "
                "perfect predictor %.1f%% (band 5-60%%)%s%s",
                wa_on, wa_off, pct, fail.empty() ? "" : "; ", fail.c_str());
  return emit(6, fail.empty(), buf);
}

// --- criterion 7: determinism and structural oracles -----------------------

int criterion7() {
  std::string fail;

  Trace sws = bundled("small-working-set");
  SimConfig cfg = cfg_with(150000, 0.002);
  Simulator a(cfg, sws), b(cfg, sws);
  a.run();
  b.run();
  if (report_csv(a) != report_csv(b) || !a.nvm().image_equals(b.nvm()))
    fail = "identical (config, trace, seed) diverged";

  // hardware walker vs flat-set oracle
  std::mt19937_64 rng(99);
  DramPageTable table;
  std::set<uint64_t> flat;
  for (int i = 0; i < 5000; i++) {
    uint64_t page = (i % 4 == 0) ? rng() % (1ull << 40) : rng() % 8192;
    table.record_write(page);
    flat.insert(page);
  }
  PageWalker w;
  w.reset(&table);
  std::set<uint64_t> walked;
  for (;;) {
    auto s = w.next(true);
    if (s.done) break;
    walked.insert(s.page);
  }
  if (walked != flat) fail = "walker enumeration diverged from the flat set";

  // the scheduler is a performance feature: it must not change content
  Trace sh = bundled("shared-heavy");
  SimConfig on = cfg_with(600000, 0.008);
  SimConfig off = on;
  off.scheduler_enabled = false;
  Simulator sa(on, sh), sb(off, sh);
  sa.run();
  sb.run();
  auto ra = sa.nvm().recover(), rb = sb.nvm().recover();
  if (!ra.ok || !rb.ok || ra.pages != rb.pages || ra.blobs != rb.blobs ||
      ra.epoch != rb.epoch)
    fail = "scheduler on/off NVM content differs";

  std::snprintf(buf, sizeof buf,
                "bit-identical CSV + NVM image on replay; walker == flat set "
                "(%zu pages); scheduler on/off recover identically "
                "(%zu pages, epoch %llu)%s%s",
                flat.size(), ra.pages.size(), (unsigned long long)ra.epoch,
                fail.empty() ? "" : "; ", fail.c_str());
  return emit(7, fail.empty(), buf);
}

}  // namespace

int main(int argc, char** argv) {
  int crit = 0;
  for (int i = 1; i < argc - 1; i++)
    if (std::strcmp(argv[i], "--criterion") == 0) crit = std::atoi(argv[i + 1]);
  switch (crit) {
    case 1: return criterion1();
    case 2: return criterion2();
    case 3: return criterion3();
    case 4: return criterion4();
    case 5: return criterion5();
    case 6: return criterion6();
    case 7: return criterion7();
    default:
      std::fprintf(stderr, "usage: acceptance --criterion <1..7>\n");
      return 2;
  }
}
