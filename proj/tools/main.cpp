#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "epochsim/config.hpp"
#include "epochsim/harness.hpp"
#include "epochsim/report.hpp"
#include "epochsim/sim.hpp"
#include "epochsim/trace.hpp"
#include "epochsim/tracegen.hpp"

using namespace epochsim;

namespace {

struct RunOpts {
  std::string config_path;
  std::string trace_path;
  std::string out_path;
  bool verify = false;
  double cl = -1;
  uint64_t es = 0;
  int predictor = -1;  // -1 = leave as configured
  int scheduler = -1;
  uint64_t seed = 0;
};

SimConfig make_config(const RunOpts& o) {
  SimConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  if (o.cl >= 0) cfg.cl_target_seconds = o.cl;
  if (o.es) cfg.epoch_size_cycles = o.es;
  if (o.predictor >= 0) cfg.predictor_enabled = o.predictor != 0;
  if (o.scheduler >= 0) cfg.scheduler_enabled = o.scheduler != 0;
  if (o.seed) cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write: " + path);
    f << text;
  }
}

int cmd_run(const RunOpts& o) {
  SimConfig cfg = make_config(o);
  Trace trace = load_trace(o.trace_path, cfg.core_count);
  Simulator sim(cfg, trace);
  GlobalObserver obs(sim);
  sim.run();
  emit(report_csv(sim), o.out_path);

  bool infeasible = !sim.epochs().empty();
  for (const EpochRow& r : sim.epochs())
    if (r.cl_target_cycles >= r.cl_min_cycles) infeasible = false;
  if (infeasible) {
    std::cerr << "error: CL target is below the measured CL_min floor in "
                 "every epoch (infeasible CL)\n";
    return 2;
  }
  if (o.verify) {
    obs.check_consistent_cut();
    std::vector<std::string> all = obs.errors();
    for (const auto& v : sim.violations()) all.push_back(v);
    for (const auto& e : all) std::cerr << "verify: " << e << "\n";
    std::cerr << "verify: " << (all.empty() ? "PASS" : "FAIL") << "\n";
    return all.empty() ? 0 : 1;
  }
  return 0;
}

int cmd_sweep(const RunOpts& o, const std::string& cl_list,
              const std::string& es_list) {
  auto parse_list = [](const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    return v;
  };
  bool by_cl = !cl_list.empty();
  std::vector<double> points = parse_list(by_cl ? cl_list : es_list);
  if (points.size() < 2)
    throw std::runtime_error("sweep needs at least 2 points");

  SimConfig base = make_config(o);
  Trace trace = load_trace(o.trace_path, base.core_count);

  std::string combined = "point," + csv_header();
  std::string summary = by_cl ? "cl,max_cl_obs_s,wa\n" : "es,max_cl_obs_s,wa\n";
  for (double pt : points) {
    SimConfig cfg = base;
    if (by_cl)
      cfg.cl_target_seconds = pt;
    else
      cfg.epoch_size_cycles = (uint64_t)pt;
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      std::cerr << "sweep point " << pt << " infeasible: " << e.what() << "\n";
      continue;
    }
    Simulator sim(cfg, trace);
    sim.run();
    double max_cl = 0, wa_sum = 0;
    for (const EpochRow& r : sim.epochs()) {
      char pre[64];
      std::snprintf(pre, sizeof pre, "%g,", pt);
      combined += pre + csv_row(r, cfg);
      max_cl = std::max(max_cl,
                        (double)r.cl_obs_cycles / (double)cfg.frequency_hz);
      wa_sum += r.wa;
    }
    char row[96];
    std::snprintf(row, sizeof row, "%g,%.9f,%.6f\n", pt, max_cl,
                  sim.epochs().empty() ? 0.0
                                       : wa_sum / (double)sim.epochs().size());
    summary += row;
  }
  emit(combined + summary, o.out_path);
  return 0;
}

int cmd_verify(const std::string& campaign, int runs, uint64_t seed) {
  int failures = 0;
  if (campaign == "noc" || campaign == "all") {
    int bad = 0;
    for (int i = 0; i < runs; i++) {
      auto r = run_noc_flush_trial(seed + (uint64_t)i, false, false);
      if (!r.ok()) {
        bad++;
        for (const auto& v : r.violations)
          std::cerr << "noc run " << i << ": " << v << "\n";
      }
    }
    std::printf("noc flush campaign: %d/%d clean %s\n", runs - bad, runs,
                bad ? "FAIL" : "PASS");
    failures += bad;
  }
  if (campaign == "crash" || campaign == "cut" || campaign == "oracle" ||
      campaign == "all") {
    TraceGenParams p;
    p.ops_per_core = 4000;
    p.share_frac = 0.3;
    p.seed = seed;
    SimConfig cfg;
    cfg.epoch_size_cycles = 120000;
    cfg.cl_target_seconds = 0.004;
    Trace trace = parse_trace_text(generate_trace_text(p), cfg.core_count);
    Simulator sim(cfg, trace);
    sim.nvm().journaling = true;
    GlobalObserver obs(sim);
    sim.run();
    obs.check_consistent_cut();
    auto crash = check_crash_recovery(sim, obs, 200, seed);
    int bad = (int)(obs.errors().size() + sim.violations().size() +
                    crash.failures);
    for (const auto& e : obs.errors()) std::cerr << e << "\n";
    for (const auto& e : crash.errors) std::cerr << e << "\n";
    std::printf("cut/crash/oracle campaign: %s (%llu crash points)\n",
                bad ? "FAIL" : "PASS",
                (unsigned long long)crash.points_checked);
    failures += bad;
  }
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epoch-based NVM checkpointing simulator"};
  app.require_subcommand(1);

  RunOpts o;
  std::string cl_list, es_list;
  TraceGenParams gp;
  std::string gen_out;
  std::string campaign = "all";
  int verify_runs = 100;
  uint64_t verify_seed = 1;

  auto add_common = [&](CLI::App* c, bool need_trace) {
    c->add_option("--config", o.config_path, "key=value config file");
    auto* t = c->add_option("--trace", o.trace_path, "trace file");
    if (need_trace) t->required();
    c->add_option("--out", o.out_path, "output CSV ('-' = stdout)");
    c->add_option("--cl", o.cl, "CL target override, seconds");
    c->add_option("--es", o.es, "ES override, cycles");
    c->add_option("--predictor", o.predictor, "0/1 predictor override");
    c->add_option("--scheduler", o.scheduler, "0/1 scheduler override");
    c->add_option("--seed", o.seed, "seed override");
  };

  CLI::App* run = app.add_subcommand("run", "simulate one trace");
  add_common(run, true);
  run->add_flag("--verify", o.verify, "run the in-loop oracles");

  CLI::App* sweep = app.add_subcommand("sweep", "CL or ES sweep");
  add_common(sweep, true);
  sweep->add_option("--cl-list", cl_list, "comma-separated CL points (s)");
  sweep->add_option("--es-list", es_list, "comma-separated ES points (cycles)");

  CLI::App* gen = app.add_subcommand("gen-trace", "synthesize a trace");
  gen->add_option("--cores", gp.cores);
  gen->add_option("--ops", gp.ops_per_core);
  gen->add_option("--pages", gp.pages);
  gen->add_option("--shared-pages", gp.shared_pages);
  gen->add_option("--zipf", gp.zipf);
  gen->add_option("--write-frac", gp.write_frac);
  gen->add_option("--share-frac", gp.share_frac);
  gen->add_option("--seed", gp.seed);
  gen->add_option("--out", gen_out)->required();

  CLI::App* verify = app.add_subcommand("verify", "verification campaigns");
  verify->add_option("--campaign", campaign, "noc|cut|crash|oracle|all");
  verify->add_option("--runs", verify_runs, "randomized run count");
  verify->add_option("--seed", verify_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(o);
    if (sweep->parsed()) {
      if (cl_list.empty() == es_list.empty())
        throw std::runtime_error("sweep needs exactly one of --cl-list / --es-list");
      return cmd_sweep(o, cl_list, es_list);
    }
    if (gen->parsed()) {
      generate_trace_file(gp, gen_out);
      return 0;
    }
    if (verify->parsed()) return cmd_verify(campaign, verify_runs, verify_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
