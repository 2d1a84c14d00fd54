#include "epochsim/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace epochsim {

std::string csv_header() {
  return "epoch,token_cycle,commit_cycle,cl_target_cycles,cl_obs_cycles,"
         "cl_obs_s,cl_min_cycles,block_writes,dirty_pages,wa,budget_n,"
         "modified_m,delta,rate,blocks_from_cache,blocks_from_walk,"
         "coalesced_lines,spec_persists,mispredictions,pct_dram_wa,"
         "sum_x,sum_p\n";
}

std::string csv_row(const EpochRow& r, const SimConfig& cfg) {
  char buf[512];
  double cl_obs_s = (double)r.cl_obs_cycles / (double)cfg.frequency_hz;
  std::snprintf(
      buf, sizeof buf,
      "%llu,%llu,%llu,%llu,%llu,%.9f,%llu,%llu,%llu,%.6f,%llu,%llu,%.6f,"
      "%llu,%llu,%llu,%llu,%llu,%llu,%.4f,%llu,%llu\n",
      (unsigned long long)r.epoch, (unsigned long long)r.token_cycle,
      (unsigned long long)r.commit_cycle,
      (unsigned long long)r.cl_target_cycles,
      (unsigned long long)r.cl_obs_cycles, cl_obs_s,
      (unsigned long long)r.cl_min_cycles, (unsigned long long)r.block_writes,
      (unsigned long long)r.dirty_pages, r.wa, (unsigned long long)r.budget_n,
      (unsigned long long)r.modified_m, r.delta, (unsigned long long)r.rate,
      (unsigned long long)r.blocks_from_cache,
      (unsigned long long)r.blocks_from_walk,
      (unsigned long long)r.coalesced_lines,
      (unsigned long long)r.spec_persists,
      (unsigned long long)r.mispredictions, r.pct_dram_wa,
      (unsigned long long)r.sum_x, (unsigned long long)r.sum_p);
  return buf;
}

std::string report_csv(const Simulator& sim) {
  std::string out = csv_header();
  for (const EpochRow& r : sim.epochs()) out += csv_row(r, sim.config());
  return out;
}

void write_report_csv(const Simulator& sim, const std::string& path) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw std::runtime_error("cannot write report: " + path);
  o << report_csv(sim);
}

}  // namespace epochsim
