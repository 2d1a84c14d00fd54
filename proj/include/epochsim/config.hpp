#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "epochsim/types.hpp"

namespace epochsim {

struct CacheGeometry {
  uint32_t sets = 64;
  uint32_t ways = 8;
  uint32_t latency = 1;  // cycles
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration. Defaults are desk-scale; the full-size
// setup (8 cores, 3.2 GHz, 32K/256K/2M caches) remains expressible.
struct SimConfig {
  uint32_t core_count = 4;
  uint64_t frequency_hz = 20'000'000;  // desk-scale clock

  CacheGeometry l1{32, 4, 4};
  CacheGeometry l2{64, 8, 8};
  CacheGeometry llc{128, 8, 30};  // per tile
  uint32_t llc_tiles = 4;

  uint32_t noc_width = 3;
  uint32_t noc_height = 3;
  uint32_t link_delay = 2;  // cycles per hop

  uint32_t dram_latency = 40;
  uint32_t nvm_read_latency = 60;
  uint32_t nvm_write_latency = 150;
  uint32_t nvm_banks = 1;

  uint64_t epoch_size_cycles = 1'000'000;  // ES
  double cl_target_seconds = 0.005;        // CL

  // Initial tunables.
  uint32_t scrubbing_step = 32;
  uint32_t scrubbing_granularity = 1;
  uint32_t memory_walk_step = 1000;

  uint32_t report_interval = 16;  // pcount reporting period
  uint32_t op_gap = 0;            // idle cycles between ops on a core
  uint64_t seed = 1;

  bool predictor_enabled = true;
  bool scheduler_enabled = true;
  bool timer_enabled = true;

  // Fault-injection switches for the negative-control campaigns.
  bool mut_token_priority_bypass = false;
  bool mut_no_dir_adjust = false;

  uint64_t cl_target_cycles() const {
    return static_cast<uint64_t>(cl_target_seconds *
                                 static_cast<double>(frequency_hz));
  }
  uint32_t router_count() const { return noc_width * noc_height; }

  void validate() const;
};

// Parses a flat key=value text config ('#' starts a comment).
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);
std::string dump_config(const SimConfig& c);

}  // namespace epochsim
