#include "epochsim/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace epochsim {

void SimConfig::validate() const {
  if (core_count == 0) throw ConfigError("core_count must be positive");
  if (frequency_hz == 0) throw ConfigError("frequency_hz must be positive");
  if (kPageBytes % kLineBytes != 0)
    throw ConfigError("line size must divide page size");
  if (llc_tiles == 0) throw ConfigError("llc_tiles must be positive");
  if (noc_width < 2 || noc_height < 2)
    throw ConfigError("torus requires at least 2x2 routers");
  if (link_delay < 1 || l1.latency < 1 || l2.latency < 1 || llc.latency < 1 ||
      dram_latency < 1 || nvm_read_latency < 1 || nvm_write_latency < 1)
    throw ConfigError("all latencies must be at least 1 cycle");
  uint64_t cl = cl_target_cycles();
  if (cl == 0) throw ConfigError("CL target converts to zero cycles");
  if (cl >= epoch_size_cycles)
    throw ConfigError("CL target must be below the epoch size");
  if (scrubbing_step == 0 || scrubbing_granularity == 0 ||
      memory_walk_step == 0)
    throw ConfigError("tunables must be positive");
  if (report_interval == 0) throw ConfigError("report_interval must be positive");
  // Every element (cores + tiles + directory + memctrl + controller) needs a
  // router slot; elements share routers so only a loose bound applies here.
}

namespace {

uint64_t to_u64(const std::string& k, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t r = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for key '" + k + "': " + v);
  }
}

double to_dbl(const std::string& k, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for key '" + k + "': " + v);
  }
}

bool to_bool(const std::string& k, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config: bad boolean for key '" + k + "': " + v);
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  SimConfig c;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    lineno++;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));

    if (key == "core_count") c.core_count = (uint32_t)to_u64(key, val);
    else if (key == "frequency_hz") c.frequency_hz = to_u64(key, val);
    else if (key == "l1_sets") c.l1.sets = (uint32_t)to_u64(key, val);
    else if (key == "l1_ways") c.l1.ways = (uint32_t)to_u64(key, val);
    else if (key == "l1_latency") c.l1.latency = (uint32_t)to_u64(key, val);
    else if (key == "l2_sets") c.l2.sets = (uint32_t)to_u64(key, val);
    else if (key == "l2_ways") c.l2.ways = (uint32_t)to_u64(key, val);
    else if (key == "l2_latency") c.l2.latency = (uint32_t)to_u64(key, val);
    else if (key == "llc_sets") c.llc.sets = (uint32_t)to_u64(key, val);
    else if (key == "llc_ways") c.llc.ways = (uint32_t)to_u64(key, val);
    else if (key == "llc_latency") c.llc.latency = (uint32_t)to_u64(key, val);
    else if (key == "llc_tiles") c.llc_tiles = (uint32_t)to_u64(key, val);
    else if (key == "noc_width") c.noc_width = (uint32_t)to_u64(key, val);
    else if (key == "noc_height") c.noc_height = (uint32_t)to_u64(key, val);
    else if (key == "link_delay") c.link_delay = (uint32_t)to_u64(key, val);
    else if (key == "dram_latency") c.dram_latency = (uint32_t)to_u64(key, val);
    else if (key == "nvm_read_latency") c.nvm_read_latency = (uint32_t)to_u64(key, val);
    else if (key == "nvm_write_latency") c.nvm_write_latency = (uint32_t)to_u64(key, val);
    else if (key == "nvm_banks") c.nvm_banks = (uint32_t)to_u64(key, val);
    else if (key == "epoch_size_cycles") c.epoch_size_cycles = to_u64(key, val);
    else if (key == "cl_target_seconds") c.cl_target_seconds = to_dbl(key, val);
    else if (key == "scrubbing_step") c.scrubbing_step = (uint32_t)to_u64(key, val);
    else if (key == "scrubbing_granularity") c.scrubbing_granularity = (uint32_t)to_u64(key, val);
    else if (key == "memory_walk_step") c.memory_walk_step = (uint32_t)to_u64(key, val);
    else if (key == "report_interval") c.report_interval = (uint32_t)to_u64(key, val);
    else if (key == "op_gap") c.op_gap = (uint32_t)to_u64(key, val);
    else if (key == "seed") c.seed = to_u64(key, val);
    else if (key == "predictor") c.predictor_enabled = to_bool(key, val);
    else if (key == "scheduler") c.scheduler_enabled = to_bool(key, val);
    else if (key == "timer") c.timer_enabled = to_bool(key, val);
    else if (key == "mut_token_priority_bypass") c.mut_token_priority_bypass = to_bool(key, val);
    else if (key == "mut_no_dir_adjust") c.mut_no_dir_adjust = to_bool(key, val);
    else
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
  }
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const SimConfig& c) {
  std::ostringstream o;
  o << "core_count=" << c.core_count << "\n";
  o << "frequency_hz=" << c.frequency_hz << "\n";
  o << "l1_sets=" << c.l1.sets << "\nl1_ways=" << c.l1.ways
    << "\nl1_latency=" << c.l1.latency << "\n";
  o << "l2_sets=" << c.l2.sets << "\nl2_ways=" << c.l2.ways
    << "\nl2_latency=" << c.l2.latency << "\n";
  o << "llc_sets=" << c.llc.sets << "\nllc_ways=" << c.llc.ways
    << "\nllc_latency=" << c.llc.latency << "\n";
  o << "llc_tiles=" << c.llc_tiles << "\n";
  o << "noc_width=" << c.noc_width << "\nnoc_height=" << c.noc_height
    << "\nlink_delay=" << c.link_delay << "\n";
  o << "dram_latency=" << c.dram_latency << "\nnvm_read_latency="
    << c.nvm_read_latency << "\nnvm_write_latency=" << c.nvm_write_latency
    << "\nnvm_banks=" << c.nvm_banks << "\n";
  o << "epoch_size_cycles=" << c.epoch_size_cycles << "\n";
  o << "cl_target_seconds=" << c.cl_target_seconds << "\n";
  o << "scrubbing_step=" << c.scrubbing_step << "\nscrubbing_granularity="
    << c.scrubbing_granularity << "\nmemory_walk_step=" << c.memory_walk_step
    << "\n";
  o << "report_interval=" << c.report_interval << "\n";
  o << "op_gap=" << c.op_gap << "\n";
  o << "seed=" << c.seed << "\n";
  o << "predictor=" << (c.predictor_enabled ? "on" : "off") << "\n";
  o << "scheduler=" << (c.scheduler_enabled ? "on" : "off") << "\n";
  o << "timer=" << (c.timer_enabled ? "on" : "off") << "\n";
  return o.str();
}

}  // namespace epochsim
