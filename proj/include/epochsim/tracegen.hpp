#pragma once

#include <cstdint>
#include <string>

namespace epochsim {

// Synthetic trace knobs. The qualitative regimes the acceptance traces
// use: small working set (pages low, zipf high), streaming (zipf 0,
// pages large), sharing-heavy (share_frac high), high locality (zipf
// high, share_frac low).
struct TraceGenParams {
  uint32_t cores = 4;
  uint64_t ops_per_core = 20000;
  uint64_t pages = 256;        // private working-set pages per core
  uint64_t shared_pages = 32;  // extra region visible to every core
  double zipf = 0.8;           // 0 = uniform page popularity
  double write_frac = 0.5;
  double share_frac = 0.1;  // probability an access targets the shared region
  uint64_t seed = 1;
};

// Deterministic: same params -> byte-identical text.
std::string generate_trace_text(const TraceGenParams& p);
void generate_trace_file(const TraceGenParams& p, const std::string& path);

}  // namespace epochsim
