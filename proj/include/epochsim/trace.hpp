#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "epochsim/address.hpp"
#include "epochsim/types.hpp"

namespace epochsim {

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trace directives appear inline in core 0's stream and fire when core 0
// reaches that point in its op sequence.
enum class DirectiveKind : uint8_t { Checkpoint, SetEs, SetCl };

struct Directive {
  DirectiveKind kind;
  uint64_t after_op_index;  // fires once core 0 has issued this many ops
  uint64_t es_cycles = 0;
  double cl_seconds = 0.0;
};

struct MemOp {
  uint32_t core_id;
  OpKind kind;
  PhysicalAddress address;
  uint64_t seq;  // per-core op index, strictly increasing
};

struct Trace {
  std::vector<std::vector<MemOp>> per_core;
  std::vector<Directive> directives;
  uint64_t total_ops = 0;
};

// Grammar, one entry per line:
//   <core_id> <R|W> 0x<hex48>
//   ! CHECKPOINT | ! SET ES <cycles> | ! SET CL <seconds>
//   # comment
Trace parse_trace(std::istream& in, uint32_t core_count);
Trace parse_trace_text(const std::string& text, uint32_t core_count);
Trace load_trace(const std::string& path, uint32_t core_count);

}  // namespace epochsim
