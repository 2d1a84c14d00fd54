#include "doctest.h"

#include <set>

#include "epochsim/trace.hpp"
#include "epochsim/tracegen.hpp"

using namespace epochsim;

TEST_CASE("generator is deterministic in its parameters") {
  TraceGenParams p;
  p.cores = 3;
  p.ops_per_core = 500;
  p.seed = 42;
  CHECK(generate_trace_text(p) == generate_trace_text(p));

  TraceGenParams q = p;
  q.seed = 43;
  CHECK(generate_trace_text(p) != generate_trace_text(q));
}

TEST_CASE("generated traces parse and have the requested shape") {
  TraceGenParams p;
  p.cores = 4;
  p.ops_per_core = 300;
  p.write_frac = 1.0;
  Trace t = parse_trace_text(generate_trace_text(p), p.cores);
  CHECK(t.total_ops == 4 * 300);
  for (auto& ops : t.per_core) {
    CHECK(ops.size() == 300);
    for (auto& op : ops) CHECK(op.kind == OpKind::Write);
  }

  p.write_frac = 0.0;
  t = parse_trace_text(generate_trace_text(p), p.cores);
  for (auto& ops : t.per_core)
    for (auto& op : ops) CHECK(op.kind == OpKind::Read);
}

TEST_CASE("share_frac 0 keeps per-core footprints disjoint") {
  TraceGenParams p;
  p.cores = 4;
  p.ops_per_core = 400;
  p.pages = 64;
  p.shared_pages = 0;
  p.share_frac = 0.0;
  Trace t = parse_trace_text(generate_trace_text(p), p.cores);
  std::set<uint64_t> pages[4];
  for (uint32_t c = 0; c < 4; c++)
    for (auto& op : t.per_core[c]) pages[c].insert(op.address.page_index());
  for (uint32_t a = 0; a < 4; a++)
    for (uint32_t b = a + 1; b < 4; b++)
      for (uint64_t pg : pages[a]) CHECK(pages[b].count(pg) == 0);
}

TEST_CASE("sharing-heavy traces overlap on the shared region") {
  TraceGenParams p;
  p.cores = 2;
  p.ops_per_core = 500;
  p.pages = 16;
  p.shared_pages = 8;
  p.share_frac = 0.9;
  Trace t = parse_trace_text(generate_trace_text(p), p.cores);
  std::set<uint64_t> a, b;
  for (auto& op : t.per_core[0]) a.insert(op.address.page_index());
  for (auto& op : t.per_core[1]) b.insert(op.address.page_index());
  size_t overlap = 0;
  for (uint64_t pg : a) overlap += b.count(pg);
  CHECK(overlap > 0);
}

TEST_CASE("parameter validation") {
  TraceGenParams p;
  p.ops_per_core = 0;
  CHECK_THROWS(generate_trace_text(p));
  p = TraceGenParams{};
  p.zipf = -1.0;
  CHECK_THROWS(generate_trace_text(p));
}
