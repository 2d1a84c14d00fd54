#include "doctest.h"

#include "epochsim/trace.hpp"

using namespace epochsim;

TEST_CASE("basic trace parse") {
  Trace t = parse_trace_text(
      "# warmup\n"
      "0 R 0x100\n"
      "1 W 0x2040\n"
      "0 W 0x108   # same line\n"
      "\n"
      "3 R 0xffffffffffff\n",
      4);
  CHECK(t.total_ops == 4);
  REQUIRE(t.per_core.size() == 4);
  CHECK(t.per_core[0].size() == 2);
  CHECK(t.per_core[1].size() == 1);
  CHECK(t.per_core[2].empty());
  CHECK(t.per_core[3].size() == 1);

  CHECK(t.per_core[0][0].kind == OpKind::Read);
  CHECK(t.per_core[0][1].kind == OpKind::Write);
  CHECK(t.per_core[0][0].seq == 0);
  CHECK(t.per_core[0][1].seq == 1);
  CHECK(t.per_core[1][0].address.raw == 0x2040);
  CHECK(t.per_core[3][0].address.raw == 0xffffffffffff);
}

TEST_CASE("directives anchor to core 0 progress") {
  Trace t = parse_trace_text(
      "0 W 0x100\n"
      "1 W 0x200\n"
      "! CHECKPOINT\n"
      "0 W 0x300\n"
      "! SET ES 250000\n"
      "! SET CL 0.0075\n",
      2);
  REQUIRE(t.directives.size() == 3);
  CHECK(t.directives[0].kind == DirectiveKind::Checkpoint);
  CHECK(t.directives[0].after_op_index == 1);  // one core-0 op before it
  CHECK(t.directives[1].kind == DirectiveKind::SetEs);
  CHECK(t.directives[1].after_op_index == 2);
  CHECK(t.directives[1].es_cycles == 250000);
  CHECK(t.directives[2].kind == DirectiveKind::SetCl);
  CHECK(t.directives[2].cl_seconds == doctest::Approx(0.0075));
}

TEST_CASE("trace parse errors") {
  CHECK_THROWS_AS(parse_trace_text("4 R 0x100\n", 4), TraceError);  // core oob
  CHECK_THROWS_AS(parse_trace_text("x R 0x100\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("0 X 0x100\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("0 R 100\n", 4), TraceError);  // no 0x
  CHECK_THROWS_AS(parse_trace_text("0 R 0xZZ\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("0 R\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("0 R 0x100 junk\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("0 R 0x1000000000000\n", 4),
                  TraceError);  // 49 bits
  CHECK_THROWS_AS(parse_trace_text("! FROB\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("! SET ES\n", 4), TraceError);
  CHECK_THROWS_AS(parse_trace_text("!\n", 4), TraceError);
  CHECK_THROWS_AS(load_trace("/nonexistent/trace", 4), TraceError);
}
