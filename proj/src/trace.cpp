#include "epochsim/trace.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace epochsim {

namespace {

[[noreturn]] void fail(int lineno, const std::string& what) {
  throw TraceError("trace line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

Trace parse_trace(std::istream& in, uint32_t core_count) {
  Trace t;
  t.per_core.resize(core_count);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    lineno++;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;

    if (tok == "!") {
      std::string verb;
      if (!(ls >> verb)) fail(lineno, "empty directive");
      uint64_t at = t.per_core.empty() ? 0 : t.per_core[0].size();
      if (verb == "CHECKPOINT") {
        t.directives.push_back({DirectiveKind::Checkpoint, at});
      } else if (verb == "SET") {
        std::string what;
        if (!(ls >> what)) fail(lineno, "SET needs a target");
        if (what == "ES") {
          uint64_t v;
          if (!(ls >> v)) fail(lineno, "SET ES needs a cycle count");
          t.directives.push_back({DirectiveKind::SetEs, at, v, 0.0});
        } else if (what == "CL") {
          double v;
          if (!(ls >> v)) fail(lineno, "SET CL needs a value in seconds");
          t.directives.push_back({DirectiveKind::SetCl, at, 0, v});
        } else {
          fail(lineno, "unknown SET target '" + what + "'");
        }
      } else {
        fail(lineno, "unknown directive '" + verb + "'");
      }
      continue;
    }

    uint32_t core;
    try {
      size_t pos = 0;
      unsigned long c = std::stoul(tok, &pos, 10);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      core = (uint32_t)c;
    } catch (const std::exception&) {
      fail(lineno, "bad core id '" + tok + "'");
    }
    if (core >= core_count)
      fail(lineno, "core " + std::to_string(core) + " out of range (core_count=" +
                       std::to_string(core_count) + ")");

    std::string kind_s, addr_s;
    if (!(ls >> kind_s >> addr_s)) fail(lineno, "expected '<core> <R|W> 0x<hex>'");
    OpKind kind;
    if (kind_s == "R") kind = OpKind::Read;
    else if (kind_s == "W") kind = OpKind::Write;
    else fail(lineno, "bad op kind '" + kind_s + "' (expected R or W)");

    if (addr_s.size() < 3 || addr_s[0] != '0' || (addr_s[1] != 'x' && addr_s[1] != 'X'))
      fail(lineno, "address must be 0x-prefixed hex");
    uint64_t addr;
    try {
      size_t pos = 0;
      addr = std::stoull(addr_s.substr(2), &pos, 16);
      if (pos != addr_s.size() - 2) throw std::invalid_argument(addr_s);
    } catch (const std::exception&) {
      fail(lineno, "bad address '" + addr_s + "'");
    }
    if (addr > PhysicalAddress::kMax) fail(lineno, "address exceeds 48 bits");

    std::string extra;
    if (ls >> extra) fail(lineno, "trailing junk '" + extra + "'");

    uint64_t seq = t.per_core[core].size();
    t.per_core[core].push_back({core, kind, PhysicalAddress{addr}, seq});
    t.total_ops++;
  }
  return t;
}

Trace parse_trace_text(const std::string& text, uint32_t core_count) {
  std::istringstream in(text);
  return parse_trace(in, core_count);
}

Trace load_trace(const std::string& path, uint32_t core_count) {
  std::ifstream f(path);
  if (!f) throw TraceError("cannot open trace file: " + path);
  return parse_trace(f, core_count);
}

}  // namespace epochsim
