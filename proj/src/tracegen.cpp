#include "epochsim/tracegen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

namespace epochsim {

namespace {

// Inverse-CDF sampler over ranks 1..n with p(k) ~ 1/k^s.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double s) : cdf_(n) {
    double acc = 0;
    for (uint64_t k = 0; k < n; k++) {
      acc += 1.0 / std::pow((double)(k + 1), s);
      cdf_[k] = acc;
    }
    for (auto& v : cdf_) v /= acc;
  }
  uint64_t sample(double u) const {
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return (uint64_t)(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

std::string generate_trace_text(const TraceGenParams& p) {
  if (p.cores == 0 || p.ops_per_core == 0 || p.pages == 0)
    throw std::invalid_argument("trace generator params must be positive");
  if (p.zipf < 0) throw std::invalid_argument("zipf skew must be >= 0");

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ZipfSampler zipf(p.pages, p.zipf);
  ZipfSampler shared_zipf(p.shared_pages ? p.shared_pages : 1, p.zipf);

  // Region layout: shared pages first, then one private span per core.
  const uint64_t shared_base = 16;
  auto private_base = [&](uint32_t core) {
    return shared_base + p.shared_pages + (uint64_t)core * p.pages;
  };

  std::string out;
  out.reserve(p.cores * p.ops_per_core * 24);
  char line[64];
  for (uint64_t i = 0; i < p.ops_per_core; i++) {
    for (uint32_t c = 0; c < p.cores; c++) {
      uint64_t page;
      if (p.shared_pages && uni(rng) < p.share_frac)
        page = shared_base + shared_zipf.sample(uni(rng));
      else
        page = private_base(c) + zipf.sample(uni(rng));
      uint64_t offset = (rng() % 32) * 8;  // word-aligned within the page
      uint64_t addr = (page << 8) | offset;
      char kind = uni(rng) < p.write_frac ? 'W' : 'R';
      std::snprintf(line, sizeof line, "%u %c 0x%llx\n", c, kind,
                    (unsigned long long)addr);
      out += line;
    }
  }
  return out;
}

void generate_trace_file(const TraceGenParams& p, const std::string& path) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw std::runtime_error("cannot write trace: " + path);
  o << generate_trace_text(p);
}

}  // namespace epochsim
