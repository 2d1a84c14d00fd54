#pragma once

#include <string>

#include "epochsim/sim.hpp"

namespace epochsim {

// Per-epoch CSV. Columns are a stable contract (golden-file tested):
// header first, '.' decimal separator, LF endings.
std::string csv_header();
std::string csv_row(const EpochRow& r, const SimConfig& cfg);
std::string report_csv(const Simulator& sim);
void write_report_csv(const Simulator& sim, const std::string& path);

}  // namespace epochsim
