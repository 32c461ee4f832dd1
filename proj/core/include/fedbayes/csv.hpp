#pragma once

#include <ostream>
#include <span>
#include <string>

#include "fedbayes/sim.hpp"

namespace fedbayes {

/// Shortest decimal string that parses back to the same double. Keeps CSV
/// output identical across platforms for identical runs.
std::string format_double(double v);

/// Header then one row per record, '\n' line endings.
void write_run_csv(std::ostream& os, std::span<const RunRecord> records);

/// One row per grid cell; infeasible cells leave the difference columns
/// empty.
void write_sweep_csv(std::ostream& os, std::span<const SweepCell> cells);

}  // namespace fedbayes
