#pragma once

#include <string>
#include <vector>

#include "quasimodo/config.hpp"

namespace quasimodo {

struct DataEfficiencyCell {
  long size = 0;
  // mean / std over trials of the per-trial mean relative L2 prediction error
  double ens_v_mean = 0.0, ens_v_std = 0.0;  // per-control ensemble, V-drawn controls
  double aug_v_mean = 0.0, aug_v_std = 0.0;  // augmented model, V-drawn controls
  double ens_u_mean = 0.0, ens_u_std = 0.0;  // U-drawn controls, interpolated prediction
  double aug_u_mean = 0.0, aug_u_std = 0.0;
};

struct DataEfficiencyResult {
  std::vector<DataEfficiencyCell> cells;
};

// The per-control-vs-augmented ESN study: per trial, one V-actuated and one
// U-actuated training series, equal-sized prefixes per cell, relative L2
// prediction error over the evaluation horizon averaged over seeded runs.
DataEfficiencyResult run_data_efficiency(const SystemModel& system, const BoxControlSet& box,
                                         const QuantizedControlSet& V,
                                         const DataEfficiencyConfig& config, int workers);

void write_data_efficiency_csv(const std::string& path, const DataEfficiencyResult& result);

}  // namespace quasimodo
