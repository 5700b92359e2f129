#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lvef/measurement.hpp"
#include "lvef/stochastics.hpp"

namespace lvef {

// Scale applied to the literature sds (18.1 / 8.8) in the "concordant"
// preset, chosen so the visual - Simpson paired difference has sd near 4
// points once visual rounding is included.
inline constexpr double kConcordantNoiseFactor = 0.2;

struct SimConfig {
  std::size_t n_patients = 1366;
  double true_lvef_mean = 55.78;
  double true_lvef_sd = 11.37;
  double visual_noise_sd = 18.1;
  double simpson_noise_sd = 8.8;
  double visual_rounding = 5.0;
  double simpson_rounding = 0.1;
  // Per-day hazard at true LVEF 50; about 15% one-year event rate.
  double baseline_hazard = 4.45e-4;
  double log_hazard_per_lvef_point = -0.0152;
  double censor_horizon = 365.0;
  double lvef_min = 1.0;
  double lvef_max = 99.0;
  std::uint64_t seed = 0;

  static SimConfig preset(std::string_view name);  // "default" or "concordant"
  void validate() const;
};

struct SimulatedPatient {
  double true_lvef = 0.0;
  double raw_event_time = 0.0;  // before censoring
  PairedMeasurement measurement;
};

struct SyntheticCohort {
  std::vector<SimulatedPatient> records;
  SimConfig config;

  std::vector<PairedMeasurement> measurements() const;
  std::vector<double> true_lvef() const;
};

// Rounds to the nearest multiple of grid (halves away from zero).
double round_to_grid(double value, double grid);

SyntheticCohort simulate(const SimConfig& config, RngStream& stream);

double rmse_vs_truth(const SyntheticCohort& cohort, std::span<const double> estimates);

}  // namespace lvef
