#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvef/fusion.hpp"
#include "lvef/measurement.hpp"
#include "lvef/propagation.hpp"

namespace lvef {

// Canonical interchange header; simulator output appends true_lvef.
inline constexpr std::string_view kCohortHeader =
    "patient_id,visual_lvef,simpson_lvef,time_days,event";

struct CohortData {
  std::vector<PairedMeasurement> records;
  // Filled only when the optional true_lvef column is present.
  std::vector<double> true_lvef;
  std::vector<std::string> warnings;
};

// Throws schema (missing column), row (bad value, with the 1-based line
// number as index) or duplicate (repeated patient_id) errors.
CohortData parse_cohort_csv(std::istream& in);
CohortData read_cohort_csv(const std::filesystem::path& path);

// Fixed 4-decimal rendering used by every CSV writer.
std::string format_fixed4(double value);

void write_cohort_csv(std::ostream& out, std::span<const PairedMeasurement> records,
                      std::span<const double> true_lvef = {});

void write_fused_csv(std::ostream& out, std::span<const PairedMeasurement> records,
                     std::span<const FusedEstimate> fused);

// Long format: source,stratum,time_days,lower,mean,upper. Throws
// invalid_state if any row violates lower <= mean <= upper.
void write_km_band_csv(std::ostream& out, const PropagationSummary& summary);
void write_km_band_csv(const std::filesystem::path& destination,
                       const PropagationSummary& summary);

}  // namespace lvef
