#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "lvef/measurement.hpp"

namespace lvef {

// How the instrument sigmas enter the precision weights.
//   paper_sd: weights are the sigmas as given (reproduces the published
//             reduction of about -33%).
//   variance: weights are sigma^2, the textbook conjugate-normal update.
enum class FusionMode { paper_sd, variance };

std::string_view to_string(FusionMode mode) noexcept;
FusionMode parse_fusion_mode(std::string_view text);

// Cohort-level measurement error of each instrument, in LVEF percentage points.
struct InstrumentSigma {
  double visual_sigma = 18.1;
  double simpson_sigma = 8.8;
  FusionMode mode = FusionMode::paper_sd;

  // Throws invalid_parameter unless both sigmas are finite and > 0.
  void validate() const;
};

struct FusedEstimate {
  double theta = 0.0;          // posterior LVEF, %
  double theta_sigma = 0.0;    // posterior spread, %
  double omega = 0.0;          // Simpson precision / visual precision
  double total_variation = 0.0;
  double relative_reduction = 0.0;  // -1 / (omega + 1)
};

FusedEstimate fuse(double visual, double simpson, const InstrumentSigma& sigmas);

double precision_ratio(const InstrumentSigma& sigmas);
double total_variation(const InstrumentSigma& sigmas);

// (omega * S + V) / (omega + 1); identical to fuse().theta.
double theta_map(double visual, double simpson, const InstrumentSigma& sigmas);

double relative_reduction(const InstrumentSigma& sigmas);

// Element i is fuse() of record i. A failing record is reported with its index.
std::vector<FusedEstimate> fuse_cohort(std::span<const PairedMeasurement> cohort,
                                       const InstrumentSigma& sigmas);

}  // namespace lvef
