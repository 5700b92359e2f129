#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvef/errors.hpp"
#include "lvef/fusion.hpp"
#include "lvef/measurement.hpp"
#include "lvef/stochastics.hpp"
#include "lvef/survival.hpp"

namespace lvef {

enum class LvefSource { visual, simpson, assimilated };
enum class Stratum { low, mid, high };

inline constexpr std::array<Stratum, 3> kStrata{Stratum::low, Stratum::mid, Stratum::high};
inline constexpr std::array<LvefSource, 3> kSources{LvefSource::visual, LvefSource::simpson,
                                                    LvefSource::assimilated};

std::string_view to_string(LvefSource source) noexcept;
std::string_view to_string(Stratum stratum) noexcept;
LvefSource parse_source(std::string_view text);

// low: value < low_edge; mid: low_edge <= value <= high_edge; high: value > high_edge.
struct BandEdges {
  double low_edge = 35.0;
  double high_edge = 50.0;
};

struct PropagationConfig {
  LvefSource source = LvefSource::assimilated;
  std::size_t replicates = 1000;
  double horizon = 365.0;
  BandEdges band_edges;
  // Spreads used for the visual and Simpson sources; zero is allowed here
  // (no measurement noise). The assimilated source uses each patient's
  // theta_sigma.
  InstrumentSigma sigmas;
  double clamp_min = 1.0;
  double clamp_max = 99.0;
  std::uint64_t seed = 0;
  // Worker threads for the replicate fan-out; 0 picks the hardware count.
  unsigned threads = 0;
  // Hazard ratio is reported per this many points of LVEF decrease.
  double hr_delta = 5.0;

  void validate() const;
};

struct ReplicateResult {
  std::size_t replicate_index = 0;
  // nullopt marks a stratum with no patients in this replicate.
  std::array<std::optional<double>, 3> event_rate;
  std::optional<double> hazard_ratio;
  // Set when hazard_ratio is absent.
  std::optional<ErrorCode> hr_failure;
  std::string hr_failure_detail;
  std::array<std::optional<KmCurve>, 3> curves;
};

struct ScalarBand {
  std::size_t count = 0;  // replicates contributing
  double mean = 0.0;
  double p025 = 0.0;
  double p50 = 0.0;
  double p975 = 0.0;

  double width() const noexcept { return p975 - p025; }
};

struct KmBand {
  std::vector<double> times;
  std::vector<double> lower;
  std::vector<double> mean;
  std::vector<double> upper;
};

struct PropagationSummary {
  LvefSource source = LvefSource::assimilated;
  std::size_t replicates = 0;
  // Absent when a stratum was empty in every replicate.
  std::array<std::optional<ScalarBand>, 3> event_rate;
  ScalarBand hazard_ratio;
  std::size_t hr_failures = 0;
  std::map<std::string, std::size_t> hr_failure_reasons;
  // Event-rate (1 - S) bands on the union grid of replicate event times.
  std::array<std::optional<KmBand>, 3> km_bands;
};

// One realized LVEF per patient: Normal(center, spread) clamped to the config range.
std::vector<double> realize_lvef(std::span<const PairedMeasurement> cohort,
                                 std::span<const FusedEstimate> fused,
                                 const PropagationConfig& config, RngStream& stream);

std::vector<Stratum> stratify(std::span<const double> lvef_values, const BandEdges& edges);

ReplicateResult run_replicate(std::span<const PairedMeasurement> cohort,
                              std::span<const FusedEstimate> fused,
                              const PropagationConfig& config, RngStream& stream);

// The analysis on the unperturbed centers, treating each LVEF as exact.
ReplicateResult point_analysis(std::span<const PairedMeasurement> cohort,
                               std::span<const FusedEstimate> fused,
                               const PropagationConfig& config);

// Replicate r runs on substream (seed, r); results are merged in index order.
PropagationSummary propagate(std::span<const PairedMeasurement> cohort,
                             std::span<const FusedEstimate> fused,
                             const PropagationConfig& config);

}  // namespace lvef
