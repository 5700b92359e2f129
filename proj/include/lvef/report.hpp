#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lvef/calibration.hpp"
#include "lvef/cohort_io.hpp"
#include "lvef/propagation.hpp"
#include "lvef/survival.hpp"

namespace lvef {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Substream indices reserved for the two calibration chains, disjoint from
// the replicate indices used by propagate().
inline constexpr std::uint64_t kVisualCalibrationStream = 0x8000000000000000ULL;
inline constexpr std::uint64_t kSimpsonCalibrationStream = 0x8000000000000001ULL;

// 64-bit FNV-1a, used to fingerprint the canonical run configuration.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

nlohmann::json to_json(const SampleSummary& summary);
nlohmann::json to_json(const ErrorPosterior& posterior);
nlohmann::json to_json(const ChainDiagnostics& diagnostics);
nlohmann::json to_json(const ReductionDistribution& reduction);
nlohmann::json to_json(const CoxFit& fit, double delta);
nlohmann::json to_json(const KmCurve& curve);
nlohmann::json to_json(const PropagationSummary& summary);
nlohmann::json to_json(const ReplicateResult& point);

struct ErrorCalibrationRun {
  ErrorPosterior visual;
  ErrorPosterior simpson;
  ReductionDistribution reduction;
};

// Calibrates both instruments on their reserved substreams of seed and pairs
// the predictive draws into the distribution of R.
ErrorCalibrationRun run_error_calibration(const CalibrationConfig& visual,
                                          const CalibrationConfig& simpson, FusionMode mode,
                                          std::uint64_t seed);

nlohmann::json to_json(const ErrorCalibrationRun& run);

struct ReportOptions {
  std::uint64_t seed = 0;
  std::size_t replicates = 1000;
  double horizon = 365.0;
  BandEdges band_edges;
  InstrumentSigma sigmas;
  std::vector<LvefSource> sources{kSources.begin(), kSources.end()};
  unsigned threads = 0;
  std::string input_name;
};

struct AnalysisReport {
  nlohmann::json document;
  std::vector<PropagationSummary> propagation;  // one per requested source
};

// Runs fusion, error calibration, point analyses and propagation. The
// returned document carries a null "generated_at" metadata field for the
// caller to stamp.
AnalysisReport build_report(const CohortData& cohort, const ReportOptions& options);

}  // namespace lvef
