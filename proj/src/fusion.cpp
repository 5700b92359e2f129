#include "lvef/fusion.hpp"

#include <cmath>
#include <string>

#include "lvef/errors.hpp"

namespace lvef {

namespace {

struct Weights {
  double visual;
  double simpson;
};

// Spread of each instrument in the active mode's units (sd or variance).
Weights mode_weights(const InstrumentSigma& sigmas) {
  sigmas.validate();
  if (sigmas.mode == FusionMode::variance) {
    return {sigmas.visual_sigma * sigmas.visual_sigma,
            sigmas.simpson_sigma * sigmas.simpson_sigma};
  }
  return {sigmas.visual_sigma, sigmas.simpson_sigma};
}

void check_lvef(double value, const char* name) {
  if (!(value >= 0.0 && value <= 100.0)) {
    throw Error(ErrorCode::domain,
                std::string(name) + " LVEF " + std::to_string(value) + " outside [0, 100]");
  }
}

}  // namespace

std::string_view to_string(FusionMode mode) noexcept {
  return mode == FusionMode::variance ? "variance" : "paper-sd";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "paper-sd") return FusionMode::paper_sd;
  if (text == "variance") return FusionMode::variance;
  throw Error(ErrorCode::invalid_parameter,
              "unknown fusion mode '" + std::string(text) + "' (expected paper-sd or variance)");
}

void InstrumentSigma::validate() const {
  if (!(visual_sigma > 0.0) || !std::isfinite(visual_sigma) || !(simpson_sigma > 0.0) ||
      !std::isfinite(simpson_sigma)) {
    throw Error(ErrorCode::invalid_parameter, "instrument sigmas must be finite and > 0");
  }
}

FusedEstimate fuse(double visual, double simpson, const InstrumentSigma& sigmas) {
  check_lvef(visual, "visual");
  check_lvef(simpson, "simpson");
  const Weights w = mode_weights(sigmas);

  FusedEstimate out;
  // Each reading is weighted by the other instrument's spread.
  out.theta = (w.visual * simpson + w.simpson * visual) / (w.visual + w.simpson);
  if (visual == simpson) out.theta = visual;
  const double posterior_spread = 1.0 / (1.0 / w.visual + 1.0 / w.simpson);
  out.theta_sigma =
      sigmas.mode == FusionMode::variance ? std::sqrt(posterior_spread) : posterior_spread;
  out.omega = w.visual / w.simpson;
  out.total_variation = w.visual + w.simpson;
  out.relative_reduction = -1.0 / (out.omega + 1.0);
  return out;
}

double precision_ratio(const InstrumentSigma& sigmas) {
  const Weights w = mode_weights(sigmas);
  // (1 / w_S) / (1 / w_V)
  return w.visual / w.simpson;
}

double total_variation(const InstrumentSigma& sigmas) {
  const Weights w = mode_weights(sigmas);
  return w.visual + w.simpson;
}

double theta_map(double visual, double simpson, const InstrumentSigma& sigmas) {
  check_lvef(visual, "visual");
  check_lvef(simpson, "simpson");
  const double omega = precision_ratio(sigmas);
  return (omega * simpson + visual) / (omega + 1.0);
}

double relative_reduction(const InstrumentSigma& sigmas) {
  return -1.0 / (precision_ratio(sigmas) + 1.0);
}

std::vector<FusedEstimate> fuse_cohort(std::span<const PairedMeasurement> cohort,
                                       const InstrumentSigma& sigmas) {
  if (cohort.empty()) throw Error(ErrorCode::empty_input, "cannot fuse an empty cohort");
  sigmas.validate();
  std::vector<FusedEstimate> out;
  out.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    try {
      out.push_back(fuse(cohort[i].visual_lvef, cohort[i].simpson_lvef, sigmas));
    } catch (const Error& e) {
      throw Error(e.code(),
                  "record " + std::to_string(i) + " (" + cohort[i].patient_id + "): " + e.what(),
                  i);
    }
  }
  return out;
}

}  // namespace lvef
