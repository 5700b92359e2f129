#include "lvef/cohort_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lvef/errors.hpp"

namespace lvef {

namespace {

bool nonneg_finite(double v) { return v >= 0.0 && std::isfinite(v); }

// Smallest and largest grid points inside [lo, hi].
std::pair<double, double> grid_bounds(double lo, double hi, double grid) {
  return {std::ceil(lo / grid - 1e-9) * grid, std::floor(hi / grid + 1e-9) * grid};
}

}  // namespace

SimConfig SimConfig::preset(std::string_view name) {
  SimConfig config;
  if (name == "default") return config;
  if (name == "concordant") {
    config.visual_noise_sd *= kConcordantNoiseFactor;
    config.simpson_noise_sd *= kConcordantNoiseFactor;
    return config;
  }
  throw Error(ErrorCode::invalid_parameter,
              "unknown simulation preset '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (n_patients < 1) throw Error(ErrorCode::invalid_parameter, "n_patients must be >= 1");
  if (!nonneg_finite(true_lvef_sd) || !nonneg_finite(visual_noise_sd) ||
      !nonneg_finite(simpson_noise_sd)) {
    throw Error(ErrorCode::invalid_parameter, "simulation sds must be finite and >= 0");
  }
  if (!(visual_rounding > 0.0) || !(simpson_rounding > 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "rounding grids must be > 0");
  }
  if (!(baseline_hazard > 0.0) || !std::isfinite(baseline_hazard) ||
      !std::isfinite(log_hazard_per_lvef_point) || !std::isfinite(true_lvef_mean)) {
    throw Error(ErrorCode::invalid_parameter, "hazard parameters must be finite, baseline > 0");
  }
  if (!(censor_horizon > 0.0)) throw Error(ErrorCode::invalid_parameter, "censor horizon must be > 0");
  if (!(lvef_min < lvef_max)) throw Error(ErrorCode::invalid_parameter, "empty LVEF clamp range");
  const auto [vlo, vhi] = grid_bounds(lvef_min, lvef_max, visual_rounding);
  const auto [slo, shi] = grid_bounds(lvef_min, lvef_max, simpson_rounding);
  if (vlo > vhi || slo > shi) {
    throw Error(ErrorCode::invalid_parameter, "rounding grid has no point inside the LVEF range");
  }
}

double round_to_grid(double value, double grid) {
  return std::round(value / grid) * grid;
}

SyntheticCohort simulate(const SimConfig& config, RngStream& stream) {
  config.validate();
  // Measurements are clamped to the grid points nearest the range ends so they
  // stay on their reporting grid.
  const auto [vlo, vhi] = grid_bounds(config.lvef_min, config.lvef_max, config.visual_rounding);
  const auto [slo, shi] = grid_bounds(config.lvef_min, config.lvef_max, config.simpson_rounding);

  SyntheticCohort cohort;
  cohort.config = config;
  cohort.records.reserve(config.n_patients);
  for (std::size_t i = 0; i < config.n_patients; ++i) {
    SimulatedPatient p;
    p.true_lvef = std::clamp(sample_normal(stream, config.true_lvef_mean, config.true_lvef_sd),
                             config.lvef_min, config.lvef_max);
    const double visual = p.true_lvef + sample_normal(stream, 0.0, config.visual_noise_sd);
    const double simpson = p.true_lvef + sample_normal(stream, 0.0, config.simpson_noise_sd);
    const double rate = config.baseline_hazard *
                        std::exp(config.log_hazard_per_lvef_point * (p.true_lvef - 50.0));
    p.raw_event_time = sample_exponential(stream, rate);

    auto& m = p.measurement;
    m.patient_id = "P" + std::to_string(i + 1);
    m.visual_lvef = std::clamp(round_to_grid(visual, config.visual_rounding), vlo, vhi);
    m.simpson_lvef = std::clamp(round_to_grid(simpson, config.simpson_rounding), slo, shi);
    m.event = p.raw_event_time < config.censor_horizon;
    m.time_days = m.event ? p.raw_event_time : config.censor_horizon;
    cohort.records.push_back(std::move(p));
  }
  return cohort;
}

std::vector<PairedMeasurement> SyntheticCohort::measurements() const {
  std::vector<PairedMeasurement> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.measurement);
  return out;
}

std::vector<double> SyntheticCohort::true_lvef() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.true_lvef);
  return out;
}

double rmse_vs_truth(const SyntheticCohort& cohort, std::span<const double> estimates) {
  if (estimates.size() != cohort.records.size()) {
    throw Error(ErrorCode::invalid_parameter, "estimate count does not match cohort size");
  }
  if (estimates.empty()) throw Error(ErrorCode::empty_input, "empty cohort");
  double ss = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - cohort.records[i].true_lvef;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(estimates.size()));
}

}  // namespace lvef
