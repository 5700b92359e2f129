#include "lvef/report.hpp"

#include <cstdio>
#include <numeric>

#include "lvef/errors.hpp"
#include "lvef/fusion.hpp"

namespace lvef {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json band_json(const ScalarBand& b) {
  return {{"replicates", b.count}, {"mean", b.mean},  {"p2_5", b.p025},
          {"p50", b.p50},          {"p97_5", b.p975}, {"width_95", b.width()}};
}

json sigmas_json(const InstrumentSigma& s) {
  return {{"visual_sigma", s.visual_sigma},
          {"simpson_sigma", s.simpson_sigma},
          {"mode", to_string(s.mode)},
          {"units", "LVEF percentage points"}};
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json to_json(const SampleSummary& summary) {
  json q = json::object();
  for (const auto& [level, value] : summary.quantiles) {
    q[format_fixed4(level)] = value;
  }
  return {{"n", summary.n}, {"mean", summary.mean}, {"sd", summary.sd}, {"quantiles", q}};
}

json to_json(const ChainDiagnostics& d) {
  return {{"acceptance_rate", d.acceptance_rate},
          {"lag1_autocorrelation", d.lag1_autocorrelation},
          {"effective_sample_size", d.effective_sample_size}};
}

json to_json(const ErrorPosterior& posterior) {
  return {{"predictive_error_percent", to_json(posterior.summary)},
          {"parameter_mean",
           std::accumulate(posterior.parameter_chain.begin(), posterior.parameter_chain.end(),
                           0.0) /
               static_cast<double>(posterior.parameter_chain.size())},
          {"proposal_sd", posterior.proposal_sd},
          {"diagnostics", to_json(chain_diagnostics(posterior))},
          {"warnings", posterior.warnings}};
}

json to_json(const ReductionDistribution& reduction) {
  json j = to_json(reduction.summary);
  j["definition"] = "R = -1/(omega+1) per paired predictive draw; fraction, negative = reduction";
  return j;
}

json to_json(const CoxFit& fit, double delta) {
  json j = {{"beta", fit.beta},
            {"standard_error", fit.standard_error},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"log_partial_likelihood", fit.log_partial_likelihood},
            {"beta_units", "log-hazard per +1 LVEF percentage point"}};
  const HazardRatio hr = hazard_ratio_per(fit, delta);
  j["hazard_ratio"] = {{"per_points_decrease", delta},
                       {"hr", hr.hr},
                       {"ci95_low", hr.ci_low},
                       {"ci95_high", hr.ci_high},
                       {"interval", "Wald"},
                       {"direction", "HR > 1: lower LVEF carries higher hazard"}};
  return j;
}

json to_json(const KmCurve& curve) {
  return {{"time_days", curve.times},
          {"survival", curve.survival},
          {"at_risk", curve.at_risk},
          {"events", curve.events}};
}

json to_json(const ReplicateResult& point) {
  json strata = json::object();
  for (Stratum s : kStrata) {
    const auto k = static_cast<std::size_t>(s);
    json entry = {{"event_rate", optional_number(point.event_rate[k])}};
    if (point.curves[k]) entry["km"] = to_json(*point.curves[k]);
    strata[std::string(to_string(s))] = entry;
  }
  json j = {{"strata", strata}, {"hazard_ratio", optional_number(point.hazard_ratio)}};
  if (point.hr_failure) {
    j["hr_failure"] = {{"code", to_string(*point.hr_failure)},
                       {"detail", point.hr_failure_detail}};
  }
  return j;
}

json to_json(const PropagationSummary& summary) {
  json strata = json::object();
  for (Stratum s : kStrata) {
    const auto k = static_cast<std::size_t>(s);
    strata[std::string(to_string(s))] =
        summary.event_rate[k] ? band_json(*summary.event_rate[k]) : json(nullptr);
  }
  json reasons = json::object();
  for (const auto& [code, count] : summary.hr_failure_reasons) reasons[code] = count;
  return {{"source", to_string(summary.source)},
          {"replicates", summary.replicates},
          {"event_rate_by_stratum", strata},
          {"hazard_ratio", band_json(summary.hazard_ratio)},
          {"hazard_ratio_failures", {{"count", summary.hr_failures}, {"reasons", reasons}}},
          {"band_rule", "replicate percentiles 2.5/97.5 by linear interpolation"}};
}

ErrorCalibrationRun run_error_calibration(const CalibrationConfig& visual,
                                          const CalibrationConfig& simpson, FusionMode mode,
                                          std::uint64_t seed) {
  ErrorCalibrationRun run;
  RngStream vs = make_stream(seed, kVisualCalibrationStream);
  RngStream ss = make_stream(seed, kSimpsonCalibrationStream);
  run.visual = calibrate(visual, vs);
  run.simpson = calibrate(simpson, ss);
  run.reduction = reduction_distribution(run.visual, run.simpson, mode);
  return run;
}

json to_json(const ErrorCalibrationRun& run) {
  return {{"visual", to_json(run.visual)},
          {"simpson", to_json(run.simpson)},
          {"relative_reduction", to_json(run.reduction)}};
}

AnalysisReport build_report(const CohortData& cohort, const ReportOptions& options) {
  if (cohort.records.empty()) throw Error(ErrorCode::empty_input, "cohort has no records");
  options.sigmas.validate();

  json config = {{"seed", options.seed},
                 {"replicates", options.replicates},
                 {"horizon_days", options.horizon},
                 {"bands", {options.band_edges.low_edge, options.band_edges.high_edge}},
                 {"sigmas", sigmas_json(options.sigmas)},
                 {"sources", json::array()},
                 {"input", options.input_name}};
  for (LvefSource s : options.sources) config["sources"].push_back(to_string(s));
  const std::uint64_t hash = fnv1a64(config.dump());
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(hash));

  std::vector<std::string> warnings = cohort.warnings;
  AnalysisReport report;
  json& doc = report.document;
  doc["metadata"] = {{"tool", "lvef"},
                     {"tool_version", kToolVersion},
                     {"seed", options.seed},
                     {"config_hash", hash_hex},
                     {"generated_at", nullptr}};
  doc["config"] = config;

  std::size_t events = 0;
  for (const auto& m : cohort.records) events += m.event ? 1 : 0;
  doc["cohort"] = {{"patients", cohort.records.size()}, {"events", events}};

  const std::vector<FusedEstimate> fused = fuse_cohort(cohort.records, options.sigmas);
  double mean_theta = 0.0, mean_v = 0.0, mean_s = 0.0;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    mean_theta += fused[i].theta;
    mean_v += cohort.records[i].visual_lvef;
    mean_s += cohort.records[i].simpson_lvef;
  }
  const auto n = static_cast<double>(fused.size());
  doc["fusion"] = {{"sigmas", sigmas_json(options.sigmas)},
                   {"omega", fused.front().omega},
                   {"total_variation", fused.front().total_variation},
                   {"relative_reduction", fused.front().relative_reduction},
                   {"theta_sigma_percent", fused.front().theta_sigma},
                   {"mean_theta_percent", mean_theta / n},
                   {"mean_visual_percent", mean_v / n},
                   {"mean_simpson_percent", mean_s / n}};

  const ErrorCalibrationRun calibration = run_error_calibration(
      CalibrationConfig::with_defaults(options.sigmas.visual_sigma),
      CalibrationConfig::with_defaults(options.sigmas.simpson_sigma), options.sigmas.mode,
      options.seed);
  doc["error_calibration"] = to_json(calibration);
  for (const auto& w : calibration.visual.warnings) warnings.push_back("visual calibration: " + w);
  for (const auto& w : calibration.simpson.warnings) {
    warnings.push_back("simpson calibration: " + w);
  }

  json point = json::object();
  json propagation = json::object();
  for (LvefSource source : options.sources) {
    PropagationConfig pc;
    pc.source = source;
    pc.replicates = options.replicates;
    pc.horizon = options.horizon;
    pc.band_edges = options.band_edges;
    pc.sigmas = options.sigmas;
    pc.seed = options.seed;
    pc.threads = options.threads;
    const std::string name(to_string(source));

    const ReplicateResult exact = point_analysis(cohort.records, fused, pc);
    point[name] = to_json(exact);
    if (exact.hr_failure) {
      warnings.push_back(name + " point analysis: Cox fit failed (" +
                         to_string(*exact.hr_failure) + "): " + exact.hr_failure_detail);
    }

    PropagationSummary summary = propagate(cohort.records, fused, pc);
    propagation[name] = to_json(summary);
    if (summary.hr_failures > 0) {
      warnings.push_back(name + " propagation: " + std::to_string(summary.hr_failures) + " of " +
                         std::to_string(summary.replicates) +
                         " replicates excluded from hazard-ratio aggregation");
    }
    for (Stratum s : kStrata) {
      if (!summary.event_rate[static_cast<std::size_t>(s)]) {
        warnings.push_back(name + " propagation: stratum " + std::string(to_string(s)) +
                           " was empty in every replicate");
      }
    }
    report.propagation.push_back(std::move(summary));
  }
  doc["point_analysis"] = point;
  doc["propagation"] = propagation;
  doc["units"] = {{"lvef", "percent"},
                  {"time", "days"},
                  {"event_rate", "fraction of patients with the composite event by the horizon"}};
  doc["warnings"] = warnings;
  return report;
}

}  // namespace lvef
