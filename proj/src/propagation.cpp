#include "lvef/propagation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace lvef {

namespace {

std::size_t index_of(Stratum s) { return static_cast<std::size_t>(s); }

void check_aligned(std::span<const PairedMeasurement> cohort,
                   std::span<const FusedEstimate> fused) {
  if (cohort.size() != fused.size()) {
    throw Error(ErrorCode::invalid_parameter,
                "cohort has " + std::to_string(cohort.size()) + " records but " +
                    std::to_string(fused.size()) + " fused estimates");
  }
  if (cohort.empty()) throw Error(ErrorCode::empty_input, "empty cohort");
}

struct Center {
  double value;
  double spread;
};

Center center_of(const PairedMeasurement& m, const FusedEstimate& f,
                 const PropagationConfig& config) {
  switch (config.source) {
    case LvefSource::visual: return {m.visual_lvef, config.sigmas.visual_sigma};
    case LvefSource::simpson: return {m.simpson_lvef, config.sigmas.simpson_sigma};
    case LvefSource::assimilated: return {f.theta, f.theta_sigma};
  }
  return {m.visual_lvef, config.sigmas.visual_sigma};
}

// Follow-up data shared by every replicate of one propagation run.
class ReplicateContext {
 public:
  ReplicateContext(std::span<const PairedMeasurement> cohort, std::span<const FusedEstimate> fused,
                   const PropagationConfig& config)
      : cohort_(cohort), fused_(fused), config_(config), cox_(times(cohort), events(cohort)) {}

  ReplicateResult analyze(std::span<const double> lvef, std::size_t index) const {
    ReplicateResult out;
    out.replicate_index = index;

    const std::vector<Stratum> strata = stratify(lvef, config_.band_edges);
    std::array<std::vector<SurvivalRecord>, 3> groups;
    for (std::size_t i = 0; i < cohort_.size(); ++i) {
      groups[index_of(strata[i])].push_back(
          {cohort_[i].time_days, cohort_[i].event, lvef[i]});
    }
    for (Stratum s : kStrata) {
      const auto& g = groups[index_of(s)];
      if (g.empty()) continue;
      KmCurve curve = km_estimate(g);
      out.event_rate[index_of(s)] = km_event_rate_at(curve, config_.horizon);
      out.curves[index_of(s)] = std::move(curve);
    }

    try {
      const CoxFit fit = cox_.fit(lvef);
      out.hazard_ratio = hazard_ratio_per(fit, config_.hr_delta).hr;
    } catch (const Error& e) {
      if (is_validation_error(e.code())) throw;
      out.hr_failure = e.code();
      out.hr_failure_detail = e.what();
    }
    return out;
  }

  ReplicateResult run(RngStream& stream, std::size_t index) const {
    const std::vector<double> lvef = realize_lvef(cohort_, fused_, config_, stream);
    return analyze(lvef, index);
  }

 private:
  static std::vector<double> times(std::span<const PairedMeasurement> cohort) {
    std::vector<double> t;
    t.reserve(cohort.size());
    for (const auto& m : cohort) t.push_back(m.time_days);
    return t;
  }
  static std::vector<std::uint8_t> events(std::span<const PairedMeasurement> cohort) {
    std::vector<std::uint8_t> e;
    e.reserve(cohort.size());
    for (const auto& m : cohort) e.push_back(m.event ? 1 : 0);
    return e;
  }

  std::span<const PairedMeasurement> cohort_;
  std::span<const FusedEstimate> fused_;
  const PropagationConfig& config_;
  CoxProblem cox_;
};

// Mean of sorted values; exact when they are all equal.
double sorted_mean(const std::vector<double>& sorted) {
  if (sorted.front() == sorted.back()) return sorted.front();
  return std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
}

ScalarBand band_of(std::vector<double> values) {
  ScalarBand b;
  b.count = values.size();
  std::sort(values.begin(), values.end());
  b.mean = sorted_mean(values);
  b.p025 = quantile_sorted(values, 0.025);
  b.p50 = quantile_sorted(values, 0.5);
  b.p975 = quantile_sorted(values, 0.975);
  b.p025 = std::min(b.p025, b.mean);
  b.p975 = std::max(b.p975, b.mean);
  return b;
}

KmBand km_band_of(const std::vector<const KmCurve*>& curves, std::span<const double> grid) {
  KmBand band;
  band.times.assign(grid.begin(), grid.end());
  std::vector<double> rates(curves.size());
  for (double t : grid) {
    for (std::size_t r = 0; r < curves.size(); ++r) rates[r] = km_event_rate_at(*curves[r], t);
    std::sort(rates.begin(), rates.end());
    const double mean = sorted_mean(rates);
    // Percentile endpoints are widened to contain the mean if a skewed
    // distribution would otherwise place it outside.
    band.lower.push_back(std::min(quantile_sorted(rates, 0.025), mean));
    band.mean.push_back(mean);
    band.upper.push_back(std::max(quantile_sorted(rates, 0.975), mean));
  }
  return band;
}

}  // namespace

std::string_view to_string(LvefSource source) noexcept {
  switch (source) {
    case LvefSource::visual: return "visual";
    case LvefSource::simpson: return "simpson";
    case LvefSource::assimilated: return "assimilated";
  }
  return "unknown";
}

std::string_view to_string(Stratum stratum) noexcept {
  switch (stratum) {
    case Stratum::low: return "low";
    case Stratum::mid: return "mid";
    case Stratum::high: return "high";
  }
  return "unknown";
}

LvefSource parse_source(std::string_view text) {
  for (LvefSource s : kSources) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorCode::invalid_parameter, "unknown LVEF source '" + std::string(text) + "'");
}

void PropagationConfig::validate() const {
  if (!(band_edges.low_edge > 0.0 && band_edges.low_edge < band_edges.high_edge &&
        band_edges.high_edge < 100.0)) {
    throw Error(ErrorCode::invalid_parameter,
                "band edges must be strictly increasing inside (0, 100)");
  }
  if (replicates < 2) throw Error(ErrorCode::invalid_parameter, "replicates must be >= 2");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::invalid_parameter, "horizon must be > 0");
  }
  if (!(sigmas.visual_sigma >= 0.0) || !(sigmas.simpson_sigma >= 0.0) ||
      !std::isfinite(sigmas.visual_sigma) || !std::isfinite(sigmas.simpson_sigma)) {
    throw Error(ErrorCode::invalid_parameter, "propagation sigmas must be finite and >= 0");
  }
  if (!(clamp_min < clamp_max)) throw Error(ErrorCode::invalid_parameter, "empty clamp range");
  if (!(hr_delta != 0.0) || !std::isfinite(hr_delta)) {
    throw Error(ErrorCode::invalid_parameter, "hazard-ratio delta must be non-zero");
  }
}

std::vector<double> realize_lvef(std::span<const PairedMeasurement> cohort,
                                 std::span<const FusedEstimate> fused,
                                 const PropagationConfig& config, RngStream& stream) {
  check_aligned(cohort, fused);
  std::vector<double> out;
  out.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const Center c = center_of(cohort[i], fused[i], config);
    out.push_back(
        std::clamp(sample_normal(stream, c.value, c.spread), config.clamp_min, config.clamp_max));
  }
  return out;
}

std::vector<Stratum> stratify(std::span<const double> lvef_values, const BandEdges& edges) {
  std::vector<Stratum> out;
  out.reserve(lvef_values.size());
  for (double v : lvef_values) {
    if (v < edges.low_edge) {
      out.push_back(Stratum::low);
    } else if (v <= edges.high_edge) {
      out.push_back(Stratum::mid);
    } else {
      out.push_back(Stratum::high);
    }
  }
  return out;
}

ReplicateResult run_replicate(std::span<const PairedMeasurement> cohort,
                              std::span<const FusedEstimate> fused,
                              const PropagationConfig& config, RngStream& stream) {
  config.validate();
  check_aligned(cohort, fused);
  const ReplicateContext ctx(cohort, fused, config);
  return ctx.run(stream, 0);
}

ReplicateResult point_analysis(std::span<const PairedMeasurement> cohort,
                               std::span<const FusedEstimate> fused,
                               const PropagationConfig& config) {
  config.validate();
  check_aligned(cohort, fused);
  std::vector<double> lvef;
  lvef.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    lvef.push_back(std::clamp(center_of(cohort[i], fused[i], config).value, config.clamp_min,
                              config.clamp_max));
  }
  const ReplicateContext ctx(cohort, fused, config);
  return ctx.analyze(lvef, 0);
}

PropagationSummary propagate(std::span<const PairedMeasurement> cohort,
                             std::span<const FusedEstimate> fused,
                             const PropagationConfig& config) {
  config.validate();
  check_aligned(cohort, fused);
  const ReplicateContext ctx(cohort, fused, config);

  std::vector<ReplicateResult> results(config.replicates);
  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(config.replicates));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= config.replicates) return;
      try {
        RngStream stream = make_stream(config.seed, r);
        results[r] = ctx.run(stream, r);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.replicates;
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  PropagationSummary out;
  out.source = config.source;
  out.replicates = config.replicates;

  std::vector<double> hrs;
  for (const auto& r : results) {
    if (r.hazard_ratio) {
      hrs.push_back(*r.hazard_ratio);
    } else {
      ++out.hr_failures;
      ++out.hr_failure_reasons[r.hr_failure ? to_string(*r.hr_failure) : "unknown"];
    }
  }
  if (hrs.empty()) {
    throw Error(ErrorCode::propagation, "hazard ratio failed in every replicate (" +
                                            std::to_string(config.replicates) + ")");
  }
  out.hazard_ratio = band_of(std::move(hrs));

  // Shared time grid: 0 plus every event time seen in any replicate curve.
  std::vector<double> grid{0.0};
  for (const auto& r : results) {
    for (const auto& c : r.curves) {
      if (c) grid.insert(grid.end(), c->times.begin(), c->times.end());
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  for (Stratum s : kStrata) {
    const std::size_t k = index_of(s);
    std::vector<double> rates;
    std::vector<const KmCurve*> curves;
    for (const auto& r : results) {
      if (r.event_rate[k]) rates.push_back(*r.event_rate[k]);
      if (r.curves[k]) curves.push_back(&*r.curves[k]);
    }
    if (rates.empty()) continue;
    out.event_rate[k] = band_of(std::move(rates));
    out.km_bands[k] = km_band_of(curves, grid);
  }
  return out;
}

}  // namespace lvef
