#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace lvef {

struct SurvivalRecord {
  double time = 0.0;  // days, > 0
  bool event = false;
  double covariate = 0.0;  // LVEF, %
};

// Product-limit estimate at the distinct event times. survival[i] is the
// value on [times[i], times[i + 1]); S = 1 before times[0].
struct KmCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
};

KmCurve km_estimate(std::span<const SurvivalRecord> records);

// Right-continuous step evaluation of S(t).
double km_survival_at(const KmCurve& curve, double time);
// 1 - S(horizon).
double km_event_rate_at(const KmCurve& curve, double horizon);

struct PartialLikelihood {
  double value = 0.0;
  double gradient = 0.0;
  double hessian = 0.0;
};

// Breslow partial log-likelihood with first and second derivatives in beta.
PartialLikelihood cox_partial_loglik(double beta, std::span<const SurvivalRecord> records);

struct CoxFit {
  double beta = 0.0;  // log-hazard per +1 covariate unit
  double standard_error = 0.0;
  int iterations = 0;
  bool converged = false;
  double log_partial_likelihood = 0.0;
};

inline constexpr double kDefaultCoxTolerance = 1e-8;
inline constexpr int kDefaultCoxMaxIterations = 50;
// |beta| beyond this is treated as a divergent (monotone) likelihood.
inline constexpr double kCoxSeparationBound = 50.0;

// Newton-Raphson from beta = 0 with step halving.
CoxFit cox_fit(std::span<const SurvivalRecord> records,
               double tolerance = kDefaultCoxTolerance,
               int max_iterations = kDefaultCoxMaxIterations);

// Pre-sorted risk-set structure for fitting many covariate vectors against
// the same follow-up data.
class CoxProblem {
 public:
  // events: 1 = event, 0 = censored.
  CoxProblem(std::span<const double> times, std::span<const std::uint8_t> events);

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t event_count() const noexcept { return event_count_; }

  PartialLikelihood evaluate(double beta, std::span<const double> covariates) const;
  CoxFit fit(std::span<const double> covariates, double tolerance = kDefaultCoxTolerance,
             int max_iterations = kDefaultCoxMaxIterations) const;

 private:
  void check_covariates(std::span<const double> covariates) const;
  // Sign of the direction in which the likelihood is monotone, or 0.
  int separation_direction(std::span<const double> covariates) const;

  std::vector<double> times_;
  std::vector<std::uint8_t> events_;
  // Indices sorted by descending time.
  std::vector<std::size_t> order_;
  // [begin, end) ranges into order_ of records sharing a time.
  std::vector<std::pair<std::size_t, std::size_t>> tie_blocks_;
  std::size_t event_count_ = 0;
};

struct HazardRatio {
  double hr = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
};

// Hazard ratio for a delta-point DECREASE in the covariate: exp(-delta * beta),
// with a Wald 95% interval. HR > 1 means lower LVEF carries higher hazard.
HazardRatio hazard_ratio_per(const CoxFit& fit, double delta);

}  // namespace lvef
