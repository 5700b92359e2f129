#include "lvef/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lvef/errors.hpp"

namespace lvef {

namespace {

void check_record(const SurvivalRecord& r, std::size_t index) {
  if (!(r.time > 0.0) || !std::isfinite(r.time)) {
    throw Error(ErrorCode::domain,
                "record " + std::to_string(index) + ": survival time must be finite and > 0",
                index);
  }
}

}  // namespace

KmCurve km_estimate(std::span<const SurvivalRecord> records) {
  if (records.empty()) throw Error(ErrorCode::empty_input, "Kaplan-Meier needs at least one record");
  for (std::size_t i = 0; i < records.size(); ++i) check_record(records[i], i);

  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });

  KmCurve curve;
  double surv = 1.0;
  std::size_t at_risk = records.size();
  for (std::size_t k = 0; k < idx.size();) {
    const double t = records[idx[k]].time;
    std::size_t deaths = 0, leaving = 0;
    while (k < idx.size() && records[idx[k]].time == t) {
      deaths += records[idx[k]].event ? 1 : 0;
      ++leaving;
      ++k;
    }
    // Censorings at t are still at risk for events at t.
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(surv);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(deaths);
    }
    at_risk -= leaving;
  }
  return curve;
}

double km_survival_at(const KmCurve& curve, double time) {
  const auto it = std::upper_bound(curve.times.begin(), curve.times.end(), time);
  if (it == curve.times.begin()) return 1.0;
  return curve.survival[static_cast<std::size_t>(it - curve.times.begin()) - 1];
}

double km_event_rate_at(const KmCurve& curve, double horizon) {
  return 1.0 - km_survival_at(curve, horizon);
}

CoxProblem::CoxProblem(std::span<const double> times, std::span<const std::uint8_t> events)
    : times_(times.begin(), times.end()), events_(events.begin(), events.end()) {
  if (times.size() != events.size()) {
    throw Error(ErrorCode::invalid_parameter, "times and events differ in length");
  }
  if (times.empty()) throw Error(ErrorCode::empty_input, "Cox model needs at least one record");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] > 0.0) || !std::isfinite(times_[i])) {
      throw Error(ErrorCode::domain,
                  "record " + std::to_string(i) + ": survival time must be finite and > 0", i);
    }
    event_count_ += events_[i] ? 1 : 0;
  }
  order_.resize(times_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return times_[a] > times_[b]; });
  for (std::size_t k = 0; k < order_.size();) {
    std::size_t end = k;
    while (end < order_.size() && times_[order_[end]] == times_[order_[k]]) ++end;
    tie_blocks_.emplace_back(k, end);
    k = end;
  }
}

void CoxProblem::check_covariates(std::span<const double> covariates) const {
  if (covariates.size() != times_.size()) {
    throw Error(ErrorCode::invalid_parameter, "covariate vector length does not match records");
  }
  if (event_count_ == 0) {
    throw Error(ErrorCode::degenerate_data, "partial likelihood needs at least one event");
  }
}

PartialLikelihood CoxProblem::evaluate(double beta, std::span<const double> x) const {
  check_covariates(x);
  const double center =
      std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : x) shift = std::max(shift, beta * (v - center));

  PartialLikelihood out;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (const auto& [begin, end] : tie_blocks_) {
    for (std::size_t k = begin; k < end; ++k) {
      const double xc = x[order_[k]] - center;
      const double w = std::exp(beta * xc - shift);
      s0 += w;
      s1 += w * xc;
      s2 += w * xc * xc;
    }
    const double mean = s1 / s0;
    const double log_s0 = std::log(s0) + shift;
    for (std::size_t k = begin; k < end; ++k) {
      if (!events_[order_[k]]) continue;
      const double xc = x[order_[k]] - center;
      out.value += beta * xc - log_s0;
      out.gradient += xc - mean;
      out.hessian -= s2 / s0 - mean * mean;
    }
  }
  return out;
}

int CoxProblem::separation_direction(std::span<const double> x) const {
  bool all_at_max = true, all_at_min = true;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& [begin, end] : tie_blocks_) {
    for (std::size_t k = begin; k < end; ++k) {
      hi = std::max(hi, x[order_[k]]);
      lo = std::min(lo, x[order_[k]]);
    }
    for (std::size_t k = begin; k < end; ++k) {
      if (!events_[order_[k]]) continue;
      all_at_max = all_at_max && x[order_[k]] == hi;
      all_at_min = all_at_min && x[order_[k]] == lo;
    }
  }
  if (all_at_max && all_at_min) return 0;  // no information; caught by the hessian check
  if (all_at_max) return 1;
  if (all_at_min) return -1;
  return 0;
}

CoxFit CoxProblem::fit(std::span<const double> x, double tolerance, int max_iterations) const {
  check_covariates(x);
  if (!(tolerance > 0.0) || max_iterations < 1) {
    throw Error(ErrorCode::invalid_parameter, "tolerance must be > 0 and max_iterations >= 1");
  }
  if (event_count_ < 2) {
    throw Error(ErrorCode::degenerate_data, "Cox fit needs at least two events");
  }

  double beta = 0.0;
  PartialLikelihood cur = evaluate(beta, x);
  if (!(cur.hessian < 0.0)) {
    throw Error(ErrorCode::degenerate_data,
                "covariate is constant within every risk set; beta is not identifiable");
  }
  if (const int dir = separation_direction(x); dir != 0) {
    throw Error(ErrorCode::separation,
                std::string("monotone partial likelihood: beta diverges to ") +
                    (dir > 0 ? "+infinity" : "-infinity"));
  }

  int iter = 0;
  while (std::abs(cur.gradient) >= tolerance) {
    if (iter >= max_iterations) {
      throw NonConvergenceError("Cox fit did not converge in " + std::to_string(max_iterations) +
                                    " iterations (last beta " + std::to_string(beta) + ")",
                                beta, iter);
    }
    ++iter;
    double step = -cur.gradient / cur.hessian;
    double next = beta + step;
    PartialLikelihood cand = evaluate(next, x);
    // Near the optimum the value is flat to rounding; then a shrinking
    // gradient is the better signal of progress.
    const double flat = 1e-12 * (1.0 + std::abs(cur.value));
    auto acceptable = [&](const PartialLikelihood& c) {
      return c.value >= cur.value ||
             (c.value >= cur.value - flat && std::abs(c.gradient) < std::abs(cur.gradient));
    };
    for (int halving = 0; halving < 60 && !acceptable(cand); ++halving) {
      step *= 0.5;
      next = beta + step;
      cand = evaluate(next, x);
    }
    if (next == beta) break;  // no representable improvement left
    beta = next;
    cur = cand;
    if (std::abs(beta) > kCoxSeparationBound) {
      throw Error(ErrorCode::separation,
                  "beta exceeded " + std::to_string(kCoxSeparationBound) +
                      " in magnitude; partial likelihood appears monotone");
    }
  }
  if (!(cur.hessian < 0.0)) {
    throw Error(ErrorCode::degenerate_data, "observed information is zero at the fitted beta");
  }

  CoxFit out;
  out.beta = beta;
  out.iterations = iter;
  out.converged = std::abs(cur.gradient) < tolerance;
  if (!out.converged) {
    throw NonConvergenceError("Cox fit stalled with gradient " + std::to_string(cur.gradient),
                              beta, iter);
  }
  out.standard_error = 1.0 / std::sqrt(-cur.hessian);
  out.log_partial_likelihood = cur.value;
  return out;
}

namespace {

struct Columns {
  std::vector<double> times;
  std::vector<std::uint8_t> events;
  std::vector<double> covariates;
};

Columns split(std::span<const SurvivalRecord> records) {
  Columns c;
  c.times.reserve(records.size());
  c.covariates.reserve(records.size());
  for (const auto& r : records) {
    c.times.push_back(r.time);
    c.events.push_back(r.event ? 1 : 0);
    c.covariates.push_back(r.covariate);
  }
  return c;
}

}  // namespace

PartialLikelihood cox_partial_loglik(double beta, std::span<const SurvivalRecord> records) {
  const Columns c = split(records);
  const CoxProblem problem(c.times, c.events);
  return problem.evaluate(beta, c.covariates);
}

CoxFit cox_fit(std::span<const SurvivalRecord> records, double tolerance, int max_iterations) {
  const Columns c = split(records);
  const CoxProblem problem(c.times, c.events);
  return problem.fit(c.covariates, tolerance, max_iterations);
}

HazardRatio hazard_ratio_per(const CoxFit& fit, double delta) {
  if (!fit.converged) throw Error(ErrorCode::invalid_state, "hazard ratio needs a converged fit");
  if (delta == 0.0 || !std::isfinite(delta)) {
    throw Error(ErrorCode::invalid_parameter, "delta must be finite and non-zero");
  }
  const double log_hr = -delta * fit.beta;
  const double half_width = 1.96 * std::abs(delta) * fit.standard_error;
  return {std::exp(log_hr), std::exp(log_hr - half_width), std::exp(log_hr + half_width)};
}

}  // namespace lvef
