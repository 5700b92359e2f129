#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lvef/fusion.hpp"
#include "lvef/stochastics.hpp"

namespace lvef {

// Metropolis-Hastings calibration of one instrument's measurement error.
//
// Observation model: observed_sigma ~ Gamma(k, rate k / mu), with prior
// mu ~ Gamma(prior_shape, prior_rate). The kept chain is a uniform-stride
// thinning of the post-burn-in states; each kept mu yields one predictive
// error drawn from Gamma(k, k / mu).
struct CalibrationConfig {
  double observed_sigma = 0.0;
  double likelihood_shape = 21.0;
  double prior_shape = 1e-3;
  double prior_rate = 1e-3;
  std::size_t chain_length = 20000;
  std::size_t kept_samples = 5000;
  std::size_t burn_in = 1000;
  // Random-walk sd; 0.25 * observed_sigma when unset.
  std::optional<double> proposal_sd;
  // Pre-run rounds that rescale the proposal toward 25-45% acceptance.
  bool tune_proposal = true;

  static CalibrationConfig with_defaults(double observed_sigma);
  void validate() const;
  double initial_proposal_sd() const;
};

struct ErrorPosterior {
  std::vector<double> parameter_chain;  // kept draws of mu
  std::vector<double> predictive_draws;
  double acceptance_rate = 0.0;
  double proposal_sd = 0.0;  // after tuning
  SampleSummary summary;     // of predictive_draws at 2.5/50/97.5%
  std::vector<std::string> warnings;
};

ErrorPosterior calibrate(const CalibrationConfig& config, RngStream& stream);

// Log posterior density of mu up to a constant; -inf for mu <= 0.
double calibration_log_posterior(double mu, const CalibrationConfig& config);

struct ReductionDistribution {
  std::vector<double> r_draws;
  SampleSummary summary;  // levels 0.025, 0.5, 0.975
};

// Pairs predictive draws by index: omega = visual / simpson (squared in
// variance mode), R = -1 / (omega + 1).
ReductionDistribution reduction_distribution(const ErrorPosterior& visual,
                                             const ErrorPosterior& simpson, FusionMode mode);

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  double lag1_autocorrelation = 0.0;
  double effective_sample_size = 1.0;
};

ChainDiagnostics chain_diagnostics(const ErrorPosterior& posterior);

// Sample autocorrelation at the given lag (0 for a constant sequence).
double autocorrelation(std::span<const double> values, std::size_t lag);
// Geyer initial-positive-sequence ESS, floored at 1.
double effective_sample_size(std::span<const double> values);

}  // namespace lvef
