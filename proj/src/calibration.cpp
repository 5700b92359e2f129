#include "lvef/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lvef/errors.hpp"

namespace lvef {

namespace {

constexpr std::array<double, 3> kLevels{0.025, 0.5, 0.975};

constexpr std::size_t kTuneBatch = 500;
constexpr int kTuneMaxRounds = 40;
constexpr double kTuneLow = 0.25;
constexpr double kTuneHigh = 0.45;
constexpr double kTuneTarget = 0.35;

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

struct Walker {
  const CalibrationConfig& config;
  RngStream& stream;
  double state;
  double log_post;

  // One Metropolis step; returns whether the proposal was accepted.
  bool step(double proposal_sd) {
    const double proposal = sample_normal(stream, state, proposal_sd);
    // The uniform is consumed for every step so the stream position does not
    // depend on the acceptance path.
    const double log_u = std::log(stream.uniform_open());
    if (proposal <= 0.0) return false;
    const double candidate = calibration_log_posterior(proposal, config);
    if (log_u < candidate - log_post) {
      state = proposal;
      log_post = candidate;
      return true;
    }
    return false;
  }
};

}  // namespace

CalibrationConfig CalibrationConfig::with_defaults(double observed_sigma) {
  CalibrationConfig config;
  config.observed_sigma = observed_sigma;
  return config;
}

double CalibrationConfig::initial_proposal_sd() const {
  return proposal_sd.value_or(0.25 * observed_sigma);
}

void CalibrationConfig::validate() const {
  if (!positive_finite(observed_sigma) || !positive_finite(likelihood_shape) ||
      !positive_finite(prior_shape) || !positive_finite(prior_rate)) {
    throw Error(ErrorCode::invalid_parameter,
                "observed sigma, likelihood shape and prior hyperparameters must be > 0");
  }
  if (proposal_sd && !positive_finite(*proposal_sd)) {
    throw Error(ErrorCode::invalid_parameter, "proposal sd must be > 0");
  }
  if (chain_length == 0 || kept_samples == 0) {
    throw Error(ErrorCode::invalid_parameter, "chain length and kept samples must be > 0");
  }
  if (burn_in >= chain_length || kept_samples > chain_length - burn_in) {
    throw Error(ErrorCode::invalid_parameter,
                "kept samples must not exceed chain length minus burn-in");
  }
}

double calibration_log_posterior(double mu, const CalibrationConfig& config) {
  if (!(mu > 0.0) || !std::isfinite(mu)) return -std::numeric_limits<double>::infinity();
  const double k = config.likelihood_shape;
  // Gamma(k, k/mu) density of the observation, dropping terms free of mu.
  const double log_lik = -k * std::log(mu) - k * config.observed_sigma / mu;
  const double log_prior = (config.prior_shape - 1.0) * std::log(mu) - config.prior_rate * mu;
  return log_lik + log_prior;
}

ErrorPosterior calibrate(const CalibrationConfig& config, RngStream& stream) {
  config.validate();

  const double start = config.observed_sigma;
  const double start_log_post = calibration_log_posterior(start, config);
  if (!std::isfinite(start_log_post)) {
    throw Error(ErrorCode::initialization, "log posterior is not finite at the initial state");
  }

  ErrorPosterior out;
  double proposal_sd = config.initial_proposal_sd();

  if (config.tune_proposal) {
    Walker tuner{config, stream, start, start_log_post};
    for (int round = 0; round < kTuneMaxRounds; ++round) {
      std::size_t accepted = 0;
      for (std::size_t i = 0; i < kTuneBatch; ++i) accepted += tuner.step(proposal_sd) ? 1 : 0;
      const double rate = static_cast<double>(accepted) / kTuneBatch;
      if (rate >= kTuneLow && rate <= kTuneHigh) break;
      proposal_sd *= std::clamp(rate / kTuneTarget, 0.1, 3.0);
    }
  }
  out.proposal_sd = proposal_sd;

  Walker walker{config, stream, start, start_log_post};
  std::vector<double> chain(config.chain_length);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < config.chain_length; ++i) {
    accepted += walker.step(proposal_sd) ? 1 : 0;
    chain[i] = walker.state;
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.chain_length);

  const std::size_t post_burn = config.chain_length - config.burn_in;
  const double k = config.likelihood_shape;
  out.parameter_chain.reserve(config.kept_samples);
  out.predictive_draws.reserve(config.kept_samples);
  for (std::size_t i = 0; i < config.kept_samples; ++i) {
    const std::size_t offset = (i * post_burn) / config.kept_samples;
    const double mu = chain[config.burn_in + offset];
    out.parameter_chain.push_back(mu);
    out.predictive_draws.push_back(sample_gamma(stream, k, k / mu));
  }
  out.summary = summarize(out.predictive_draws, kLevels);

  if (out.acceptance_rate < 0.1 || out.acceptance_rate > 0.6) {
    out.warnings.push_back("acceptance rate " + std::to_string(out.acceptance_rate) +
                           " outside [0.1, 0.6]; consider adjusting the proposal sd");
  }
  return out;
}

ReductionDistribution reduction_distribution(const ErrorPosterior& visual,
                                             const ErrorPosterior& simpson, FusionMode mode) {
  if (visual.predictive_draws.size() != simpson.predictive_draws.size()) {
    throw Error(ErrorCode::invalid_parameter, "predictive draw sequences differ in length");
  }
  if (visual.predictive_draws.empty()) {
    throw Error(ErrorCode::empty_input, "no predictive draws to pair");
  }
  ReductionDistribution out;
  out.r_draws.reserve(visual.predictive_draws.size());
  for (std::size_t i = 0; i < visual.predictive_draws.size(); ++i) {
    double omega = visual.predictive_draws[i] / simpson.predictive_draws[i];
    if (mode == FusionMode::variance) omega *= omega;
    out.r_draws.push_back(-1.0 / (omega + 1.0));
  }
  out.summary = summarize(out.r_draws, kLevels);
  return out;
}

double autocorrelation(std::span<const double> values, std::size_t lag) {
  const std::size_t n = values.size();
  if (n == 0 || lag >= n) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double denom = 0.0;
  for (double v : values) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) return 0.0;
  double num = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) num += (values[i] - mean) * (values[i + lag] - mean);
  return num / denom;
}

double effective_sample_size(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 1.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double v : values) c0 += (v - mean) * (v - mean);
  if (c0 <= 0.0) return 1.0;

  auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (values[i] - mean) * (values[i + lag] - mean);
    return acc / c0;
  };

  // tau = -1 + 2 * sum of Gamma_m = rho(2m) + rho(2m + 1) while Gamma_m > 0.
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = rho(2 * m) + rho(2 * m + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(1.0, static_cast<double>(n) / std::max(tau, 1e-12));
}

ChainDiagnostics chain_diagnostics(const ErrorPosterior& posterior) {
  ChainDiagnostics out;
  out.acceptance_rate = posterior.acceptance_rate;
  out.lag1_autocorrelation = autocorrelation(posterior.parameter_chain, 1);
  out.effective_sample_size = effective_sample_size(posterior.parameter_chain);
  return out;
}

}  // namespace lvef
