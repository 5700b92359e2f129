#include <doctest.h>

#include <cmath>
#include <vector>

#include "lvef/cohort_sim.hpp"
#include "lvef/errors.hpp"
#include "lvef/fusion.hpp"
#include "lvef/propagation.hpp"

using namespace lvef;

namespace {

struct Fixture {
  std::vector<PairedMeasurement> cohort;
  std::vector<FusedEstimate> fused;
};

Fixture synthetic(std::uint64_t seed, std::size_t n = 1366) {
  SimConfig c;
  c.n_patients = n;
  auto s = make_stream(seed, 0);
  Fixture f;
  f.cohort = simulate(c, s).measurements();
  f.fused = fuse_cohort(f.cohort, InstrumentSigma{});
  return f;
}

PropagationConfig config_for(LvefSource source, std::size_t replicates, std::uint64_t seed) {
  PropagationConfig c;
  c.source = source;
  c.replicates = replicates;
  c.seed = seed;
  return c;
}

// Zero sigmas for the raw sources and zero theta spread for the fused one.
void silence(Fixture& f, PropagationConfig& c) {
  c.sigmas.visual_sigma = 0.0;
  c.sigmas.simpson_sigma = 0.0;
  for (auto& e : f.fused) e.theta_sigma = 0.0;
}

bool same_result(const ReplicateResult& a, const ReplicateResult& b) {
  if (a.event_rate != b.event_rate || a.hazard_ratio != b.hazard_ratio) return false;
  for (std::size_t k = 0; k < 3; ++k) {
    if (a.curves[k].has_value() != b.curves[k].has_value()) return false;
    if (a.curves[k] && (a.curves[k]->survival != b.curves[k]->survival ||
                        a.curves[k]->times != b.curves[k]->times)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("stratify boundaries") {
  const std::vector<double> v{34.99, 35.0, 50.0, 50.01};
  CHECK(stratify(v, {}) ==
        std::vector<Stratum>{Stratum::low, Stratum::mid, Stratum::mid, Stratum::high});
  CHECK(stratify(std::vector<double>(4, 55.0), {}) == std::vector<Stratum>(4, Stratum::high));
  CHECK(stratify(std::vector<double>{}, {}).empty());
}

TEST_CASE("realize_lvef") {
  auto f = synthetic(1, 200);
  auto c = config_for(LvefSource::visual, 2, 0);
  auto s = make_stream(0, 0);

  SUBCASE("zero spread returns the centers") {
    silence(f, c);
    for (LvefSource src : kSources) {
      c.source = src;
      const auto v = realize_lvef(f.cohort, f.fused, c, s);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double center = src == LvefSource::visual    ? f.cohort[i].visual_lvef
                              : src == LvefSource::simpson ? f.cohort[i].simpson_lvef
                                                           : f.fused[i].theta;
        REQUIRE(v[i] == std::clamp(center, 1.0, 99.0));
      }
    }
  }
  SUBCASE("one assimilated patient") {
    const PairedMeasurement m{"A", 50, 55, 100, true};
    const std::vector<PairedMeasurement> one{m};
    const std::vector<FusedEstimate> fe{fuse(50, 55, InstrumentSigma{})};
    c.source = LvefSource::assimilated;
    double sum = 0.0;
    for (int r = 0; r < 10000; ++r) sum += realize_lvef(one, fe, c, s)[0];
    CHECK(std::abs(sum / 1e4 - 53.364) <= 0.25);
  }
  SUBCASE("clamp") {
    const std::vector<PairedMeasurement> low{{"B", 2, 2, 10, false}};
    const std::vector<FusedEstimate> fe{fuse(2, 2, InstrumentSigma{})};
    for (LvefSource src : kSources) {
      c.source = src;
      for (int r = 0; r < 2000; ++r) REQUIRE(realize_lvef(low, fe, c, s)[0] >= 1.0);
    }
  }
  SUBCASE("misaligned") {
    f.fused.pop_back();
    try {
      realize_lvef(f.cohort, f.fused, c, s);
      FAIL("expected invalid-parameter");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_parameter);
    }
  }
}

TEST_CASE("run_replicate") {
  auto f = synthetic(7);
  auto c = config_for(LvefSource::assimilated, 2, 7);

  auto s1 = make_stream(7, 3);
  auto s2 = make_stream(7, 3);
  const auto a = run_replicate(f.cohort, f.fused, c, s1);
  const auto b = run_replicate(f.cohort, f.fused, c, s2);
  CHECK(same_result(a, b));
  for (const auto& rate : a.event_rate) {
    REQUIRE(rate.has_value());
    CHECK(*rate >= 0.0);
    CHECK(*rate <= 1.0);
  }
  REQUIRE(a.hazard_ratio.has_value());
  CHECK(*a.hazard_ratio > 0.0);

  silence(f, c);
  auto s3 = make_stream(7, 4);
  auto s4 = make_stream(7, 99);
  CHECK(same_result(run_replicate(f.cohort, f.fused, c, s3),
                    run_replicate(f.cohort, f.fused, c, s4)));
}

TEST_CASE("empty strata are marked absent") {
  const std::vector<PairedMeasurement> cohort{
      {"A", 60, 60, 10, true}, {"B", 70, 70, 20, true}, {"C", 65, 65, 30, false},
      {"D", 80, 80, 40, true}};
  const auto fused = fuse_cohort(cohort, InstrumentSigma{});
  auto c = config_for(LvefSource::simpson, 2, 0);
  c.sigmas.simpson_sigma = 0.0;
  const auto r = point_analysis(cohort, fused, c);
  CHECK_FALSE(r.event_rate[0].has_value());
  CHECK_FALSE(r.event_rate[1].has_value());
  REQUIRE(r.event_rate[2].has_value());
  CHECK(*r.event_rate[2] == doctest::Approx(1.0 - (3.0 / 4.0) * (2.0 / 3.0) * 0.0));
}

TEST_CASE("zero noise collapses every band onto the point analysis") {
  auto f = synthetic(11, 600);
  for (LvefSource src : kSources) {
    auto c = config_for(src, 20, 11);
    silence(f, c);
    const auto point = point_analysis(f.cohort, f.fused, c);
    const auto sum = propagate(f.cohort, f.fused, c);
    REQUIRE(point.hazard_ratio.has_value());
    CHECK(sum.hazard_ratio.width() == 0.0);
    CHECK(sum.hazard_ratio.mean == doctest::Approx(*point.hazard_ratio).epsilon(1e-12));
    for (std::size_t k = 0; k < 3; ++k) {
      if (!point.event_rate[k]) continue;
      REQUIRE(sum.event_rate[k].has_value());
      CHECK(sum.event_rate[k]->width() == 0.0);
      CHECK(sum.event_rate[k]->p50 == *point.event_rate[k]);
      const auto& band = *sum.km_bands[k];
      for (std::size_t i = 0; i < band.times.size(); ++i) {
        REQUIRE(band.upper[i] - band.lower[i] == doctest::Approx(0.0));
        REQUIRE(band.mean[i] == doctest::Approx(km_event_rate_at(*point.curves[k],
                                                                 band.times[i])));
      }
    }
  }
}

TEST_CASE("propagate is deterministic across thread counts") {
  const auto f = synthetic(12, 800);
  auto c = config_for(LvefSource::assimilated, 24, 5);
  c.threads = 1;
  const auto serial = propagate(f.cohort, f.fused, c);
  c.threads = 7;
  const auto parallel = propagate(f.cohort, f.fused, c);
  CHECK(serial.hazard_ratio.mean == parallel.hazard_ratio.mean);
  CHECK(serial.hazard_ratio.p025 == parallel.hazard_ratio.p025);
  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(serial.km_bands[k].has_value() == parallel.km_bands[k].has_value());
    if (!serial.km_bands[k]) continue;
    CHECK(serial.km_bands[k]->lower == parallel.km_bands[k]->lower);
    CHECK(serial.km_bands[k]->upper == parallel.km_bands[k]->upper);
    CHECK(serial.event_rate[k]->mean == parallel.event_rate[k]->mean);
  }
}

TEST_CASE("band nesting and replicate percentiles") {
  const auto f = synthetic(13);
  auto c = config_for(LvefSource::visual, 60, 13);
  const auto sum = propagate(f.cohort, f.fused, c);
  CHECK(sum.replicates == 60);
  CHECK(sum.hazard_ratio.count + sum.hr_failures == 60);
  CHECK(sum.hazard_ratio.p025 <= sum.hazard_ratio.mean);
  CHECK(sum.hazard_ratio.mean <= sum.hazard_ratio.p975);

  // Percentiles recomputed from the individual replicates.
  std::vector<double> hr;
  for (std::size_t r = 0; r < 60; ++r) {
    auto s = make_stream(13, r);
    const auto one = run_replicate(f.cohort, f.fused, c, s);
    if (one.hazard_ratio) hr.push_back(*one.hazard_ratio);
  }
  const std::array<double, 2> levels{0.025, 0.975};
  const auto oracle = summarize(hr, levels);
  CHECK(sum.hazard_ratio.mean == doctest::Approx(oracle.mean).epsilon(1e-12));
  CHECK(sum.hazard_ratio.p025 <= oracle.quantile(0.025) + 1e-12);
  CHECK(sum.hazard_ratio.p975 >= oracle.quantile(0.975) - 1e-12);

  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(sum.event_rate[k].has_value());
    const auto& b = *sum.event_rate[k];
    CHECK(b.p025 <= b.mean);
    CHECK(b.mean <= b.p975);
    const auto& km = *sum.km_bands[k];
    CHECK(km.times.front() == 0.0);
    for (std::size_t i = 0; i < km.times.size(); ++i) {
      REQUIRE(km.lower[i] <= km.mean[i]);
      REQUIRE(km.mean[i] <= km.upper[i]);
      REQUIRE(km.lower[i] >= 0.0);
      REQUIRE(km.upper[i] <= 1.0);
    }
  }
}

TEST_CASE("event rates fall with LVEF stratum") {
  const auto f = synthetic(14);
  const auto sum = propagate(f.cohort, f.fused, config_for(LvefSource::assimilated, 50, 14));
  const double low = sum.event_rate[0]->mean;
  const double mid = sum.event_rate[1]->mean;
  const double high = sum.event_rate[2]->mean;
  MESSAGE("event rates low/mid/high: " << low << " " << mid << " " << high);
  CHECK(low > mid);
  CHECK(low > high);
  CHECK(std::abs(mid - high) < low - mid);
}

TEST_CASE("hazard-ratio failures are counted, not aggregated") {
  // Every event happens in the highest-LVEF patient: the fit separates.
  const std::vector<PairedMeasurement> cohort{
      {"A", 90, 90, 5, true}, {"B", 40, 40, 50, false}, {"C", 30, 30, 50, false}};
  const auto fused = fuse_cohort(cohort, InstrumentSigma{});
  auto c = config_for(LvefSource::visual, 4, 1);
  c.sigmas.visual_sigma = 0.0;
  const auto point = point_analysis(cohort, fused, c);
  CHECK_FALSE(point.hazard_ratio.has_value());
  REQUIRE(point.hr_failure.has_value());
  try {
    propagate(cohort, fused, c);
    FAIL("expected propagation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::propagation);
  }
}

TEST_CASE("config validation") {
  auto c = config_for(LvefSource::visual, 1, 0);
  CHECK_THROWS_AS(c.validate(), Error);
  c.replicates = 10;
  c.band_edges = {50, 35};
  CHECK_THROWS_AS(c.validate(), Error);
  c.band_edges = {35, 50};
  c.horizon = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.horizon = 365.0;
  CHECK_NOTHROW(c.validate());
  CHECK(parse_source("assimilated") == LvefSource::assimilated);
  CHECK_THROWS_AS(parse_source("all"), Error);
}

// Registered as its own test: the Cox slope's replicate spread is governed by
// attenuation, and the fused source does not have the narrowest band.
TEST_CASE("assimilated HR band is narrower than the visual band" * doctest::test_suite("ordering")) {
  const auto f = synthetic(7);
  auto v = propagate(f.cohort, f.fused, config_for(LvefSource::visual, 200, 7));
  auto s = propagate(f.cohort, f.fused, config_for(LvefSource::simpson, 200, 7));
  auto a = propagate(f.cohort, f.fused, config_for(LvefSource::assimilated, 200, 7));
  MESSAGE("HR band widths visual/simpson/assimilated: " << v.hazard_ratio.width() << " "
                                                        << s.hazard_ratio.width() << " "
                                                        << a.hazard_ratio.width());
  CHECK(a.hazard_ratio.width() < v.hazard_ratio.width());
}
