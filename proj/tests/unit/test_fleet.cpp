#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "roadbird/fleet.hpp"
#include "roadbird/stats.hpp"

using namespace roadbird;

TEST_CASE("sample_headway evaluates the exponential variate") {
  CHECK(sample_headway(36.0, 1.0) == doctest::Approx(0.0));
  CHECK(sample_headway(36.0, std::exp(-1.0)) == doctest::Approx(36.0));
  CHECK(sample_headway(36.0, 0.5) == doctest::Approx(24.95329850015803));
  CHECK_THROWS_AS(sample_headway(36.0, 0.0), FleetError);
  CHECK_THROWS_AS(sample_headway(0.0, 0.5), FleetError);
}

TEST_CASE("headway sample mean and K-S against an independent reference") {
  RandomStream rng(11);
  const double mu = 36.0;
  std::vector<double> samples(100000);
  for (double& s : samples) s = sample_headway(mu, rng.uniform01());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  CHECK(std::fabs(mean - mu) / mu < 0.01);

  // independently generated exponential reference stream
  RandomStream ref_rng(4242);
  std::vector<double> reference(20000);
  for (double& s : reference) s = -mu * std::log(ref_rng.uniform01());
  const double p = ks_two_sample(samples, reference);
  CHECK(p > 0.05);
}

TEST_CASE("two-stage class sampling reproduces share products") {
  const FleetMix dhaka(55.0, 40.0, 5.0);
  CHECK(dhaka.class_probability("rickshaw") == doctest::Approx(0.4895));
  CHECK(dhaka.class_probability("bicycle") == doctest::Approx(0.0495));
  CHECK(dhaka.class_probability("cng") == doctest::Approx(0.332));
  CHECK(dhaka.class_probability("motorbike") == doctest::Approx(0.044));

  RandomStream rng(5);
  std::map<std::string, int> counts;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) counts[std::string(dhaka.sample(rng).name)]++;
  for (const ClassShare& s : dhaka.shares()) {
    const double expected = dhaka.class_probability(s.vehicle.name);
    const double got = counts[s.vehicle.name] / static_cast<double>(n);
    CAPTURE(s.vehicle.name);
    CHECK(std::fabs(got - expected) < 0.003);
  }
}

TEST_CASE("degenerate homogeneous mix draws only medium classes") {
  const FleetMix homo(0.0, 100.0, 0.0);
  RandomStream rng(3);
  for (int i = 0; i < 2000; ++i)
    CHECK(homo.sample(rng).category == SpeedCategory::medium);
}

TEST_CASE("fast-category share verified by Monte Carlo") {
  const FleetMix miami(9.0, 75.0, 16.0);
  RandomStream rng(17);
  int fast = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i)
    if (miami.sample(rng).category == SpeedCategory::fast) ++fast;
  CHECK(std::fabs(fast / static_cast<double>(n) - 0.16) < 0.003);
}

TEST_CASE("invalid mixes are rejected") {
  CHECK_THROWS_AS(FleetMix(50.0, 40.0, 5.0), FleetError);    // sums to 95
  CHECK_THROWS_AS(FleetMix(-5.0, 100.0, 5.0), FleetError);   // negative
  CHECK_THROWS_AS(FleetMix(120.0, -20.0, 0.0), FleetError);  // out of range
}

TEST_CASE("class table obeys the category speed bands") {
  for (const ClassShare& s : default_class_shares()) {
    CHECK_NOTHROW(s.vehicle.validate());
    switch (s.vehicle.category) {
      case SpeedCategory::slow: CHECK(s.vehicle.max_speed_kmh <= 15.0); break;
      case SpeedCategory::medium:
        CHECK(s.vehicle.max_speed_kmh >= 30.0);
        CHECK(s.vehicle.max_speed_kmh <= 50.0);
        break;
      case SpeedCategory::fast:
        CHECK(s.vehicle.max_speed_kmh >= 80.0);
        CHECK(s.vehicle.max_speed_kmh <= 120.0);
        break;
    }
  }
  VehicleClass bad = default_class_shares()[0].vehicle;
  bad.max_speed_kmh = 40.0;  // slow category capped at 15
  CHECK_THROWS_AS(bad.validate(), FleetError);
}

TEST_CASE("arrival generation density and edge cases") {
  RandomStream rng(23);
  const DemandProfile profile{DemandLevel::low, 100.0};
  CHECK(profile.mean_headway() == doctest::Approx(36.0));
  CHECK(DemandProfile{DemandLevel::high, 800.0}.mean_headway() ==
        doctest::Approx(4.5));

  CHECK(generate_arrivals(profile, 0.0, rng).empty());

  double total = 0.0;
  const int runs = 1000;
  for (int r = 0; r < runs; ++r) {
    const auto arrivals = generate_arrivals(profile, 1800.0, rng);
    for (std::size_t i = 0; i + 1 < arrivals.size(); ++i)
      REQUIRE(arrivals[i] < arrivals[i + 1]);
    if (!arrivals.empty()) {
      REQUIRE(arrivals.front() >= 0.0);
      REQUIRE(arrivals.back() < 1800.0);
    }
    total += static_cast<double>(arrivals.size());
  }
  // Poisson count oracle: expectation 50 per run
  CHECK(std::fabs(total / runs - 50.0) / 50.0 < 0.05);
}

TEST_CASE("occupied_strips rounds up and never returns zero") {
  CHECK(occupied_strips(1.8, 2.5) == 1);  // fully contained in one strip
  CHECK(occupied_strips(1.8, 0.5) == 4);
  CHECK(occupied_strips(0.5, 0.5) == 1);  // exact fit
  CHECK(occupied_strips(2.4, 1.2) == 2);  // binary-representation hazard
  CHECK_THROWS_AS(occupied_strips(0.0, 0.5), FleetError);
  CHECK_THROWS_AS(occupied_strips(1.8, 0.0), FleetError);
}

TEST_CASE("occupied_strips is monotone non-increasing in strip width") {
  for (double vw = 0.25; vw <= 3.0; vw += 0.25) {
    int prev = 1 << 20;
    for (double sw = 0.1; sw <= 3.0; sw += 0.1) {
      const int n = occupied_strips(vw, sw);
      CHECK(n >= 1);
      CHECK(n <= prev);
      prev = n;
    }
  }
}
