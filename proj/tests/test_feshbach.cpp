#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "becopt/feshbach.hpp"
#include "becopt/rng.hpp"
#include "becopt/textio.hpp"

using namespace becopt;

namespace {

FeshbachScenario bare_scenario() {
  FeshbachScenario s;
  s.name = "bare";
  s.field_G = 4.0;
  s.a_background_a0 = 140.0;
  s.l3_background_cm6s = 1e-28;
  s.l3_cap_cm6s = 1e-25;
  return s;
}

}  // namespace

TEST_CASE("scattering length with no resonances is the background") {
  const FeshbachScenario s = bare_scenario();
  for (double b : {0.5, 2.0, 4.8, 9.9})
    CHECK(scattering_length_a0(s, b) == doctest::Approx(140.0).epsilon(1e-15));
}

TEST_CASE("single resonance zero crossing and pole") {
  FeshbachScenario s = bare_scenario();
  s.resonances = {{3.0, 0.2, ResonanceOrder::low, 0.0}};
  CHECK(std::abs(scattering_length_a0(s, 3.0 + 0.2)) < 1e-12 * s.a_background_a0);
  CHECK_THROWS_AS(scattering_length_a0(s, 3.0), std::domain_error);
  CHECK(three_body_rate_cm6s(s, 3.0, 1.0) == s.l3_cap_cm6s);  // pole clamps to the cap
}

TEST_CASE("three-resonance spectrum matches term-by-term oracle") {
  FeshbachScenario s = bare_scenario();
  s.resonances = {{2.1, 0.05, ResonanceOrder::low, 0.0},
                  {3.7, -0.12, ResonanceOrder::low, 0.0},
                  {6.4, 0.30, ResonanceOrder::low, 0.0}};
  for (double b : {1.0, 2.6, 4.2, 5.5, 8.8}) {
    double expected = s.a_background_a0;
    for (const auto& r : s.resonances) expected *= 1.0 - r.width_G / (b - r.position_G);
    CHECK(scattering_length_a0(s, b) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("three-body rate baseline and clamps") {
  FeshbachScenario s = bare_scenario();
  s.resonances = {{3.0, 0.02, ResonanceOrder::low, 0.0},
                  {5.0, 0.05, ResonanceOrder::high, 0.4}};
  // Far from everything the rate sits at the background.
  CHECK(three_body_rate_cm6s(s, 40.0, 1.0) == doctest::Approx(s.l3_background_cm6s).epsilon(1e-6));
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const double b = rng.uniform(0.5, 9.5);
    const double t = rng.uniform(0.0, 30.0);
    const double l3 = three_body_rate_cm6s(s, b, t);
    CHECK(l3 >= s.l3_background_cm6s);
    CHECK(l3 <= s.l3_cap_cm6s);
  }
}

TEST_CASE("thermal activation makes the rate non-decreasing in T") {
  FeshbachScenario s = bare_scenario();
  s.resonances = {{3.91, 0.05, ResonanceOrder::high, 0.25}};
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double b = rng.uniform(3.5, 4.3);
    const double t1 = rng.uniform(0.0, 10.0);
    const double t2 = t1 + rng.uniform(0.0, 10.0);
    CHECK(three_body_rate_cm6s(s, b, t1) <= three_body_rate_cm6s(s, b, t2) + 1e-40);
  }
}

TEST_CASE("rate decreases moving off the resonance center") {
  FeshbachScenario s = bare_scenario();
  s.resonances = {{3.91, 0.05, ResonanceOrder::high, 0.25}};
  const double t = 1.0;
  double prev = three_body_rate_cm6s(s, 3.91, t);
  for (double d : {0.01, 0.03, 0.08, 0.15, 0.30}) {
    const double l3 = three_body_rate_cm6s(s, 3.91 + d, t);
    CHECK(l3 < prev);
    prev = l3;
  }
}

TEST_CASE("rate is continuous in B away from low-order poles") {
  const FeshbachScenario s = builtin_thulium_scenario();
  const double t = 0.5;
  for (double b = 3.0; b < 5.6; b += 0.01) {
    const double l1 = three_body_rate_cm6s(s, b, t);
    const double l2 = three_body_rate_cm6s(s, b + 1e-7, t);
    CHECK(std::abs(l2 - l1) < 1e-3 * l1 + 1e-40);
  }
}

TEST_CASE("builtin scenario orders the named fields") {
  const FeshbachScenario s = builtin_thulium_scenario();
  // Near-degeneracy temperature: the saturating field keeps the higher rate.
  for (double t : {0.1, 0.3, 1.0, 5.0})
    CHECK(three_body_rate_cm6s(s, 3.91, t) > 2.0 * three_body_rate_cm6s(s, 4.80, t));
}

TEST_CASE("scenario table tags follow the rate ordering") {
  const auto table = scenario_table();
  REQUIRE(table.size() == 4);
  bool saw_391 = false, saw_480 = false;
  double l3_max = 0.0, l3_min = 1e30;
  for (const auto& row : table) {
    l3_max = std::max(l3_max, row.l3_cm6s);
    l3_min = std::min(l3_min, row.l3_cm6s);
  }
  const FeshbachScenario s = builtin_thulium_scenario();
  for (const auto& row : table) {
    if (row.field_G == 3.91) {
      saw_391 = true;
      CHECK(row.tag == "saturating");
      CHECK(row.l3_cm6s == l3_max);
    }
    if (row.field_G == 4.80) {
      saw_480 = true;
      CHECK(row.tag == "relieved");
      CHECK(row.l3_cm6s == l3_min);
    }
    if (row.tag == "intermediate") {
      CHECK(row.l3_cm6s > s.l3_background_cm6s);
      CHECK(row.l3_cm6s < l3_max);
    }
  }
  CHECK(saw_391);
  CHECK(saw_480);
}

TEST_CASE("scenario json round trip") {
  const FeshbachScenario s = builtin_thulium_scenario();
  const auto path = std::filesystem::temp_directory_path() / "becopt_scenario_rt.json";
  write_file(path.string(), scenario_to_json(s));
  const FeshbachScenario loaded = load_scenario(path.string());
  CHECK(loaded.a_background_a0 == s.a_background_a0);
  CHECK(loaded.l3_background_cm6s == s.l3_background_cm6s);
  CHECK(loaded.l3_cap_cm6s == s.l3_cap_cm6s);
  REQUIRE(loaded.resonances.size() == s.resonances.size());
  for (std::size_t i = 0; i < s.resonances.size(); ++i) {
    CHECK(loaded.resonances[i].position_G == s.resonances[i].position_G);
    CHECK(loaded.resonances[i].width_G == s.resonances[i].width_G);
    CHECK(loaded.resonances[i].order == s.resonances[i].order);
  }
  std::filesystem::remove(path);
}
