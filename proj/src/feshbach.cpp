#include "becopt/feshbach.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "becopt/constants.hpp"
#include "becopt/textio.hpp"

namespace becopt {

namespace {
constexpr double kTFloorUK = 1e-3;  // 1 nK; keeps the activation factor finite
}

void FeshbachScenario::validate() const {
  if (field_G <= 0.0) throw std::domain_error("scenario field must be positive");
  if (a_background_a0 == 0.0) throw std::domain_error("background scattering length is zero");
  if (l3_background_cm6s <= 0.0 || l3_cap_cm6s < l3_background_cm6s)
    throw std::domain_error("require l3_cap >= l3_background > 0");
  for (const auto& r : resonances) {
    if (r.width_G == 0.0) throw std::domain_error("resonance width must be nonzero");
    if (r.position_G <= 0.0) throw std::domain_error("resonance position must be positive");
  }
}

double scattering_length_a0(const FeshbachScenario& scenario, double field_G) {
  double a = scenario.a_background_a0;
  for (const auto& r : scenario.resonances) {
    if (r.order != ResonanceOrder::low) continue;
    const double detuning = field_G - r.position_G;
    if (detuning == 0.0)
      throw std::domain_error("field sits exactly on a resonance pole");
    a *= 1.0 - r.width_G / detuning;
  }
  return a;
}

double elastic_cross_section_m2(const FeshbachScenario& scenario, double field_G) {
  const double a_m = scattering_length_a0(scenario, field_G) * kBohrRadius;
  return 8.0 * kPi * a_m * a_m;
}

double three_body_rate_cm6s(const FeshbachScenario& scenario, double field_G,
                            double temperature_uK) {
  if (temperature_uK < 0.0) throw std::domain_error("temperature must be non-negative");
  double raw;
  try {
    const double ratio = scattering_length_a0(scenario, field_G) / scenario.a_background_a0;
    raw = scenario.l3_background_cm6s * ratio * ratio * ratio * ratio;
  } catch (const std::domain_error&) {
    return scenario.l3_cap_cm6s;  // infinite-loss point
  }
  const double t = std::max(temperature_uK, kTFloorUK);
  const double amplitude = scenario.high_amplitude_cm6s();
  for (const auto& r : scenario.resonances) {
    if (r.order != ResonanceOrder::high) continue;
    const double d = field_G - r.position_G;
    const double w2 = r.width_G * r.width_G;
    const double lorentz = w2 / (d * d + w2);
    raw += amplitude * std::exp(-r.activation_uK / t) * lorentz;
  }
  return std::clamp(raw, scenario.l3_background_cm6s, scenario.l3_cap_cm6s);
}

std::vector<FieldTableRow> scenario_table(const FeshbachScenario& scenario,
                                          const std::vector<double>& fields_G,
                                          double t_ref_uK) {
  std::vector<FieldTableRow> rows;
  rows.reserve(fields_G.size());
  for (double b : fields_G)
    rows.push_back({b, three_body_rate_cm6s(scenario, b, t_ref_uK), ""});
  if (rows.empty()) return rows;
  const auto minmax = std::minmax_element(
      rows.begin(), rows.end(),
      [](const FieldTableRow& a, const FieldTableRow& b) { return a.l3_cm6s < b.l3_cm6s; });
  for (auto& row : rows) {
    if (row.l3_cm6s == minmax.second->l3_cm6s)
      row.tag = "saturating";
    else if (row.l3_cm6s == minmax.first->l3_cm6s)
      row.tag = "relieved";
    else
      row.tag = "intermediate";
  }
  return rows;
}

std::vector<FieldTableRow> scenario_table() {
  return scenario_table(builtin_thulium_scenario(), {3.91, 4.35, 4.80, 5.17}, 0.5);
}

FeshbachScenario builtin_thulium_scenario() {
  FeshbachScenario s;
  s.name = "thulium-1064-illustrative";
  s.field_G = 3.91;
  s.a_background_a0 = 140.0;
  s.l3_background_cm6s = 1e-28;
  s.l3_cap_cm6s = 1e-25;
  s.l3_high_amplitude_cm6s = 2e-27;
  s.resonances = {
      {2.50, 0.03, ResonanceOrder::low, 0.0},
      {5.90, 0.05, ResonanceOrder::low, 0.0},
      {7.20, 0.02, ResonanceOrder::low, 0.0},
      {3.91, 0.12, ResonanceOrder::high, 0.06},
      {5.30, 0.05, ResonanceOrder::high, 0.80},
  };
  return s;
}

namespace {

ResonanceOrder order_from_string(const std::string& s) {
  if (s == "low") return ResonanceOrder::low;
  if (s == "high") return ResonanceOrder::high;
  throw std::runtime_error("unknown resonance order '" + s + "'");
}

}  // namespace

FeshbachScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("scenario " + path + ": " + e.what());
  }
  FeshbachScenario s;
  s.name = j.value("name", std::string{"unnamed"});
  s.field_G = j.at("field_G").get<double>();
  s.a_background_a0 = j.at("a_background_a0").get<double>();
  s.l3_background_cm6s = j.at("l3_background_cm6_s").get<double>();
  s.l3_cap_cm6s = j.at("l3_cap_cm6_s").get<double>();
  s.l3_high_amplitude_cm6s = j.value("l3_high_amplitude_cm6_s", -1.0);
  for (const auto& rj : j.at("resonances")) {
    Resonance r;
    r.position_G = rj.at("position_G").get<double>();
    r.width_G = rj.at("width_G").get<double>();
    r.order = order_from_string(rj.at("order").get<std::string>());
    r.activation_uK = rj.value("activation_uK", 0.0);
    s.resonances.push_back(r);
  }
  s.validate();
  return s;
}

std::string scenario_to_json(const FeshbachScenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["field_G"] = s.field_G;
  j["a_background_a0"] = s.a_background_a0;
  j["l3_background_cm6_s"] = s.l3_background_cm6s;
  j["l3_cap_cm6_s"] = s.l3_cap_cm6s;
  if (s.l3_high_amplitude_cm6s > 0.0)
    j["l3_high_amplitude_cm6_s"] = s.l3_high_amplitude_cm6s;
  j["resonances"] = nlohmann::json::array();
  for (const auto& r : s.resonances) {
    nlohmann::json rj;
    rj["position_G"] = r.position_G;
    rj["width_G"] = r.width_G;
    rj["order"] = r.order == ResonanceOrder::low ? "low" : "high";
    if (r.order == ResonanceOrder::high) rj["activation_uK"] = r.activation_uK;
    j["resonances"].push_back(rj);
  }
  return j.dump(2) + "\n";
}

}  // namespace becopt
