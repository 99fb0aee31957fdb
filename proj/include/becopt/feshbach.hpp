#pragma once

#include <string>
#include <vector>

namespace becopt {

enum class ResonanceOrder { low, high };

struct Resonance {
  double position_G = 0.0;
  double width_G = 0.0;
  ResonanceOrder order = ResonanceOrder::low;
  // High-order resonances are suppressed at low temperature; their loss
  // contribution carries the Arrhenius factor exp(-activation / T).
  double activation_uK = 0.0;
};

struct FeshbachScenario {
  std::string name;
  double field_G = 0.0;  // operating field of the run; commands may override
  double a_background_a0 = 140.0;
  std::vector<Resonance> resonances;
  double l3_background_cm6s = 1e-28;
  double l3_cap_cm6s = 1e-25;
  // Peak of a fully activated high-order loss resonance; non-positive means
  // "use l3_cap".
  double l3_high_amplitude_cm6s = -1.0;

  void validate() const;
  double high_amplitude_cm6s() const {
    return l3_high_amplitude_cm6s > 0.0 ? l3_high_amplitude_cm6s : l3_cap_cm6s;
  }
};

// Elastic scattering length in Bohr radii,
// a(B) = a_bg * prod_i (1 - delta_i / (B - B0_i)) over the low-order
// resonances. High-order resonances are centrifugal-barrier suppressed in
// the elastic channel and enter only through the loss rate below.
// Throws std::domain_error exactly at a low-order pole.
double scattering_length_a0(const FeshbachScenario& scenario, double field_G);

// Elastic cross section 8 pi a^2 in m^2.
double elastic_cross_section_m2(const FeshbachScenario& scenario, double field_G);

// Three-body recombination rate, clamped to [l3_background, l3_cap]:
//   L3 = bg * (a(B)/a_bg)^4
//      + sum over high-order resonances of
//          amplitude * exp(-T_act / max(T, T_floor)) * w^2 / ((B - B0)^2 + w^2).
// Exactly at a low-order pole the rate is the cap.
double three_body_rate_cm6s(const FeshbachScenario& scenario, double field_G,
                            double temperature_uK);

struct FieldTableRow {
  double field_G = 0.0;
  double l3_cm6s = 0.0;
  std::string tag;  // saturating | intermediate | relieved
};

// The built-in field set used by the acceptance runs: the saturating field,
// the relieved one, and two intermediates.
std::vector<FieldTableRow> scenario_table();
std::vector<FieldTableRow> scenario_table(const FeshbachScenario& scenario,
                                          const std::vector<double>& fields_G,
                                          double t_ref_uK);

// Illustrative thulium-like scenario shipped with the repo; the scenario
// file under configs/ carries the same values.
FeshbachScenario builtin_thulium_scenario();

FeshbachScenario load_scenario(const std::string& path);
std::string scenario_to_json(const FeshbachScenario& scenario);

}  // namespace becopt
