#pragma once

#include "becopt/trap.hpp"

namespace becopt {

// Thermodynamic state of the trapped cloud at one instant. n_total counts
// every atom including the condensed ones; the thermal component is
// n_total - n_bec.
struct CloudState {
  double n_total = 0.0;
  double temperature_uK = 0.0;
  double n_bec = 0.0;
  double time_s = 0.0;
};

enum class PsdMethod { harmonic, single_beam };

struct PsdValue {
  double value = 0.0;
  PsdMethod method = PsdMethod::harmonic;
};

// Peak phase-space density of the thermal component,
// N_th * (hbar * omega_bar / (k_B T))^3.
//
// The crossed configuration evaluates this with the summed-potential
// frequency triple ("harmonic" method); the single-beam configuration with
// the dominant beam's own triple. Identical triples give identical values by
// construction, so the two methods agree wherever the dominant beam carries
// the confinement; near the configuration switch they differ only through
// the subdominant beam's contribution.
PsdValue psd(const CloudState& cloud, const TrapState& trap, double mass_kg);

// Same formula with an explicit frequency triple; exposed for the method
// agreement checks and for the simulator's physical (summed-triple) PSD.
double harmonic_psd(double n_thermal, double temperature_uK, double omega_bar);

// Boltzmann peak density of the thermal component,
// n0 = N_th * wx*wy*wz * (m / (2 pi k_B T))^{3/2}, in um^-3.
double peak_density_um3(const CloudState& cloud, const TrapState& trap, double mass_kg);

// Thermal de Broglie wavelength in um.
double thermal_de_broglie_um(double temperature_uK, double mass_kg);

// Ideal-gas condensed fraction max(0, 1 - (T/T_c)^3).
double condensate_fraction(double t_uK, double t_c_uK);

// Temperature at which the peak PSD of N atoms reaches the condensation
// threshold: T_c = (hbar * omega_bar / k_B) * (N / kCondensationPsd)^{1/3}.
// The same threshold triggers condensate growth in the simulator, so the
// closed form and the root of psd(T) = threshold coincide by construction.
double critical_temperature_uK(double n_atoms, double omega_bar);

}  // namespace becopt
