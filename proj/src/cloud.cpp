#include "becopt/cloud.hpp"

#include <cmath>
#include <stdexcept>

#include "becopt/constants.hpp"

namespace becopt {

namespace {

double thermal_count(const CloudState& cloud) {
  if (cloud.n_total < 0.0 || cloud.n_bec < 0.0 || cloud.n_bec > cloud.n_total)
    throw std::domain_error("cloud counts violate 0 <= n_bec <= n_total");
  return cloud.n_total - cloud.n_bec;
}

}  // namespace

double harmonic_psd(double n_thermal, double temperature_uK, double omega_bar) {
  if (n_thermal == 0.0) return 0.0;
  if (temperature_uK <= 0.0)
    throw std::domain_error("temperature must be positive for a thermal cloud");
  const double x = kHbar * omega_bar / (temperature_uK * kJoulePerUK);
  return n_thermal * x * x * x;
}

PsdValue psd(const CloudState& cloud, const TrapState& trap, double /*mass_kg*/) {
  if (!trap.trapped) throw std::domain_error("psd requires a trapped state");
  const double n_th = thermal_count(cloud);
  if (trap.config == TrapConfig::crossed)
    return {harmonic_psd(n_th, cloud.temperature_uK, trap.omega_bar), PsdMethod::harmonic};
  return {harmonic_psd(n_th, cloud.temperature_uK, trap.single_beam_omega_bar),
          PsdMethod::single_beam};
}

double peak_density_um3(const CloudState& cloud, const TrapState& trap, double mass_kg) {
  if (!trap.trapped) throw std::domain_error("peak density requires a trapped state");
  const double n_th = thermal_count(cloud);
  if (n_th == 0.0) return 0.0;
  if (cloud.temperature_uK <= 0.0)
    throw std::domain_error("temperature must be positive for a thermal cloud");
  const double kt = cloud.temperature_uK * kJoulePerUK;
  const double f = mass_kg / (2.0 * kPi * kt);
  const double n0_m3 =
      n_th * trap.omega_x * trap.omega_y * trap.omega_z * f * std::sqrt(f);
  return n0_m3 * 1e-18;
}

double thermal_de_broglie_um(double temperature_uK, double mass_kg) {
  if (temperature_uK <= 0.0) throw std::domain_error("temperature must be positive");
  const double kt = temperature_uK * kJoulePerUK;
  return kPlanck / std::sqrt(2.0 * kPi * mass_kg * kt) * kMToUm;
}

double condensate_fraction(double t_uK, double t_c_uK) {
  if (t_uK < 0.0 || t_c_uK <= 0.0)
    throw std::domain_error("condensate fraction requires T >= 0 and T_c > 0");
  const double r = t_uK / t_c_uK;
  const double f = 1.0 - r * r * r;
  return f > 0.0 ? f : 0.0;
}

double critical_temperature_uK(double n_atoms, double omega_bar) {
  if (n_atoms <= 0.0 || omega_bar <= 0.0)
    throw std::domain_error("critical temperature requires N > 0 and omega_bar > 0");
  return kHbar * omega_bar / kJoulePerUK * std::cbrt(n_atoms / kCondensationPsd);
}

}  // namespace becopt
