#pragma once

#include <array>

namespace becopt {

enum class BeamAxis { horizontal, vertical };
enum class TrapConfig { single_beam, crossed };

// Static-waist Gaussian beam. The horizontal beam propagates along lab x
// with transverse waists (waist_x -> lab y, waist_y -> lab z); the vertical
// beam propagates along lab z with (waist_x -> lab x, waist_y -> lab y).
// Axial confinement comes from the Rayleigh ranges set by the wavelength.
struct BeamGeometry {
  double waist_x_um = 24.0;
  double waist_y_um = 54.2;
  BeamAxis axis = BeamAxis::horizontal;
  // Trap depth per unit peak intensity, uK / (W/um^2). Placeholder absolute
  // calibration; the artifact's claims are ratios and trends, not depths.
  double polarizability_uK_per_W_um2 = 6.1e4;
  double wavelength_um = 1.064;
};

struct TrapState {
  double depth_uK = 0.0;
  // Harmonic expansion of the summed two-beam potential at the crossing.
  double omega_x = 0.0;  // rad/s
  double omega_y = 0.0;
  double omega_z = 0.0;
  double omega_bar = 0.0;  // geometric mean
  TrapConfig config = TrapConfig::single_beam;
  // Frequencies of the dominant beam alone; the single-beam PSD method uses
  // these instead of the summed-potential triple.
  std::array<double, 3> single_beam_omega{0.0, 0.0, 0.0};
  double single_beam_omega_bar = 0.0;
  bool trapped = false;
};

// Depth of one beam at its focus: 2 * alpha * P / (pi * w_x * w_y).
// Throws std::domain_error for negative power.
double beam_depth_uK(double power_W, const BeamGeometry& geom);

// Combined trap of the two beams. Both powers zero yields a zero-depth state
// with trapped = false; downstream operations reject it.
TrapState trap_state(double p_h_W, double p_v_W, const BeamGeometry& geom_h,
                     const BeamGeometry& geom_v, double mass_kg,
                     double crossed_threshold);

// Full two-beam Gaussian potential (J, negative well) at lab position in um,
// including beam divergence. Reference for curvature cross-checks.
double potential_j(double p_h_W, double p_v_W, const BeamGeometry& geom_h,
                   const BeamGeometry& geom_v, double x_um, double y_um, double z_um);

}  // namespace becopt
