#include "becopt/trap.hpp"

#include <cmath>
#include <stdexcept>

#include "becopt/constants.hpp"

namespace becopt {

namespace {

void check_geometry(const BeamGeometry& geom) {
  if (geom.waist_x_um <= 0.0 || geom.waist_y_um <= 0.0)
    throw std::domain_error("beam waists must be positive");
  if (geom.polarizability_uK_per_W_um2 <= 0.0)
    throw std::domain_error("polarizability coefficient must be positive");
  if (geom.wavelength_um <= 0.0) throw std::domain_error("wavelength must be positive");
}

double rayleigh_um(double waist_um, double wavelength_um) {
  return kPi * waist_um * waist_um / wavelength_um;
}

// Curvature of one beam's potential about the focus, as omega^2 [rad^2/s^2]
// along (transverse waist_x dir, transverse waist_y dir, propagation dir).
std::array<double, 3> beam_curvatures(double depth_uK, const BeamGeometry& geom,
                                      double mass_kg) {
  const double depth_j = depth_uK * kJoulePerUK;
  const double wx_m = geom.waist_x_um * kUmToM;
  const double wy_m = geom.waist_y_um * kUmToM;
  const double zrx_m = rayleigh_um(geom.waist_x_um, geom.wavelength_um) * kUmToM;
  const double zry_m = rayleigh_um(geom.waist_y_um, geom.wavelength_um) * kUmToM;
  const double om2_tx = 4.0 * depth_j / (mass_kg * wx_m * wx_m);
  const double om2_ty = 4.0 * depth_j / (mass_kg * wy_m * wy_m);
  const double om2_ax = depth_j / mass_kg * (1.0 / (zrx_m * zrx_m) + 1.0 / (zry_m * zry_m));
  return {om2_tx, om2_ty, om2_ax};
}

// Maps a beam's (transverse_x, transverse_y, axial) curvatures onto lab axes.
std::array<double, 3> to_lab(const std::array<double, 3>& c, BeamAxis axis) {
  if (axis == BeamAxis::horizontal) return {c[2], c[0], c[1]};  // propagates along x
  return {c[0], c[1], c[2]};                                    // propagates along z
}

double gmean3(double a, double b, double c) { return std::cbrt(a * b * c); }

}  // namespace

double beam_depth_uK(double power_W, const BeamGeometry& geom) {
  check_geometry(geom);
  if (power_W < 0.0) throw std::domain_error("beam power must be non-negative");
  const double intensity = 2.0 * power_W / (kPi * geom.waist_x_um * geom.waist_y_um);
  return geom.polarizability_uK_per_W_um2 * intensity;
}

TrapState trap_state(double p_h_W, double p_v_W, const BeamGeometry& geom_h,
                     const BeamGeometry& geom_v, double mass_kg,
                     double crossed_threshold) {
  if (mass_kg <= 0.0) throw std::domain_error("mass must be positive");
  const double depth_h = beam_depth_uK(p_h_W, geom_h);
  const double depth_v = beam_depth_uK(p_v_W, geom_v);

  TrapState state;
  state.depth_uK = depth_h + depth_v;
  state.trapped = state.depth_uK > 0.0;
  if (!state.trapped) return state;

  const auto ch = to_lab(beam_curvatures(depth_h, geom_h, mass_kg), geom_h.axis);
  const auto cv = to_lab(beam_curvatures(depth_v, geom_v, mass_kg), geom_v.axis);
  state.omega_x = std::sqrt(ch[0] + cv[0]);
  state.omega_y = std::sqrt(ch[1] + cv[1]);
  state.omega_z = std::sqrt(ch[2] + cv[2]);
  state.omega_bar = gmean3(state.omega_x, state.omega_y, state.omega_z);

  const bool crossed = depth_h > 0.0 ? (depth_v / depth_h > crossed_threshold) : true;
  state.config = crossed ? TrapConfig::crossed : TrapConfig::single_beam;

  const auto& cd = depth_h >= depth_v ? ch : cv;
  state.single_beam_omega = {std::sqrt(cd[0]), std::sqrt(cd[1]), std::sqrt(cd[2])};
  state.single_beam_omega_bar = gmean3(state.single_beam_omega[0], state.single_beam_omega[1],
                                       state.single_beam_omega[2]);
  return state;
}

namespace {

// One beam's potential (J) at offset (tx, ty, ax) um in its own frame.
double beam_potential_j(double depth_uK, const BeamGeometry& geom, double tx_um,
                        double ty_um, double ax_um) {
  const double zrx = rayleigh_um(geom.waist_x_um, geom.wavelength_um);
  const double zry = rayleigh_um(geom.waist_y_um, geom.wavelength_um);
  const double fx = 1.0 + (ax_um / zrx) * (ax_um / zrx);
  const double fy = 1.0 + (ax_um / zry) * (ax_um / zry);
  const double wx2 = geom.waist_x_um * geom.waist_x_um * fx;
  const double wy2 = geom.waist_y_um * geom.waist_y_um * fy;
  const double envelope = std::exp(-2.0 * tx_um * tx_um / wx2 - 2.0 * ty_um * ty_um / wy2);
  return -depth_uK * kJoulePerUK / std::sqrt(fx * fy) * envelope;
}

}  // namespace

double potential_j(double p_h_W, double p_v_W, const BeamGeometry& geom_h,
                   const BeamGeometry& geom_v, double x_um, double y_um, double z_um) {
  const double depth_h = beam_depth_uK(p_h_W, geom_h);
  const double depth_v = beam_depth_uK(p_v_W, geom_v);
  double u = 0.0;
  // Horizontal beam: axial along x, waist_x along y, waist_y along z.
  u += beam_potential_j(depth_h, geom_h, y_um, z_um, x_um);
  // Vertical beam: axial along z, waist_x along x, waist_y along y.
  u += beam_potential_j(depth_v, geom_v, x_um, y_um, z_um);
  return u;
}

}  // namespace becopt
