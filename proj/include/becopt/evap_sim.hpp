#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "becopt/cloud.hpp"
#include "becopt/feshbach.hpp"
#include "becopt/ramps.hpp"
#include "becopt/trap.hpp"

namespace becopt {

struct SimConfig {
  double atom_mass_kg = 2.8049852055594e-25;  // thulium-169
  BeamGeometry geom_h{24.0, 54.2, BeamAxis::horizontal, 6.1e4, 1.064};
  BeamGeometry geom_v{36.0, 36.0, BeamAxis::vertical, 6.1e4, 1.064};
  double crossed_threshold = 2e-5;

  double initial_n = 1e6;
  double initial_t_uK = 22.5;

  // Truncated-evaporation formulas lose meaning below this depth/kT ratio.
  double eta_floor = 1.0;
  // Condensate three-body losses are suppressed relative to the thermal
  // coefficient by the correlation factor.
  double condensate_correlation_factor = 1.0 / 6.0;

  // Adaptive step control.
  double rel_tol = 1e-9;
  double abs_tol_n = 1e-6;
  double abs_tol_theta = 1e-15;
  double max_step_s = 0.05;

  // Model ablation switches; the analytic-limit checks use them.
  bool enable_evaporation = true;
  bool enable_three_body_heating = true;
  bool enable_condensate = true;

  double n_floor = 1.0;  // below one atom the cloud counts as lost
};

// Instantaneous per-channel atom rates (atoms/s) and the resulting state
// derivatives. The total dN/dt is exactly the sum of the three loss
// channels; condensate growth only transfers atoms between components.
struct ChannelRates {
  double evaporation = 0.0;        // thermal loss, <= 0
  double three_body_thermal = 0.0; // thermal loss, <= 0
  double three_body_bec = 0.0;     // condensate loss, <= 0
  double bec_growth = 0.0;         // thermal <-> condensate transfer
  double d_n = 0.0;
  double d_t_uK = 0.0;             // collisional part only
  double d_n_bec = 0.0;
};

// Rate equations at fixed trap. eta below the floor raises
// std::domain_error; the driver catches it and truncates the run.
// The scattering length entering the Thomas-Fermi density is recovered from
// sigma_el = 8 pi a^2.
ChannelRates derivatives(const CloudState& state, const TrapState& trap,
                         double l3_cm6s, double sigma_el_m2, const SimConfig& config);

struct TrajectoryPoint {
  double time_s = 0.0;
  CloudState cloud;
  TrapState trap;
  double psd = 0.0;  // reported via the configuration-appropriate method
  ChannelRates rates;
  double p_h_W = 0.0;
  double p_v_W = 0.0;
  double l3_cm6s = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  bool lost_cloud = false;
  // Total atom number when the physical PSD first crossed the condensation
  // threshold; zero if it never did.
  double n_at_condensation = 0.0;
  double t_at_condensation = -1.0;
  int clip_events = 0;  // steps where n_bec had to be clipped into [0, n]

  const TrajectoryPoint& front() const { return points.front(); }
  const TrajectoryPoint& back() const { return points.back(); }
};

// Integrates the coupled (N, T, N_BEC) dynamics through the power schedule.
// Temperature additionally tracks the trap adiabatically (T/omega_bar is the
// integrated variable), so a slow power change with collisions off conserves
// phase-space density. Runs that lose the cloud return the truncated
// trajectory flagged lost_cloud instead of throwing.
Trajectory run(const RampSchedule& schedule, const FeshbachScenario& scenario,
               const SimConfig& config);

using DecayCurve = std::vector<std::pair<double, double>>;  // (t, N_bec)

// Pure condensate three-body decay at constant trap and temperature.
DecayCurve decay_bec(const CloudState& initial, const TrapState& trap,
                     const FeshbachScenario& scenario, const SimConfig& config,
                     double duration_s, int n_samples);

DecayCurve rescale_curve(const DecayCurve& curve, double x_factor, double y_factor);

// Columns: time_s,N,T_uK,N_bec,psd,P_H_W,P_V_W,L3
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace becopt
