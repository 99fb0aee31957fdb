#include "becopt/evap_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "becopt/constants.hpp"
#include "becopt/textio.hpp"

namespace becopt {

namespace {

constexpr double kGaussianN2Average = 1.0 / (3.0 * 1.7320508075688772);  // <n^2>/n0^2
constexpr double kTfN2Average = 8.0 / 21.0;                              // <n^2>/np^2

// Thomas-Fermi peak density (m^-3) of a condensate of n_bec atoms.
double tf_peak_density_m3(double n_bec, double omega_bar, double mass_kg, double a_m) {
  if (n_bec <= 0.0 || a_m <= 0.0) return 0.0;
  const double abar = std::sqrt(kHbar / (mass_kg * omega_bar));
  const double mu = 0.5 * kHbar * omega_bar * std::pow(15.0 * n_bec * a_m / abar, 0.4);
  const double g = 4.0 * kPi * kHbar * kHbar * a_m / mass_kg;
  return mu / g;
}

double mean_speed_ms(double t_uK, double mass_kg) {
  return std::sqrt(8.0 * t_uK * kJoulePerUK / (kPi * mass_kg));
}

ChannelRates rates_impl(const CloudState& state, const TrapState& trap, double l3_cm6s,
                        double sigma_el_m2, const SimConfig& config, bool guarded) {
  if (!trap.trapped) {
    if (!guarded) throw std::domain_error("derivatives require a trapped state");
    return {};
  }
  const double t_uK = guarded ? std::max(state.temperature_uK, 1e-6) : state.temperature_uK;
  if (t_uK <= 0.0) throw std::domain_error("temperature must be positive");
  const double eta = trap.depth_uK / t_uK;
  if (eta < config.eta_floor) {
    if (!guarded) throw std::domain_error("trap too shallow for the truncated model");
    return {};
  }
  const double n_th = std::max(state.n_total - state.n_bec, 0.0);
  const double l3_m6 = l3_cm6s * kCm6ToM6;

  CloudState thermal = state;
  thermal.temperature_uK = t_uK;
  const double n0_m3 = n_th > 0.0 ? peak_density_um3(thermal, trap, config.atom_mass_kg) * 1e18 : 0.0;
  const double gamma_el =
      n0_m3 * sigma_el_m2 * mean_speed_ms(t_uK, config.atom_mass_kg) / std::sqrt(2.0);

  ChannelRates r;

  if (config.enable_evaporation && n_th > 0.0 && eta > 4.0) {
    const double flux = gamma_el * (eta - 4.0) * std::exp(-eta);
    r.evaporation = -n_th * flux;
    // Combined form of the per-atom energy bookkeeping,
    //   dT = -(T/N) |dN| ((eta + (eta-5)/(eta-4))/3 - 1),
    // expanded to avoid the removable eta -> 4 singularity.
    r.d_t_uK += -t_uK * gamma_el * std::exp(-eta) * (eta * eta - 6.0 * eta + 7.0) / 3.0;
  }

  if (n_th > 0.0 && l3_m6 > 0.0) {
    const double n2avg = n0_m3 * n0_m3 * kGaussianN2Average;
    r.three_body_thermal = -l3_m6 * n2avg * n_th;
    if (config.enable_three_body_heating) r.d_t_uK += t_uK / 3.0 * l3_m6 * n2avg;
  }

  if (config.enable_condensate) {
    const double psd_phys = n_th > 0.0 ? harmonic_psd(n_th, t_uK, trap.omega_bar) : 0.0;
    if (psd_phys >= kCondensationPsd && state.n_total > 0.0) {
      const double t_c = critical_temperature_uK(state.n_total, trap.omega_bar);
      const double target = state.n_total * condensate_fraction(t_uK, t_c);
      r.bec_growth = gamma_el * (target - state.n_bec);
    }
  }

  if (state.n_bec > 0.0 && l3_m6 > 0.0) {
    const double a_m = std::sqrt(sigma_el_m2 / (8.0 * kPi));
    const double n_p = tf_peak_density_m3(state.n_bec, trap.omega_bar, config.atom_mass_kg, a_m);
    r.three_body_bec = -l3_m6 * config.condensate_correlation_factor * kTfN2Average *
                       n_p * n_p * state.n_bec;
  }

  r.d_n = r.evaporation + r.three_body_thermal + r.three_body_bec;
  r.d_n_bec = r.bec_growth + r.three_body_bec;
  return r;
}

}  // namespace

ChannelRates derivatives(const CloudState& state, const TrapState& trap, double l3_cm6s,
                         double sigma_el_m2, const SimConfig& config) {
  return rates_impl(state, trap, l3_cm6s, sigma_el_m2, config, /*guarded=*/false);
}

namespace {

using Y = std::array<double, 3>;  // (N, theta = T/omega_bar, N_bec)

struct DormandPrince {
  // Steps dy/dt = f(t, y) with embedded 5(4) error control.
  template <typename F>
  static bool step(const F& f, double t, const Y& y, double h, Y* y_out, double* err_norm,
                   const std::array<double, 3>& atol, double rtol) {
    static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a2[] = {1.0 / 5};
    static constexpr double a3[] = {3.0 / 40, 9.0 / 40};
    static constexpr double a4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
    static constexpr double a5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                                    -212.0 / 729};
    static constexpr double a6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                    -5103.0 / 18656};
    static constexpr double b5[] = {35.0 / 384,     0.0,        500.0 / 1113, 125.0 / 192,
                                    -2187.0 / 6784, 11.0 / 84,  0.0};
    static constexpr double b4[] = {5179.0 / 57600,    0.0,          7571.0 / 16695,
                                    393.0 / 640,       -92097.0 / 339200,
                                    187.0 / 2100,      1.0 / 40};
    Y k[7];
    auto axpy = [&](const double* coeff, int n) {
      Y s = y;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < 3; ++i) s[i] += h * coeff[j] * k[j][i];
      return s;
    };
    k[0] = f(t, y);
    k[1] = f(t + c[1] * h, axpy(a2, 1));
    k[2] = f(t + c[2] * h, axpy(a3, 2));
    k[3] = f(t + c[3] * h, axpy(a4, 3));
    k[4] = f(t + c[4] * h, axpy(a5, 4));
    k[5] = f(t + c[5] * h, axpy(a6, 5));
    Y y5 = y, y4 = y;
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 3; ++i) {
        y5[i] += h * b5[j] * k[j][i];
        y4[i] += h * b4[j] * k[j][i];
      }
    k[6] = f(t + h, y5);
    for (int i = 0; i < 3; ++i) y4[i] += h * b4[6] * k[6][i];

    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double scale = atol[i] + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = (y5[i] - y4[i]) / scale;
      sum += e * e;
    }
    *err_norm = std::sqrt(sum / 3.0);
    *y_out = y5;
    return std::isfinite(*err_norm) && *err_norm <= 1.0;
  }
};

// The integrated temperature variable is theta = T / (dominant-beam omega_bar):
// opening the dominant beam cools the cloud adiabatically, while the other
// beam's dimple sharpens confinement without bulk heating, which is how a
// weak crossed dimple behaves under a much hotter cloud.
struct SimDriver {
  const RampSchedule& schedule;
  const FeshbachScenario& scenario;
  const SimConfig& config;
  double sigma_el = 0.0;

  TrapState trap_at(double t) const {
    return trap_state(power_at(schedule, t, Beam::horizontal),
                      power_at(schedule, t, Beam::vertical), config.geom_h, config.geom_v,
                      config.atom_mass_kg, config.crossed_threshold);
  }

  bool state_valid(const TrapState& trap, const Y& y) const {
    if (!trap.trapped) return false;
    if (y[0] < config.n_floor) return false;
    const double t_uK = y[1] * trap.single_beam_omega_bar;
    if (t_uK <= 0.0) return false;
    if (trap.depth_uK / t_uK < config.eta_floor) return false;
    return true;
  }

  Y rhs(double t, const Y& y) const {
    const TrapState trap = trap_at(t);
    if (!trap.trapped || trap.single_beam_omega_bar <= 0.0) return {0.0, 0.0, 0.0};
    CloudState cloud;
    cloud.n_total = std::max(y[0], 0.0);
    cloud.n_bec = std::clamp(y[2], 0.0, cloud.n_total);
    cloud.temperature_uK = std::max(y[1] * trap.single_beam_omega_bar, 1e-9);
    cloud.time_s = t;
    const double l3 = three_body_rate_cm6s(scenario, scenario.field_G, cloud.temperature_uK);
    const ChannelRates r = rates_impl(cloud, trap, l3, sigma_el, config, /*guarded=*/true);
    return {r.d_n, r.d_t_uK / trap.single_beam_omega_bar, r.d_n_bec};
  }

  TrajectoryPoint make_point(double t, const Y& y) const {
    const TrapState trap = trap_at(t);
    TrajectoryPoint pt;
    pt.time_s = t;
    pt.trap = trap;
    pt.cloud.n_total = y[0];
    pt.cloud.n_bec = y[2];
    pt.cloud.temperature_uK = y[1] * trap.single_beam_omega_bar;
    pt.cloud.time_s = t;
    pt.psd = psd(pt.cloud, trap, config.atom_mass_kg).value;
    pt.p_h_W = power_at(schedule, t, Beam::horizontal);
    pt.p_v_W = power_at(schedule, t, Beam::vertical);
    pt.l3_cm6s = three_body_rate_cm6s(scenario, scenario.field_G, pt.cloud.temperature_uK);
    pt.rates = rates_impl(pt.cloud, trap, pt.l3_cm6s, sigma_el, config, /*guarded=*/true);
    return pt;
  }
};

}  // namespace

Trajectory run(const RampSchedule& schedule, const FeshbachScenario& scenario,
               const SimConfig& config) {
  schedule.validate();
  scenario.validate();
  SimDriver driver{schedule, scenario, config};
  driver.sigma_el = elastic_cross_section_m2(scenario, scenario.field_G);

  Trajectory traj;
  const std::array<double, 3> atol = {config.abs_tol_n, config.abs_tol_theta,
                                      config.abs_tol_n};

  TrapState trap0 = driver.trap_at(0.0);
  if (!trap0.trapped || trap0.single_beam_omega_bar <= 0.0) {
    traj.lost_cloud = true;
    return traj;
  }
  Y y = {config.initial_n, config.initial_t_uK / trap0.single_beam_omega_bar, 0.0};
  if (!driver.state_valid(trap0, y)) {
    traj.lost_cloud = true;
    return traj;
  }
  traj.points.push_back(driver.make_point(0.0, y));
  double prev_psd_phys = harmonic_psd(std::max(y[0] - y[2], 0.0),
                                      y[1] * trap0.single_beam_omega_bar, trap0.omega_bar);
  if (prev_psd_phys >= kCondensationPsd) {
    traj.n_at_condensation = y[0];
    traj.t_at_condensation = 0.0;
  }

  auto f = [&](double t, const Y& yy) { return driver.rhs(t, yy); };

  for (std::size_t seg = 0; seg + 1 < schedule.knots(); ++seg) {
    const double t_begin = schedule.times_s[seg];
    const double t_end = schedule.times_s[seg + 1];
    double t = t_begin;
    double h = std::min(config.max_step_s, (t_end - t_begin) / 4.0);
    while (t < t_end) {
      h = std::min(h, t_end - t);
      Y y_new;
      double err = 0.0;
      const bool ok = DormandPrince::step(f, t, y, h, &y_new, &err, atol, config.rel_tol);
      if (!ok) {
        const double shrink = std::isfinite(err) && err > 0.0
                                  ? std::max(0.2, 0.9 * std::pow(err, -0.2))
                                  : 0.2;
        h *= shrink;
        if (h < 1e-12) {
          traj.lost_cloud = true;
          return traj;
        }
        continue;
      }
      // Refine onto a configuration switch so the recorded samples flank the
      // transition closely; the dynamics are continuous there, only the
      // reported-PSD method changes.
      if (h > 1e-4 &&
          driver.trap_at(t).config != driver.trap_at(t + h).config) {
        h *= 0.5;
        continue;
      }
      t += h;
      y = y_new;
      // Numerical overshoot of the component split is clipped and logged.
      if (y[2] > y[0] || y[2] < 0.0) {
        const double clipped = std::clamp(y[2], 0.0, y[0]);
        if (std::abs(clipped - y[2]) > 1e-9 * std::max(1.0, y[0])) ++traj.clip_events;
        y[2] = clipped;
      }
      const TrapState trap = driver.trap_at(t);
      if (!driver.state_valid(trap, y)) {
        traj.lost_cloud = true;
        return traj;
      }
      traj.points.push_back(driver.make_point(t, y));
      const double psd_phys = harmonic_psd(std::max(y[0] - y[2], 0.0),
                                           y[1] * trap.single_beam_omega_bar, trap.omega_bar);
      if (prev_psd_phys < kCondensationPsd && psd_phys >= kCondensationPsd &&
          traj.t_at_condensation < 0.0) {
        traj.n_at_condensation = y[0];
        traj.t_at_condensation = t;
      }
      prev_psd_phys = psd_phys;
      if (err > 1e-30) h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = std::min(h, config.max_step_s);
    }
  }
  return traj;
}

DecayCurve decay_bec(const CloudState& initial, const TrapState& trap,
                     const FeshbachScenario& scenario, const SimConfig& config,
                     double duration_s, int n_samples) {
  if (initial.n_bec <= 0.0) throw std::domain_error("decay requires a condensed cloud");
  if (duration_s <= 0.0 || n_samples < 2)
    throw std::invalid_argument("need a positive duration and at least two samples");
  const double l3 = three_body_rate_cm6s(scenario, scenario.field_G, initial.temperature_uK);
  const double l3_m6 = l3 * kCm6ToM6;
  const double a_m = scattering_length_a0(scenario, scenario.field_G) * kBohrRadius;
  const double coeff = l3_m6 * config.condensate_correlation_factor * kTfN2Average;

  auto f = [&](double /*t*/, const Y& y) -> Y {
    const double n = std::max(y[0], 0.0);
    const double n_p = tf_peak_density_m3(n, trap.omega_bar, config.atom_mass_kg, a_m);
    return {-coeff * n_p * n_p * n, 0.0, 0.0};
  };

  DecayCurve curve;
  curve.reserve(static_cast<std::size_t>(n_samples));
  Y y = {initial.n_bec, 0.0, 0.0};
  curve.emplace_back(0.0, y[0]);
  const std::array<double, 3> atol = {config.abs_tol_n, 1.0, 1.0};
  for (int i = 1; i < n_samples; ++i) {
    const double t_target = duration_s * i / (n_samples - 1);
    double t = duration_s * (i - 1) / (n_samples - 1);
    double h = (t_target - t) / 4.0;
    while (t < t_target) {
      h = std::min(h, t_target - t);
      Y y_new;
      double err = 0.0;
      if (!DormandPrince::step(f, t, y, h, &y_new, &err, atol, config.rel_tol)) {
        h *= std::isfinite(err) && err > 0.0 ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
        if (h < 1e-15) throw std::runtime_error("decay integration stalled");
        continue;
      }
      t += h;
      y = y_new;
      if (err > 1e-30) h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    }
    curve.emplace_back(t_target, y[0]);
  }
  return curve;
}

DecayCurve rescale_curve(const DecayCurve& curve, double x_factor, double y_factor) {
  if (x_factor <= 0.0 || y_factor <= 0.0)
    throw std::domain_error("rescale factors must be positive");
  DecayCurve out;
  out.reserve(curve.size());
  for (const auto& [t, n] : curve) out.emplace_back(t * x_factor, n * y_factor);
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "time_s,N,T_uK,N_bec,psd,P_H_W,P_V_W,L3\n";
  for (const auto& pt : trajectory.points) {
    out << fmt_double(pt.time_s) << ',' << fmt_double(pt.cloud.n_total) << ','
        << fmt_double(pt.cloud.temperature_uK) << ',' << fmt_double(pt.cloud.n_bec) << ','
        << fmt_double(pt.psd) << ',' << fmt_double(pt.p_h_W) << ',' << fmt_double(pt.p_v_W)
        << ',' << fmt_double(pt.l3_cm6s) << '\n';
  }
}

}  // namespace becopt
