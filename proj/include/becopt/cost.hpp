#pragma once

namespace becopt {

struct Trajectory;  // evap_sim.hpp

// Weights of the combined objective C = beta_gamma * gamma + beta_bec * N_BEC.
struct CostWeights {
  double beta_gamma = 1.0;
  double beta_bec = 1e-4;  // atoms enter at the 1e4 scale, so both terms are O(1)
};

enum class CostMode { efficiency_only, combined };

struct CostValue {
  double value = 0.0;
  double gamma = 0.0;
  double n_bec = 0.0;
  bool lost_cloud = false;
  // Set when the atom number did not decrease and gamma degenerates to 0.
  bool degenerate = false;
};

// Evaporation efficiency gamma = ln(psd/psd0) / ln(n0/n).
// Requires positive inputs and n < n0; violations raise std::domain_error,
// which trajectory-level evaluation maps to a finite failed-run cost.
double gamma_efficiency(double psd0, double psd, double n0, double n);

double combined_cost(double gamma, double n_bec, const CostWeights& weights);

// Cost of a simulated run. Lost-cloud trajectories are scored at their last
// valid point with N_BEC = 0, so failed evaporations still inform the
// optimizer. Never returns NaN or infinity for simulator-produced input.
CostValue evaluate(const Trajectory& trajectory, const CostWeights& weights, CostMode mode);

}  // namespace becopt
