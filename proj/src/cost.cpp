#include "becopt/cost.hpp"

#include <cmath>
#include <stdexcept>

#include "becopt/evap_sim.hpp"

namespace becopt {

double gamma_efficiency(double psd0, double psd, double n0, double n) {
  if (psd0 <= 0.0 || psd <= 0.0) throw std::domain_error("phase-space densities must be positive");
  if (n0 <= 0.0 || n <= 0.0) throw std::domain_error("atom numbers must be positive");
  if (n >= n0) throw std::domain_error("evaporation must lose atoms (n < n0)");
  return std::log(psd / psd0) / std::log(n0 / n);
}

double combined_cost(double gamma, double n_bec, const CostWeights& weights) {
  if (n_bec < 0.0) throw std::domain_error("condensate number must be non-negative");
  if (weights.beta_gamma < 0.0 || weights.beta_bec < 0.0 ||
      (weights.beta_gamma == 0.0 && weights.beta_bec == 0.0))
    throw std::domain_error("weights must be non-negative and not both zero");
  return weights.beta_gamma * gamma + weights.beta_bec * n_bec;
}

CostValue evaluate(const Trajectory& trajectory, const CostWeights& weights, CostMode mode) {
  if (trajectory.points.empty())
    throw std::invalid_argument("cannot score an empty trajectory");

  const TrajectoryPoint& first = trajectory.points.front();
  CostValue out;
  out.lost_cloud = trajectory.lost_cloud;

  // Last point with a defined PSD; for lost clouds this is the last state
  // before truncation, which keeps failed runs informative.
  const TrajectoryPoint* last = nullptr;
  for (auto it = trajectory.points.rbegin(); it != trajectory.points.rend(); ++it) {
    if (it->psd > 0.0 && it->cloud.n_total > 0.0) {
      last = &*it;
      break;
    }
  }
  if (last == nullptr || first.psd <= 0.0 || last->cloud.n_total >= first.cloud.n_total) {
    out.degenerate = true;
    out.gamma = 0.0;
  } else {
    out.gamma = gamma_efficiency(first.psd, last->psd, first.cloud.n_total,
                                 last->cloud.n_total);
  }

  out.n_bec = trajectory.lost_cloud ? 0.0 : trajectory.points.back().cloud.n_bec;
  if (mode == CostMode::efficiency_only)
    out.value = weights.beta_gamma * out.gamma;
  else
    out.value = combined_cost(out.gamma, out.n_bec, weights);
  return out;
}

}  // namespace becopt
