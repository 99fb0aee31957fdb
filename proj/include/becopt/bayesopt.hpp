#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "becopt/cost.hpp"
#include "becopt/evap_sim.hpp"
#include "becopt/gp.hpp"
#include "becopt/imaging.hpp"
#include "becopt/ramps.hpp"

namespace becopt {

struct OptimizerConfig {
  std::size_t budget = 60;
  std::size_t batch = 1;
  std::size_t min_init = 0;  // 0 selects 2 * dim space-filling points
  std::size_t refit_interval = 5;
  int refit_restarts = 8;
  double boundary_epsilon = 0.02;  // normalized distance that counts as "at the edge"
  std::uint64_t seed = 1;
};

struct TrialSummary {
  double n = 0.0;
  double t_uK = 0.0;
  double n_bec = 0.0;
  double psd = 0.0;
  double gamma = 0.0;
  double n_at_condensation = 0.0;
  bool lost = false;
};

struct Observation {
  std::size_t iteration = 0;
  std::vector<double> x;  // normalized coordinates
  double cost = 0.0;
  TrialSummary summary;
  std::vector<std::size_t> clamped;  // coordinates clamped into the box
};

// Sequential model-based optimizer over [0,1]^d, maximizing the cost.
// Proposals are a pure function of (seed, observation count, surrogate
// state), which is what makes interrupted campaigns resumable: replaying a
// log reconstructs the exact proposal stream.
class Optimizer {
 public:
  Optimizer(std::size_t dim, const OptimizerConfig& config);

  // Evaluated once before the space-filling design when set.
  void set_warm_start(const std::vector<double>& x);

  std::vector<std::vector<double>> propose(std::size_t batch) const;

  // Appends the observation, updates diagnostics and refits hyperparameters
  // on schedule. Non-finite costs are rejected (returns false).
  bool update(const Observation& observation);

  std::size_t dim() const { return dim_; }
  const std::vector<Observation>& log() const { return log_; }
  const Observation* best() const;
  std::vector<bool> boundary_flags() const;
  const std::vector<std::size_t>& clamp_counts() const { return clamp_counts_; }
  const GpSurrogate& surrogate() const { return surrogate_; }
  std::size_t init_design_size() const;

 private:
  std::vector<double> design_point(std::size_t index) const;
  std::vector<double> maximize_ei(const GpSurrogate& surrogate, double best_cost,
                                  Rng& rng) const;

  std::size_t dim_;
  OptimizerConfig config_;
  GpSurrogate surrogate_;
  std::vector<Observation> log_;
  std::vector<std::size_t> clamp_counts_;
  std::vector<double> warm_start_;
  bool has_warm_start_ = false;
};

enum class Protocol { fixed_time, tail_only, full, variable_time };
Protocol protocol_from_string(const std::string& name);
std::string to_string(Protocol protocol);

struct CampaignProblem {
  RampSchedule seed_schedule;
  FeshbachScenario scenario;
  SimConfig sim;
  CostWeights weights;
  CostMode cost_mode = CostMode::combined;

  double power_lo_h_W = 0.02;
  double power_hi_h_W = 6.0;
  double power_lo_v_W = 0.02;
  double power_hi_v_W = 2.0;
  std::size_t n_tail = 3;
  double time_lo_s = 8.0;
  double time_hi_s = 20.0;
  bool warm_start = true;

  // Measure N_BEC through the synthetic-imaging pipeline instead of reading
  // the simulator state directly.
  bool full_loop = false;
  ImagingParams imaging;
  double image_noise_od = 0.0;
};

ParamLayout layout_for_protocol(Protocol protocol, const CampaignProblem& problem);

struct CampaignResult {
  Protocol protocol = Protocol::full;
  ParamLayout layout;
  std::vector<Observation> log;
  std::size_t best_index = 0;
  std::vector<bool> boundary_flags;
  std::vector<std::size_t> clamp_counts;
  RampSchedule best_schedule;
};

// Runs (or resumes, when replay is non-empty) a simulator-backed campaign.
// Candidate evaluations within a batch run on up to `workers` threads; the
// log order follows the proposal order, so identical seeds give identical
// logs regardless of worker count.
CampaignResult run_campaign(Protocol protocol, const CampaignProblem& problem,
                            const OptimizerConfig& config, int workers,
                            const std::function<void(const Observation&)>& sink = {},
                            const std::vector<Observation>& replay = {});

// One observation per line; the campaign log file is a header line followed
// by these.
std::string observation_to_jsonl(const Observation& observation);
Observation observation_from_jsonl(const std::string& line);

}  // namespace becopt
