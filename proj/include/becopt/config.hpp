#pragma once

#include <cstdint>
#include <string>

#include "becopt/bayesopt.hpp"
#include "becopt/cost.hpp"
#include "becopt/evap_sim.hpp"
#include "becopt/feshbach.hpp"
#include "becopt/imaging.hpp"
#include "becopt/ramps.hpp"

namespace becopt {

// Raised for malformed or inconsistent configuration; the CLI maps it to the
// config exit code.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int workers = 1;

  SimConfig sim;  // includes trap geometry and the crossed threshold
  std::string scenario_path;
  FeshbachScenario scenario;

  RampSchedule schedule;
  CostWeights weights;
  CostMode cost_mode = CostMode::combined;
  bool full_loop = false;

  // Search box and protocol knobs for campaigns.
  double power_lo_h_W = 0.02;
  double power_hi_h_W = 6.0;
  double power_lo_v_W = 0.02;
  double power_hi_v_W = 2.0;
  std::size_t n_tail = 3;
  double time_lo_s = 8.0;
  double time_hi_s = 20.0;
  bool warm_start = true;

  OptimizerConfig optimizer;
  ImagingParams imaging;
  double image_noise_od = 0.0;

  // Digests of the loaded files, for resume tamper detection.
  std::string config_digest;
  std::string scenario_digest;

  CampaignProblem problem() const;
};

// Loads and validates a run configuration. The scenario file is resolved
// relative to the config file's directory. Environment overrides use the
// BECOPT_ prefix (BECOPT_SEED, BECOPT_OUT, BECOPT_WORKERS).
RunConfig load_run_config(const std::string& path);

}  // namespace becopt
