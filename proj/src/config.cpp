#include "becopt/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "becopt/constants.hpp"
#include "becopt/textio.hpp"

namespace becopt {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed writing file: " + path);
}

namespace {

using nlohmann::json;

// Converts a byte offset from the JSON parser into a line/column pair so
// parse failures point at the offending config line.
std::string line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_config(const std::string& path, const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + " (" + line_of(text, e.byte) + "): " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing required field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

BeamGeometry parse_beam(const json& j, BeamAxis axis) {
  BeamGeometry g;
  g.axis = axis;
  g.waist_x_um = require<double>(j, "waist_x_um");
  g.waist_y_um = require<double>(j, "waist_y_um");
  g.polarizability_uK_per_W_um2 = get_or(j, "polarizability_uK_per_W_um2", 6.1e4);
  g.wavelength_um = get_or(j, "wavelength_um", 1.064);
  if (g.waist_x_um <= 0 || g.waist_y_um <= 0 || g.polarizability_uK_per_W_um2 <= 0 ||
      g.wavelength_um <= 0)
    throw ConfigError("beam geometry values must be positive");
  return g;
}

}  // namespace

CampaignProblem RunConfig::problem() const {
  CampaignProblem p;
  p.seed_schedule = schedule;
  p.scenario = scenario;
  p.sim = sim;
  p.weights = weights;
  p.cost_mode = cost_mode;
  p.power_lo_h_W = power_lo_h_W;
  p.power_hi_h_W = power_hi_h_W;
  p.power_lo_v_W = power_lo_v_W;
  p.power_hi_v_W = power_hi_v_W;
  p.n_tail = n_tail;
  p.time_lo_s = time_lo_s;
  p.time_hi_s = time_hi_s;
  p.warm_start = warm_start;
  p.full_loop = full_loop;
  p.imaging = imaging;
  p.image_noise_od = image_noise_od;
  return p;
}

RunConfig load_run_config(const std::string& path) {
  const std::string text = read_file(path);
  const json j = parse_config(path, text);
  RunConfig cfg;
  cfg.config_digest = content_digest(text);

  if (!j.contains("seed")) throw ConfigError(path + ": a fixed 'seed' is required");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.output_dir = get_or(j, "output_dir", std::string{"out"});
  cfg.workers = get_or(j, "workers", 1);

  const json& trap = j.contains("trap") ? j.at("trap") : json::object();
  if (trap.contains("horizontal"))
    cfg.sim.geom_h = parse_beam(trap.at("horizontal"), BeamAxis::horizontal);
  if (trap.contains("vertical"))
    cfg.sim.geom_v = parse_beam(trap.at("vertical"), BeamAxis::vertical);
  cfg.sim.crossed_threshold = get_or(trap, "crossed_threshold", 2e-5);
  if (cfg.sim.crossed_threshold <= 0.0) throw ConfigError("crossed_threshold must be positive");

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    cfg.sim.atom_mass_kg = get_or(s, "atom_mass_amu", kThuliumMassAmu) * kAmu;
    cfg.sim.initial_n = get_or(s, "initial_n", 1e6);
    cfg.sim.initial_t_uK = get_or(s, "initial_t_uK", 22.5);
    cfg.sim.eta_floor = get_or(s, "eta_floor", 1.0);
    cfg.sim.condensate_correlation_factor =
        get_or(s, "condensate_correlation_factor", 1.0 / 6.0);
    cfg.sim.rel_tol = get_or(s, "rel_tol", 1e-9);
    cfg.sim.abs_tol_n = get_or(s, "abs_tol_n", 1e-6);
    cfg.sim.max_step_s = get_or(s, "max_step_s", 0.05);
    if (cfg.sim.rel_tol <= 0 || cfg.sim.abs_tol_n <= 0)
      throw ConfigError("integrator tolerances must be positive");
    if (cfg.sim.atom_mass_kg <= 0 || cfg.sim.initial_n <= 0 || cfg.sim.initial_t_uK <= 0)
      throw ConfigError("initial state values must be positive");
  }

  cfg.scenario_path = require<std::string>(j, "scenario_file");
  const auto base = std::filesystem::path(path).parent_path();
  const auto scenario_file = base / cfg.scenario_path;
  const std::string scenario_text = read_file(scenario_file.string());
  cfg.scenario_digest = content_digest(scenario_text);
  cfg.scenario = load_scenario(scenario_file.string());
  if (j.contains("field_G")) cfg.scenario.field_G = j.at("field_G").get<double>();

  const json& sched = j.contains("schedule") ? j.at("schedule") : json::object();
  cfg.schedule.times_s = require<std::vector<double>>(sched, "times_s");
  cfg.schedule.powers_h_W = require<std::vector<double>>(sched, "powers_h_W");
  cfg.schedule.powers_v_W = require<std::vector<double>>(sched, "powers_v_W");
  try {
    cfg.schedule.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }

  if (j.contains("cost")) {
    const json& c = j.at("cost");
    cfg.weights.beta_gamma = get_or(c, "beta_gamma", 1.0);
    cfg.weights.beta_bec = get_or(c, "beta_bec", 1e-4);
    const std::string mode = get_or(c, "mode", std::string{"combined"});
    if (mode == "combined")
      cfg.cost_mode = CostMode::combined;
    else if (mode == "efficiency_only")
      cfg.cost_mode = CostMode::efficiency_only;
    else
      throw ConfigError("cost.mode must be 'combined' or 'efficiency_only'");
    cfg.full_loop = get_or(c, "full_loop", false);
    if (cfg.weights.beta_gamma < 0 || cfg.weights.beta_bec < 0 ||
        (cfg.weights.beta_gamma == 0 && cfg.weights.beta_bec == 0))
      throw ConfigError("cost weights must be non-negative and not both zero");
  }

  if (j.contains("search")) {
    const json& s = j.at("search");
    cfg.power_lo_h_W = get_or(s, "power_lo_h_W", 0.02);
    cfg.power_hi_h_W = get_or(s, "power_hi_h_W", 6.0);
    cfg.power_lo_v_W = get_or(s, "power_lo_v_W", 0.02);
    cfg.power_hi_v_W = get_or(s, "power_hi_v_W", 2.0);
    cfg.n_tail = get_or(s, "n_tail", std::size_t{3});
    cfg.time_lo_s = get_or(s, "time_lo_s", 8.0);
    cfg.time_hi_s = get_or(s, "time_hi_s", 20.0);
    cfg.warm_start = get_or(s, "warm_start", true);
    if (cfg.power_hi_h_W <= cfg.power_lo_h_W || cfg.power_hi_v_W <= cfg.power_lo_v_W)
      throw ConfigError("search box must have lo < hi");
    if (cfg.time_hi_s <= cfg.time_lo_s) throw ConfigError("time box must have lo < hi");
  }

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    cfg.optimizer.budget = get_or(o, "budget", std::size_t{60});
    cfg.optimizer.batch = get_or(o, "batch", std::size_t{1});
    cfg.optimizer.min_init = get_or(o, "min_init", std::size_t{0});
    cfg.optimizer.refit_interval = get_or(o, "refit_interval", std::size_t{5});
    cfg.optimizer.refit_restarts = get_or(o, "refit_restarts", 8);
    cfg.optimizer.boundary_epsilon = get_or(o, "boundary_epsilon", 0.02);
  }
  cfg.optimizer.seed = cfg.seed;

  if (j.contains("imaging")) {
    const json& im = j.at("imaging");
    cfg.imaging.nx = get_or(im, "nx", 96);
    cfg.imaging.ny = get_or(im, "ny", 96);
    cfg.imaging.pixel_size_um = get_or(im, "pixel_size_um", 1.0);
    cfg.imaging.sigma_abs_um2 = get_or(im, "sigma_abs_um2", 0.1);
    cfg.imaging.scattering_length_a0 = get_or(im, "scattering_length_a0", 140.0);
    cfg.imaging.detection_floor_atoms = get_or(im, "detection_floor_atoms", 500.0);
    cfg.imaging.mask_tol_rel = get_or(im, "mask_tol_rel", 0.01);
    cfg.imaging.s_grid_max = get_or(im, "s_grid_max", 3.0);
    cfg.imaging.s_grid_step = get_or(im, "s_grid_step", 0.25);
    cfg.image_noise_od = get_or(im, "noise_od", 0.0);
  }

  // Environment overrides, single documented prefix.
  if (const char* env = std::getenv("BECOPT_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
    cfg.optimizer.seed = cfg.seed;
  }
  if (const char* env = std::getenv("BECOPT_OUT")) cfg.output_dir = env;
  if (const char* env = std::getenv("BECOPT_WORKERS")) cfg.workers = std::atoi(env);
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  return cfg;
}

}  // namespace becopt
