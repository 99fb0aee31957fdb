// becopt: evaporative-cooling digital twin with a Bayesian ramp optimizer.
//
// Subcommands: simulate, optimize, scan-field, decay, fit-image.
// Exit codes: 0 ok, 2 config/io, 3 physics (lost cloud / no condensate),
// 4 fit, 5 resume mismatch, 6 mask-sweep plateau not found.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "becopt/bayesopt.hpp"
#include "becopt/config.hpp"
#include "becopt/constants.hpp"
#include "becopt/cost.hpp"
#include "becopt/evap_sim.hpp"
#include "becopt/imaging.hpp"
#include "becopt/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace becopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPhysics = 3;
constexpr int kExitFit = 4;
constexpr int kExitResume = 5;
constexpr int kExitPlateau = 6;

struct ResumeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliOverrides {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

RunConfig load_with_overrides(const CliOverrides& ov) {
  RunConfig cfg = load_run_config(ov.config_path);
  if (!ov.out.empty()) cfg.output_dir = ov.out;
  if (ov.seed) {
    cfg.seed = *ov.seed;
    cfg.optimizer.seed = *ov.seed;
  }
  if (ov.workers) cfg.workers = *ov.workers;
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  return cfg;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_run_record(const RunConfig& cfg, const std::string& command, json extra) {
  json j;
  j["command"] = command;
  j["config_digest"] = cfg.config_digest;
  j["scenario_digest"] = cfg.scenario_digest;
  j["seed"] = cfg.seed;
  // The only wall-clock field any command emits; everything else is
  // deterministic under a fixed seed and config.
  j["timestamp_utc"] = timestamp_utc();
  j.update(extra);
  write_file((fs::path(cfg.output_dir) / "run_record.json").string(), j.dump(2) + "\n");
}

json summary_json(const Trajectory& traj) {
  json j;
  j["lost_cloud"] = traj.lost_cloud;
  j["n_at_condensation"] = traj.n_at_condensation;
  j["t_at_condensation"] = traj.t_at_condensation;
  if (!traj.points.empty()) {
    const TrajectoryPoint& last = traj.back();
    j["final"] = {{"n", last.cloud.n_total},       {"t_uK", last.cloud.temperature_uK},
                  {"n_bec", last.cloud.n_bec},     {"psd", last.psd},
                  {"p_h_W", last.p_h_W},           {"p_v_W", last.p_v_W},
                  {"time_s", last.time_s}};
  }
  return j;
}

std::string slot_name(const ParamLayout& layout, std::size_t i) {
  const SlotRef& s = layout.slots[i];
  if (s.kind == SlotRef::Kind::total_time) return "total_time";
  std::ostringstream ss;
  ss << (s.beam == Beam::horizontal ? "P_H" : "P_V") << '[' << s.knot << ']';
  return ss.str();
}

json schedule_json(const RampSchedule& s) {
  return json{{"times_s", s.times_s}, {"powers_h_W", s.powers_h_W}, {"powers_v_W", s.powers_v_W}};
}

int cmd_simulate(const CliOverrides& ov) {
  RunConfig cfg = load_with_overrides(ov);
  fs::create_directories(cfg.output_dir);
  const Trajectory traj = run(cfg.schedule, cfg.scenario, cfg.sim);

  {
    std::ofstream csv(fs::path(cfg.output_dir) / "trajectory.csv");
    write_trajectory_csv(csv, traj);
  }
  {
    std::ofstream csv(fs::path(cfg.output_dir) / "schedule.csv");
    write_schedule_csv(csv, cfg.schedule, 512);
  }
  const CostValue cv = traj.points.empty()
                           ? CostValue{}
                           : evaluate(traj, cfg.weights, cfg.cost_mode);
  json extra = summary_json(traj);
  extra["cost"] = cv.value;
  extra["gamma"] = cv.gamma;
  extra["field_G"] = cfg.scenario.field_G;
  write_run_record(cfg, "simulate", extra);

  if (traj.points.empty() || traj.lost_cloud) {
    std::cerr << "cloud lost during the ramp; trajectory truncated at t="
              << (traj.points.empty() ? 0.0 : traj.back().time_s) << " s\n";
    return kExitPhysics;
  }
  const TrajectoryPoint& last = traj.back();
  std::cout << "final: N=" << fmt_double(last.cloud.n_total)
            << " T_uK=" << fmt_double(last.cloud.temperature_uK)
            << " N_bec=" << fmt_double(last.cloud.n_bec) << " psd=" << fmt_double(last.psd)
            << " cost=" << fmt_double(cv.value) << "\n";
  return kExitOk;
}

json log_header(const RunConfig& cfg, Protocol protocol, std::size_t dim) {
  json j;
  j["type"] = "header";
  j["config_digest"] = cfg.config_digest;
  j["scenario_digest"] = cfg.scenario_digest;
  j["seed"] = cfg.seed;
  j["protocol"] = to_string(protocol);
  j["dim"] = dim;
  j["field_G"] = cfg.scenario.field_G;
  return j;
}

// Parses an existing campaign log; throws ResumeMismatch when the header
// does not match the current config.
std::vector<Observation> read_log_for_resume(const std::string& path, const json& header) {
  std::ifstream in(path);
  if (!in) throw ResumeMismatch("no campaign log to resume at " + path);
  std::string line;
  if (!std::getline(in, line)) throw ResumeMismatch("campaign log is empty: " + path);
  json file_header;
  try {
    file_header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ResumeMismatch(std::string("campaign log header unreadable: ") + e.what());
  }
  for (const char* key : {"config_digest", "scenario_digest", "seed", "protocol", "dim", "field_G"}) {
    if (file_header.value(key, json{}) != header.value(key, json{}))
      throw ResumeMismatch(std::string("campaign log '") + key +
                           "' does not match the current config; refusing to resume");
  }
  std::vector<Observation> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(observation_from_jsonl(line));
  }
  return out;
}

int cmd_optimize(const CliOverrides& ov, const std::string& protocol_name,
                 std::optional<std::size_t> budget, bool resume) {
  RunConfig cfg = load_with_overrides(ov);
  if (budget) cfg.optimizer.budget = *budget;
  fs::create_directories(cfg.output_dir);
  const Protocol protocol = protocol_from_string(protocol_name);
  const CampaignProblem problem = cfg.problem();
  const ParamLayout layout = layout_for_protocol(protocol, problem);
  const json header = log_header(cfg, protocol, layout.dim());
  const fs::path log_path = fs::path(cfg.output_dir) / ("campaign_" + protocol_name + ".jsonl");

  std::vector<Observation> replay;
  if (resume) {
    replay = read_log_for_resume(log_path.string(), header);
    if (replay.size() >= cfg.optimizer.budget) {
      std::cerr << "log already holds " << replay.size() << " observations; nothing to do\n";
    }
  }

  std::ofstream log_out;
  if (resume) {
    log_out.open(log_path, std::ios::app);
  } else {
    log_out.open(log_path, std::ios::trunc);
    log_out << header.dump() << '\n';
  }
  if (!log_out) throw std::runtime_error("cannot open campaign log: " + log_path.string());

  auto sink = [&](const Observation& obs) {
    log_out << observation_to_jsonl(obs) << '\n';
    log_out.flush();
  };
  const CampaignResult result =
      run_campaign(protocol, problem, cfg.optimizer, cfg.workers, sink, replay);

  // Boundary-saturation report.
  json report;
  report["protocol"] = protocol_name;
  report["boundary_epsilon"] = cfg.optimizer.boundary_epsilon;
  report["flagged_dimensions"] = json::array();
  json clamps = json::object();
  for (std::size_t i = 0; i < result.layout.dim(); ++i) {
    if (result.boundary_flags[i])
      report["flagged_dimensions"].push_back(slot_name(result.layout, i));
    if (result.clamp_counts[i] > 0)
      clamps[slot_name(result.layout, i)] = result.clamp_counts[i];
  }
  report["clamp_counts"] = clamps;
  report["recommendation"] =
      report["flagged_dimensions"].empty()
          ? "best point is interior; the search box is adequate"
          : "best point sits at the search boundary: widen the box or extend the ramp time";
  write_file((fs::path(cfg.output_dir) / "boundary_report.json").string(),
             report.dump(2) + "\n");

  const Observation& best = result.log[result.best_index];
  json best_j;
  best_j["cost"] = best.cost;
  best_j["iteration"] = best.iteration;
  best_j["summary"] = {{"n_bec", best.summary.n_bec}, {"gamma", best.summary.gamma},
                       {"psd", best.summary.psd},     {"n", best.summary.n}};
  best_j["schedule"] = schedule_json(result.best_schedule);
  write_file((fs::path(cfg.output_dir) / "best_schedule.json").string(),
             best_j.dump(2) + "\n");

  json extra;
  extra["protocol"] = protocol_name;
  extra["budget"] = result.log.size();
  extra["campaign_log"] = log_path.string();
  extra["best_cost"] = best.cost;
  extra["best_n_bec"] = best.summary.n_bec;
  extra["best_total_time_s"] = result.best_schedule.total_time_s();
  extra["flagged"] = report["flagged_dimensions"];
  extra["final"] = {{"n", best.summary.n},
                    {"t_uK", best.summary.t_uK},
                    {"n_bec", best.summary.n_bec},
                    {"psd", best.summary.psd},
                    {"p_h_W", result.best_schedule.powers_h_W.back()},
                    {"p_v_W", result.best_schedule.powers_v_W.back()}};
  extra["field_G"] = cfg.scenario.field_G;
  write_run_record(cfg, "optimize", extra);

  std::cout << "best cost " << fmt_double(best.cost) << " at iteration " << best.iteration
            << "; N_bec=" << fmt_double(best.summary.n_bec);
  if (!report["flagged_dimensions"].empty()) {
    std::cout << "; boundary flags:";
    for (const auto& name : report["flagged_dimensions"]) std::cout << ' ' << name.get<std::string>();
  }
  std::cout << "\n";
  return kExitOk;
}

int cmd_scan_field(const CliOverrides& ov, const std::string& fields_arg,
                   const std::string& protocol_name, std::optional<std::size_t> budget) {
  RunConfig cfg = load_with_overrides(ov);
  if (budget) cfg.optimizer.budget = *budget;
  fs::create_directories(cfg.output_dir);

  std::vector<double> fields;
  std::stringstream ss(fields_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) fields.push_back(std::stod(item));
  }
  if (fields.size() < 2) throw ConfigError("scan-field needs at least two fields");

  const Protocol protocol = protocol_from_string(protocol_name);
  std::ofstream csv(fs::path(cfg.output_dir) / "field_scan.csv");
  csv << "field_G,best_n_bec,best_total_time_s,best_cost,status\n";
  for (double field : fields) {
    CampaignProblem problem = cfg.problem();
    problem.scenario.field_G = field;
    try {
      const CampaignResult result =
          run_campaign(protocol, problem, cfg.optimizer, cfg.workers);
      double best_n_bec = 0.0;
      for (const auto& obs : result.log) best_n_bec = std::max(best_n_bec, obs.summary.n_bec);
      const Observation& best = result.log[result.best_index];
      csv << fmt_double(field) << ',' << fmt_double(best_n_bec) << ','
          << fmt_double(result.best_schedule.total_time_s()) << ',' << fmt_double(best.cost)
          << ",ok\n";
    } catch (const std::exception& e) {
      std::cerr << "field " << field << " failed: " << e.what() << "\n";
      csv << fmt_double(field) << ",nan,nan,nan,failed\n";
    }
  }
  write_run_record(cfg, "scan-field", json{{"fields", fields}});
  std::cout << "scan table written to " << (fs::path(cfg.output_dir) / "field_scan.csv").string()
            << "\n";
  return kExitOk;
}

int cmd_decay(const CliOverrides& ov, const std::string& from, double duration_s,
              int samples, double x_factor, double y_factor) {
  RunConfig cfg = load_with_overrides(ov);
  fs::create_directories(cfg.output_dir);
  const std::string record_path =
      from.empty() ? (fs::path(cfg.output_dir) / "run_record.json").string() : from;
  const json record = json::parse(read_file(record_path));
  if (!record.contains("final"))
    throw ConfigError("record " + record_path + " has no final state; run simulate/optimize first");
  const json& fin = record.at("final");
  CloudState state;
  state.n_total = fin.at("n").get<double>();
  state.n_bec = fin.at("n_bec").get<double>();
  state.temperature_uK = fin.at("t_uK").get<double>();
  if (state.n_bec <= 0.0) {
    std::cerr << "no condensate in " << record_path
              << " (N_bec = " << state.n_bec << "); decay needs a condensed initial state\n";
    return kExitPhysics;
  }
  const TrapState trap =
      trap_state(fin.at("p_h_W").get<double>(), fin.at("p_v_W").get<double>(), cfg.sim.geom_h,
                 cfg.sim.geom_v, cfg.sim.atom_mass_kg, cfg.sim.crossed_threshold);
  const DecayCurve curve = decay_bec(state, trap, cfg.scenario, cfg.sim, duration_s, samples);
  const DecayCurve rescaled = rescale_curve(curve, x_factor, y_factor);

  auto write_curve = [](const fs::path& path, const DecayCurve& c) {
    std::ofstream out(path);
    out << "time_s,N_bec\n";
    for (const auto& [t, n] : c) out << fmt_double(t) << ',' << fmt_double(n) << '\n';
  };
  write_curve(fs::path(cfg.output_dir) / "decay.csv", curve);
  write_curve(fs::path(cfg.output_dir) / "decay_rescaled.csv", rescaled);
  write_run_record(cfg, "decay",
                   json{{"duration_s", duration_s},
                        {"x_factor", x_factor},
                        {"y_factor", y_factor},
                        {"initial_n_bec", state.n_bec},
                        {"final_n_bec", curve.back().second}});
  std::cout << "decay: N_bec " << fmt_double(curve.front().second) << " -> "
            << fmt_double(curve.back().second) << " over " << fmt_double(duration_s) << " s\n";
  return kExitOk;
}

int cmd_fit_image(const CliOverrides& ov, const std::string& image_path,
                  const std::string& truth_path, const std::string& save_image_path) {
  RunConfig cfg = load_with_overrides(ov);
  fs::create_directories(cfg.output_dir);
  AbsorptionImage image;
  if (!image_path.empty()) {
    image = load_image(image_path);
  } else if (!truth_path.empty()) {
    const json truth = json::parse(read_file(truth_path));
    CloudState cloud;
    cloud.n_total = truth.at("n_total").get<double>();
    cloud.n_bec = truth.value("n_bec", 0.0);
    cloud.temperature_uK = truth.at("t_uK").get<double>();
    const TrapState trap =
        trap_state(truth.at("p_h_W").get<double>(), truth.at("p_v_W").get<double>(),
                   cfg.sim.geom_h, cfg.sim.geom_v, cfg.sim.atom_mass_kg,
                   cfg.sim.crossed_threshold);
    ImageNoise noise{truth.value("noise_od", 0.0),
                     truth.value("noise_seed", std::uint64_t{0})};
    image = synthesize(cloud, trap, cfg.imaging, noise, cfg.sim.atom_mass_kg);
  } else {
    throw ConfigError("fit-image needs --image or --synthesize");
  }
  if (!save_image_path.empty()) save_image(save_image_path, image);

  const BimodalFitResult fit = fit_bimodal(image, cfg.imaging);
  {
    std::ofstream sweep(fs::path(cfg.output_dir) / "s_sweep.csv");
    write_sweep_csv(sweep, fit.sweep);
  }
  json j;
  j["n_thermal"] = fit.n_thermal;
  j["n_bec"] = fit.n_bec;
  j["chosen_s"] = fit.chosen_s;
  j["thermal"] = {{"amplitude", fit.thermal.amplitude}, {"cx_px", fit.thermal.cx_px},
                  {"cy_px", fit.thermal.cy_px},         {"sigma_x_px", fit.thermal.sigma_x_px},
                  {"sigma_y_px", fit.thermal.sigma_y_px}, {"offset", fit.thermal.offset}};
  j["tf"] = {{"amplitude", fit.tf.amplitude},
             {"cx_px", fit.tf.cx_px},
             {"cy_px", fit.tf.cy_px},
             {"rx_px", fit.tf.rx_px},
             {"ry_px", fit.tf.ry_px}};
  j["below_detection_floor"] = fit.n_bec < cfg.imaging.detection_floor_atoms;
  write_file((fs::path(cfg.output_dir) / "fit_result.json").string(), j.dump(2) + "\n");

  std::cout << "n_thermal=" << fmt_double(fit.n_thermal) << " n_bec=" << fmt_double(fit.n_bec)
            << " chosen_s=" << fmt_double(fit.chosen_s);
  if (fit.n_bec < cfg.imaging.detection_floor_atoms) std::cout << " (below detection floor)";
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaporative-cooling digital twin with Bayesian ramp optimization"};
  app.require_subcommand(1);

  CliOverrides ov;
  app.add_option("--config", ov.config_path, "Run configuration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", ov.out, "Output directory (overrides config)");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "Seed override");
  int workers_opt = 0;
  auto* workers_flag = app.add_option("--workers", workers_opt, "Worker thread count");

  auto* simulate = app.add_subcommand("simulate", "Single forward run of the schedule");

  auto* optimize = app.add_subcommand("optimize", "Run a Bayesian optimization campaign");
  std::string protocol = "tail_only";
  optimize->add_option("--protocol", protocol,
                       "fixed_time | tail_only | full | variable_time");
  std::size_t budget_opt = 0;
  auto* budget_flag = optimize->add_option("--budget", budget_opt, "Evaluation budget");
  bool resume = false;
  optimize->add_flag("--resume", resume, "Resume an interrupted campaign log");

  auto* scan = app.add_subcommand("scan-field", "Budgeted campaign per magnetic field");
  std::string fields;
  scan->add_option("--fields", fields, "Comma-separated field list in gauss")->required();
  std::string scan_protocol = "tail_only";
  scan->add_option("--protocol", scan_protocol, "Campaign protocol per field");
  std::size_t scan_budget_opt = 0;
  auto* scan_budget_flag = scan->add_option("--budget", scan_budget_opt, "Budget per field");

  auto* decay = app.add_subcommand("decay", "Condensate three-body decay curve");
  std::string decay_from;
  decay->add_option("--from", decay_from, "Run record with the condensed initial state");
  double duration = 10.0;
  decay->add_option("--duration", duration, "Hold duration in seconds");
  int samples = 201;
  decay->add_option("--samples", samples, "Number of curve samples");
  double x_factor = 0.34, y_factor = 0.130;
  decay->add_option("--x-factor", x_factor, "Horizontal rescale factor");
  decay->add_option("--y-factor", y_factor, "Vertical rescale factor");

  auto* fit = app.add_subcommand("fit-image", "Bimodal fit of an absorption image");
  std::string image_path, truth_path, save_image_path;
  fit->add_option("--image", image_path, "Image file to fit");
  fit->add_option("--synthesize", truth_path, "Truth spec JSON to synthesize and fit");
  fit->add_option("--save-image", save_image_path, "Also write the synthesized image here");

  CLI11_PARSE(app, argc, argv);
  if (*seed_flag) ov.seed = seed_opt;
  if (*workers_flag) ov.workers = workers_opt;

  try {
    if (*simulate) return cmd_simulate(ov);
    if (*optimize)
      return cmd_optimize(ov, protocol,
                          *budget_flag ? std::optional<std::size_t>(budget_opt) : std::nullopt,
                          resume);
    if (*scan)
      return cmd_scan_field(ov, fields, scan_protocol,
                            *scan_budget_flag ? std::optional<std::size_t>(scan_budget_opt)
                                              : std::nullopt);
    if (*decay) return cmd_decay(ov, decay_from, duration, samples, x_factor, y_factor);
    if (*fit) return cmd_fit_image(ov, image_path, truth_path, save_image_path);
  } catch (const PlateauError& e) {
    std::cerr << "plateau error: " << e.what() << "\n";
    return kExitPlateau;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const ResumeMismatch& e) {
    std::cerr << "resume mismatch: " << e.what() << "\n";
    return kExitResume;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
