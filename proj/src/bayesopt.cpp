#include "becopt/bayesopt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace becopt {

Optimizer::Optimizer(std::size_t dim, const OptimizerConfig& config)
    : dim_(dim), config_(config), surrogate_(dim), clamp_counts_(dim, 0) {
  if (dim == 0) throw std::invalid_argument("optimizer needs at least one dimension");
  if (config_.min_init == 0) config_.min_init = 2 * dim;
}

void Optimizer::set_warm_start(const std::vector<double>& x) {
  if (x.size() != dim_) throw std::invalid_argument("warm start dimension mismatch");
  warm_start_ = x;
  has_warm_start_ = true;
}

std::size_t Optimizer::init_design_size() const {
  return config_.min_init + (has_warm_start_ ? 1 : 0);
}

// Centered Latin-hypercube design: one stratum per point and dimension, with
// per-dimension permutations drawn from the "init" stream.
std::vector<double> Optimizer::design_point(std::size_t index) const {
  const std::size_t m = config_.min_init;
  Rng rng = Rng::stream(config_.seed, "init");
  std::vector<std::vector<std::size_t>> perms(dim_);
  for (std::size_t d = 0; d < dim_; ++d) {
    auto& p = perms[d];
    p.resize(m);
    for (std::size_t i = 0; i < m; ++i) p[i] = i;
    for (std::size_t i = m; i > 1; --i)
      std::swap(p[i - 1], p[rng.below(i)]);
  }
  std::vector<double> x(dim_);
  for (std::size_t d = 0; d < dim_; ++d)
    x[d] = (static_cast<double>(perms[d][index]) + 0.5) / static_cast<double>(m);
  return x;
}

std::vector<double> Optimizer::maximize_ei(const GpSurrogate& surrogate, double best_cost,
                                           Rng& rng) const {
  auto ei_at = [&](const std::vector<double>& x) {
    const auto post = surrogate.posterior(x);
    return expected_improvement(post.mean, post.variance, best_cost);
  };

  const Observation* incumbent = best();
  std::vector<std::vector<double>> candidates;
  const std::size_t n_random = 64 + 16 * dim_;
  candidates.reserve(n_random + 16);
  for (std::size_t i = 0; i < n_random; ++i) {
    std::vector<double> x(dim_);
    for (auto& v : x) v = rng.uniform();
    candidates.push_back(std::move(x));
  }
  if (incumbent != nullptr) {
    for (int i = 0; i < 16; ++i) {
      std::vector<double> x = incumbent->x;
      for (auto& v : x) v = std::clamp(v + 0.05 * rng.normal(), 0.0, 1.0);
      candidates.push_back(std::move(x));
    }
  }

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scored.emplace_back(ei_at(candidates[i]), i);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  std::vector<double> best_x = candidates[scored.front().second];
  double best_ei = scored.front().first;
  const std::size_t n_refine = std::min<std::size_t>(4, scored.size());
  for (std::size_t r = 0; r < n_refine; ++r) {
    std::vector<double> x = candidates[scored[r].second];
    double val = scored[r].first;
    double step = 0.08;
    int evals = 0;
    while (step > 1e-4 && evals < 240) {
      bool improved = false;
      for (std::size_t d = 0; d < dim_ && !improved; ++d) {
        for (double dir : {+1.0, -1.0}) {
          std::vector<double> cand = x;
          cand[d] = std::clamp(cand[d] + dir * step, 0.0, 1.0);
          const double cv = ei_at(cand);
          ++evals;
          if (cv > val) {
            x = std::move(cand);
            val = cv;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (val > best_ei) {
      best_ei = val;
      best_x = x;
    }
  }
  return best_x;
}

std::vector<std::vector<double>> Optimizer::propose(std::size_t batch) const {
  if (batch < 1) throw std::invalid_argument("batch must be at least one");
  std::vector<std::vector<double>> out;
  out.reserve(batch);

  const std::size_t warm = has_warm_start_ ? 1 : 0;
  std::size_t position = log_.size();

  GpSurrogate liar = surrogate_;  // constant-liar copy for batch fill-in
  const Observation* inc = best();
  double liar_cost = inc != nullptr ? inc->cost : 0.0;

  for (std::size_t b = 0; b < batch; ++b, ++position) {
    if (warm == 1 && position == 0) {
      out.push_back(warm_start_);
      continue;
    }
    const std::size_t design_index = position - warm;
    if (design_index < config_.min_init) {
      out.push_back(design_point(design_index));
      continue;
    }
    Rng rng = Rng::stream(config_.seed, "propose", position);
    std::vector<double> x = maximize_ei(liar, liar_cost, rng);
    liar.add(x, liar_cost);
    out.push_back(std::move(x));
  }
  return out;
}

bool Optimizer::update(const Observation& observation) {
  if (observation.x.size() != dim_) throw std::invalid_argument("observation dimension mismatch");
  if (!std::isfinite(observation.cost)) return false;
  log_.push_back(observation);
  surrogate_.add(observation.x, observation.cost);
  for (std::size_t d : observation.clamped)
    if (d < dim_) ++clamp_counts_[d];
  const std::size_t n = log_.size();
  if (n >= init_design_size() && config_.refit_interval > 0 && n % config_.refit_interval == 0) {
    Rng rng = Rng::stream(config_.seed, "refit", n);
    surrogate_.refit(rng, config_.refit_restarts);
  }
  return true;
}

const Observation* Optimizer::best() const {
  const Observation* b = nullptr;
  for (const auto& obs : log_)
    if (b == nullptr || obs.cost > b->cost) b = &obs;
  return b;
}

std::vector<bool> Optimizer::boundary_flags() const {
  std::vector<bool> flags(dim_, false);
  const Observation* b = best();
  if (b == nullptr) return flags;
  for (std::size_t d = 0; d < dim_; ++d)
    flags[d] = b->x[d] <= config_.boundary_epsilon || b->x[d] >= 1.0 - config_.boundary_epsilon;
  return flags;
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "fixed_time") return Protocol::fixed_time;
  if (name == "tail_only") return Protocol::tail_only;
  if (name == "full") return Protocol::full;
  if (name == "variable_time") return Protocol::variable_time;
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::fixed_time: return "fixed_time";
    case Protocol::tail_only: return "tail_only";
    case Protocol::full: return "full";
    case Protocol::variable_time: return "variable_time";
  }
  return "unknown";
}

ParamLayout layout_for_protocol(Protocol protocol, const CampaignProblem& problem) {
  switch (protocol) {
    case Protocol::tail_only:
      return tail_layout(problem.seed_schedule, problem.n_tail, problem.power_lo_h_W,
                         problem.power_hi_h_W, problem.power_lo_v_W, problem.power_hi_v_W);
    case Protocol::variable_time:
      return full_layout(problem.seed_schedule, problem.power_lo_h_W, problem.power_hi_h_W,
                         problem.power_lo_v_W, problem.power_hi_v_W, /*include_time=*/true,
                         problem.time_lo_s, problem.time_hi_s);
    case Protocol::fixed_time:
    case Protocol::full:
      // Both freeze the total time and expose every power knot; they differ
      // only in campaign intent (time study vs. global search).
      return full_layout(problem.seed_schedule, problem.power_lo_h_W, problem.power_hi_h_W,
                         problem.power_lo_v_W, problem.power_hi_v_W);
  }
  throw std::invalid_argument("unknown protocol");
}

namespace {

Observation evaluate_candidate(const std::vector<double>& x, std::size_t iteration,
                               const CampaignProblem& problem, const ParamLayout& layout,
                               std::uint64_t seed) {
  Observation obs;
  obs.iteration = iteration;
  obs.x = x;

  DecodeResult decoded = decode(x, layout, problem.seed_schedule);
  obs.clamped = decoded.clamped;

  Trajectory traj = run(decoded.schedule, problem.scenario, problem.sim);
  if (traj.points.empty()) {
    obs.cost = 0.0;
    obs.summary.lost = true;
    return obs;
  }

  CostValue cv = evaluate(traj, problem.weights, problem.cost_mode);
  double n_bec = cv.n_bec;
  if (problem.full_loop && !traj.lost_cloud) {
    const TrajectoryPoint& fin = traj.back();
    try {
      ImageNoise noise{problem.image_noise_od, Rng::stream(seed, "noise", iteration).next_u64()};
      AbsorptionImage img =
          synthesize(fin.cloud, fin.trap, problem.imaging, noise, problem.sim.atom_mass_kg);
      BimodalFitResult fit = fit_bimodal(img, problem.imaging);
      n_bec = fit.n_bec;
      cv.value = problem.cost_mode == CostMode::efficiency_only
                     ? problem.weights.beta_gamma * cv.gamma
                     : combined_cost(cv.gamma, n_bec, problem.weights);
    } catch (const std::exception&) {
      // Unmeasurable image: score the run on efficiency alone, like a
      // failed condensation.
      n_bec = 0.0;
      cv.value = problem.weights.beta_gamma * cv.gamma;
    }
  }

  obs.cost = cv.value;
  const TrajectoryPoint& last = traj.back();
  obs.summary.n = last.cloud.n_total;
  obs.summary.t_uK = last.cloud.temperature_uK;
  obs.summary.n_bec = n_bec;
  obs.summary.psd = last.psd;
  obs.summary.gamma = cv.gamma;
  obs.summary.n_at_condensation = traj.n_at_condensation;
  obs.summary.lost = traj.lost_cloud;
  return obs;
}

}  // namespace

CampaignResult run_campaign(Protocol protocol, const CampaignProblem& problem,
                            const OptimizerConfig& config, int workers,
                            const std::function<void(const Observation&)>& sink,
                            const std::vector<Observation>& replay) {
  problem.seed_schedule.validate();
  problem.scenario.validate();
  CampaignResult result;
  result.protocol = protocol;
  result.layout = layout_for_protocol(protocol, problem);
  const std::size_t dim = result.layout.dim();

  Optimizer optimizer(dim, config);
  if (problem.warm_start)
    optimizer.set_warm_start(encode(problem.seed_schedule, result.layout).values);
  for (const auto& obs : replay)
    if (!optimizer.update(obs))
      throw std::runtime_error("replayed observation has a non-finite cost");

  const int n_workers = std::max(1, workers);
  while (optimizer.log().size() < config.budget) {
    const std::size_t remaining = config.budget - optimizer.log().size();
    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(config.batch, 1),
                                                    remaining);
    const auto xs = optimizer.propose(batch);
    std::vector<Observation> results(xs.size());
    const std::size_t base_iter = optimizer.log().size();
    if (n_workers == 1 || xs.size() == 1) {
      for (std::size_t i = 0; i < xs.size(); ++i)
        results[i] = evaluate_candidate(xs[i], base_iter + i, problem, result.layout,
                                        config.seed);
    } else {
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= xs.size()) break;
          results[i] = evaluate_candidate(xs[i], base_iter + i, problem, result.layout,
                                          config.seed);
        }
      };
      std::vector<std::thread> pool;
      const std::size_t n_threads = std::min<std::size_t>(n_workers, xs.size());
      pool.reserve(n_threads);
      for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    for (const auto& obs : results) {
      optimizer.update(obs);
      if (sink) sink(obs);
    }
  }

  result.log = optimizer.log();
  result.boundary_flags = optimizer.boundary_flags();
  result.clamp_counts = optimizer.clamp_counts();
  const Observation* best = optimizer.best();
  if (best != nullptr) {
    result.best_index = static_cast<std::size_t>(best - optimizer.log().data());
    result.best_schedule =
        decode(best->x, result.layout, problem.seed_schedule).schedule;
  } else {
    result.best_schedule = problem.seed_schedule;
  }
  return result;
}

std::string observation_to_jsonl(const Observation& o) {
  nlohmann::json j;
  j["iter"] = o.iteration;
  j["x"] = o.x;
  j["cost"] = o.cost;
  j["summary"] = {{"n", o.summary.n},
                  {"t_uK", o.summary.t_uK},
                  {"n_bec", o.summary.n_bec},
                  {"psd", o.summary.psd},
                  {"gamma", o.summary.gamma},
                  {"n_at_condensation", o.summary.n_at_condensation},
                  {"lost", o.summary.lost}};
  j["clamped"] = o.clamped;
  return j.dump();
}

Observation observation_from_jsonl(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  Observation o;
  o.iteration = j.at("iter").get<std::size_t>();
  o.x = j.at("x").get<std::vector<double>>();
  o.cost = j.at("cost").get<double>();
  const auto& s = j.at("summary");
  o.summary.n = s.at("n").get<double>();
  o.summary.t_uK = s.at("t_uK").get<double>();
  o.summary.n_bec = s.at("n_bec").get<double>();
  o.summary.psd = s.at("psd").get<double>();
  o.summary.gamma = s.at("gamma").get<double>();
  o.summary.n_at_condensation = s.at("n_at_condensation").get<double>();
  o.summary.lost = s.at("lost").get<bool>();
  o.clamped = j.at("clamped").get<std::vector<std::size_t>>();
  return o;
}

}  // namespace becopt
