#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "becopt/bayesopt.hpp"

using namespace becopt;

namespace {

Observation make_obs(std::size_t iter, std::vector<double> x, double cost) {
  Observation o;
  o.iteration = iter;
  o.x = std::move(x);
  o.cost = cost;
  return o;
}

// Drives the optimizer on a closed-form objective.
double drive(Optimizer& opt, std::size_t budget, double (*f)(const std::vector<double>&)) {
  while (opt.log().size() < budget) {
    const auto xs = opt.propose(1);
    opt.update(make_obs(opt.log().size(), xs[0], f(xs[0])));
  }
  return opt.best()->cost;
}

double quad1d(const std::vector<double>& x) { return -(x[0] - 0.3) * (x[0] - 0.3); }
double quad2d(const std::vector<double>& x) {
  return -(x[0] - 0.62) * (x[0] - 0.62) - 2.0 * (x[1] - 0.37) * (x[1] - 0.37);
}

}  // namespace

TEST_CASE("initial proposals form a Latin hypercube") {
  OptimizerConfig cfg;
  cfg.seed = 321;
  cfg.min_init = 8;
  Optimizer opt(3, cfg);
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto xs = opt.propose(1);
    pts.push_back(xs[0]);
    opt.update(make_obs(i, xs[0], 0.1 * static_cast<double>(i)));
  }
  // Per dimension the 8 points occupy 8 distinct strata.
  for (std::size_t d = 0; d < 3; ++d) {
    std::set<int> strata;
    for (const auto& p : pts) strata.insert(static_cast<int>(p[d] * 8.0));
    CHECK(strata.size() == 8);
  }
}

TEST_CASE("EI search localizes a 1D quadratic within 25 evaluations") {
  OptimizerConfig cfg;
  cfg.seed = 2024;
  Optimizer opt(1, cfg);
  drive(opt, 25, quad1d);
  CHECK(std::abs(opt.best()->x[0] - 0.3) < 0.02);
}

TEST_CASE("EI search localizes a 2D separable quadratic within 60 evaluations") {
  OptimizerConfig cfg;
  cfg.seed = 77;
  Optimizer opt(2, cfg);
  drive(opt, 60, quad2d);
  CHECK(std::abs(opt.best()->x[0] - 0.62) < 0.02);
  CHECK(std::abs(opt.best()->x[1] - 0.37) < 0.02);
}

TEST_CASE("best-so-far is a running maximum") {
  OptimizerConfig cfg;
  cfg.seed = 5;
  Optimizer opt(1, cfg);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 30; ++i) {
    const auto xs = opt.propose(1);
    opt.update(make_obs(i, xs[0], quad1d(xs[0])));
    CHECK(opt.best()->cost >= best);
    best = opt.best()->cost;
  }
}

TEST_CASE("non-finite costs are rejected") {
  OptimizerConfig cfg;
  Optimizer opt(1, cfg);
  CHECK_FALSE(opt.update(make_obs(0, {0.5}, std::numeric_limits<double>::quiet_NaN())));
  CHECK_FALSE(opt.update(make_obs(0, {0.5}, std::numeric_limits<double>::infinity())));
  CHECK(opt.log().empty());
  CHECK(opt.update(make_obs(0, {0.5}, 1.0)));
  CHECK(opt.log().size() == 1);
}

TEST_CASE("boundary flags track the incumbent") {
  OptimizerConfig cfg;
  cfg.boundary_epsilon = 0.02;
  Optimizer opt(2, cfg);
  opt.update(make_obs(0, {0.5, 0.5}, 1.0));
  auto flags = opt.boundary_flags();
  CHECK_FALSE(flags[0]);
  CHECK_FALSE(flags[1]);
  opt.update(make_obs(1, {1.0, 0.985}, 2.0));  // new best at the edge
  flags = opt.boundary_flags();
  CHECK(flags[0]);
  CHECK(flags[1]);
}

TEST_CASE("identical seeds give identical campaigns") {
  for (std::size_t batch : {std::size_t{1}, std::size_t{3}}) {
    OptimizerConfig cfg;
    cfg.seed = 909;
    cfg.batch = batch;
    Optimizer a(2, cfg), b(2, cfg);
    for (std::size_t round = 0; round < 8; ++round) {
      const auto xa = a.propose(batch);
      const auto xb = b.propose(batch);
      REQUIRE(xa.size() == xb.size());
      for (std::size_t i = 0; i < xa.size(); ++i) {
        REQUIRE(xa[i] == xb[i]);  // bitwise
        a.update(make_obs(a.log().size(), xa[i], quad2d(xa[i])));
        b.update(make_obs(b.log().size(), xb[i], quad2d(xb[i])));
      }
    }
  }
}

TEST_CASE("replaying a log prefix reproduces the continuation") {
  OptimizerConfig cfg;
  cfg.seed = 1234;
  Optimizer full(2, cfg);
  std::vector<Observation> log;
  for (std::size_t i = 0; i < 24; ++i) {
    const auto xs = full.propose(1);
    const Observation obs = make_obs(i, xs[0], quad2d(xs[0]));
    full.update(obs);
    log.push_back(obs);
  }

  Optimizer resumed(2, cfg);
  for (std::size_t i = 0; i < 12; ++i) resumed.update(log[i]);
  for (std::size_t i = 12; i < 24; ++i) {
    const auto xs = resumed.propose(1);
    REQUIRE(xs[0] == log[i].x);  // bitwise identical continuation
    resumed.update(log[i]);
  }
}

TEST_CASE("batch proposals use constant-liar fill-in and stay distinct") {
  OptimizerConfig cfg;
  cfg.seed = 31;
  cfg.min_init = 6;
  Optimizer opt(2, cfg);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto xs = opt.propose(1);
    opt.update(make_obs(i, xs[0], quad2d(xs[0])));
  }
  const auto batch = opt.propose(3);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = i + 1; j < batch.size(); ++j) {
      double dist = 0.0;
      for (std::size_t d = 0; d < 2; ++d)
        dist += (batch[i][d] - batch[j][d]) * (batch[i][d] - batch[j][d]);
      CHECK(dist > 1e-8);
    }
}

TEST_CASE("protocol layouts expose the documented dimensions") {
  CampaignProblem problem;
  problem.seed_schedule.times_s = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0};
  problem.seed_schedule.powers_h_W = {5.0, 4.0, 3.0, 2.0, 1.2, 0.7, 0.4, 0.25};
  problem.seed_schedule.powers_v_W = {0.0, 0.4, 0.8, 0.8, 0.7, 0.55, 0.45, 0.35};
  problem.n_tail = 3;

  CHECK(layout_for_protocol(Protocol::tail_only, problem).dim() == 6);
  CHECK(layout_for_protocol(Protocol::full, problem).dim() == 14);
  CHECK(layout_for_protocol(Protocol::fixed_time, problem).dim() == 14);
  CHECK(layout_for_protocol(Protocol::variable_time, problem).dim() == 15);
  CHECK(protocol_from_string("tail_only") == Protocol::tail_only);
  CHECK(to_string(Protocol::variable_time) == "variable_time");
  CHECK_THROWS_AS(protocol_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("warm start is evaluated first and sets the floor") {
  OptimizerConfig cfg;
  cfg.seed = 88;
  cfg.min_init = 4;
  Optimizer opt(2, cfg);
  opt.set_warm_start({0.62, 0.37});  // the optimum of quad2d
  const auto first = opt.propose(1);
  CHECK(first[0] == std::vector<double>{0.62, 0.37});
  const double warm_cost = quad2d(first[0]);
  opt.update(make_obs(0, first[0], warm_cost));
  drive(opt, 20, quad2d);
  CHECK(opt.best()->cost >= warm_cost);
}

TEST_CASE("observation jsonl round trip") {
  Observation o;
  o.iteration = 17;
  o.x = {0.123456789012345, 0.98765};
  o.cost = 3.14159;
  o.summary = {1e5, 0.42, 2.3e4, 2.7, 3.9, 1.4e5, false};
  o.clamped = {1};
  const Observation back = observation_from_jsonl(observation_to_jsonl(o));
  CHECK(back.iteration == o.iteration);
  CHECK(back.x == o.x);
  CHECK(back.cost == o.cost);
  CHECK(back.summary.n == o.summary.n);
  CHECK(back.summary.n_bec == o.summary.n_bec);
  CHECK(back.summary.n_at_condensation == o.summary.n_at_condensation);
  CHECK(back.summary.lost == o.summary.lost);
  CHECK(back.clamped == o.clamped);
}
