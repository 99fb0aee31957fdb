#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "becopt/gp.hpp"
#include "becopt/rng.hpp"

using namespace becopt;

namespace {

// Textbook GP regression by dense LU, coded independently of the library's
// Cholesky path.
GpSurrogate::Posterior dense_oracle(const std::vector<std::vector<double>>& xs,
                                    const std::vector<double>& ys,
                                    const GpHyperparams& hp,
                                    const std::vector<double>& query) {
  const int n = static_cast<int>(xs.size());
  const int d = static_cast<int>(query.size());
  auto kern = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double z = (a[i] - b[i]) / hp.length_scales[i];
      s += z * z;
    }
    return hp.signal_variance * std::exp(-0.5 * s);
  };
  double mean_y = 0.0;
  for (double y : ys) mean_y += y;
  mean_y /= n;

  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = kern(xs[i], xs[j]);
  for (int i = 0; i < n; ++i) k(i, i) += hp.noise_variance + 1e-10 * hp.signal_variance;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = ys[i] - mean_y;
  Eigen::VectorXd kstar(n);
  for (int i = 0; i < n; ++i) kstar(i) = kern(xs[i], query);

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const Eigen::VectorXd alpha = lu.solve(y);
  const Eigen::VectorXd v = lu.solve(kstar);
  GpSurrogate::Posterior p;
  p.mean = mean_y + kstar.dot(alpha);
  p.variance = hp.signal_variance - kstar.dot(v);
  return p;
}

}  // namespace

TEST_CASE("prior before any observation") {
  GpSurrogate gp(2);
  const auto p = gp.posterior({0.3, 0.7});
  CHECK(p.mean == 0.0);
  CHECK(p.variance == gp.hyperparams().signal_variance);
}

TEST_CASE("posterior interpolates observed points at tiny noise") {
  GpSurrogate gp(1);
  GpHyperparams hp;
  hp.length_scales = {0.3};
  hp.signal_variance = 2.0;
  hp.noise_variance = 1e-10;
  gp.set_hyperparams(hp);
  gp.add({0.2}, 1.5);
  gp.add({0.6}, -0.4);
  gp.add({0.9}, 0.7);
  const auto p = gp.posterior({0.6});
  CHECK(p.mean == doctest::Approx(-0.4).epsilon(1e-5));
  CHECK(p.variance <= 1e-7 * hp.signal_variance);  // jitter scale
}

TEST_CASE("posterior matches the dense-solve oracle on a 5-point set") {
  GpSurrogate gp(1);
  GpHyperparams hp;
  hp.length_scales = {0.25};
  hp.signal_variance = 1.3;
  hp.noise_variance = 1e-6;
  gp.set_hyperparams(hp);
  std::vector<std::vector<double>> xs{{0.05}, {0.25}, {0.5}, {0.75}, {0.95}};
  std::vector<double> ys{0.3, -0.2, 0.9, 0.1, -0.5};
  for (std::size_t i = 0; i < xs.size(); ++i) gp.add(xs[i], ys[i]);
  for (double q : {0.1, 0.33, 0.61, 0.88}) {
    const auto lib = gp.posterior({q});
    const auto ref = dense_oracle(xs, ys, hp, {q});
    CHECK(lib.mean == doctest::Approx(ref.mean).epsilon(1e-8));
    CHECK(lib.variance == doctest::Approx(ref.variance).epsilon(1e-6));
  }
}

TEST_CASE("posterior matches the oracle on random datasets up to 50 points") {
  Rng rng(404);
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t d = 1 + trial % 3;
    GpSurrogate gp(d);
    GpHyperparams hp;
    hp.length_scales.assign(d, 0.35);
    hp.signal_variance = 0.8;
    hp.noise_variance = 1e-6;
    gp.set_hyperparams(hp);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    const std::size_t n = 20 + 10 * trial;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x(d);
      for (auto& v : x) v = rng.uniform();
      const double y = std::sin(5.0 * x[0]) + 0.3 * rng.normal();
      xs.push_back(x);
      ys.push_back(y);
      gp.add(x, y);
    }
    for (int q = 0; q < 5; ++q) {
      std::vector<double> query(d);
      for (auto& v : query) v = rng.uniform();
      const auto lib = gp.posterior(query);
      const auto ref = dense_oracle(xs, ys, hp, query);
      CHECK(lib.mean == doctest::Approx(ref.mean).epsilon(1e-8));
      CHECK(std::abs(lib.variance - ref.variance) < 1e-8 * hp.signal_variance);
    }
  }
}

TEST_CASE("duplicate inputs with different costs are absorbed by the noise") {
  GpSurrogate gp(1);
  gp.add({0.5}, 1.0);
  gp.add({0.5}, 2.0);
  const auto p = gp.posterior({0.5});
  CHECK(p.mean > 0.9);
  CHECK(p.mean < 2.1);
}

TEST_CASE("refit never lowers the marginal likelihood and beats a grid slice") {
  Rng data_rng(7);
  GpSurrogate gp(1);
  for (int i = 0; i < 18; ++i) {
    const double x = data_rng.uniform();
    gp.add({x}, std::sin(6.0 * x) + 0.05 * data_rng.normal());
  }
  const double before = gp.log_marginal_likelihood();
  Rng rng = Rng::stream(11, "refit", 1);
  gp.refit(rng);
  const double after = gp.log_marginal_likelihood();
  CHECK(after >= before - 1e-12);

  // Grid oracle over a (length scale, signal variance) slice at the refit's
  // noise level; the refit optimum must not fall below the slice's best.
  double grid_best = -1e300;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      GpHyperparams hp = gp.hyperparams();
      hp.length_scales[0] = std::exp(std::log(0.03) + (std::log(10.0) - std::log(0.03)) * i / 23.0);
      hp.signal_variance = std::exp(std::log(1e-3) + (std::log(1e3) - std::log(1e-3)) * j / 23.0);
      grid_best = std::max(grid_best, gp.log_marginal_likelihood(hp));
    }
  CHECK(after >= grid_best - 1e-6);
}

TEST_CASE("expected improvement limits") {
  // Mean below the incumbent with vanishing variance: nothing to gain.
  CHECK(expected_improvement(0.2, 1e-18, 1.0) == 0.0);
  // Mean above the incumbent with vanishing variance: the margin itself.
  CHECK(expected_improvement(1.5, 1e-18, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(expected_improvement(0.0, 1.0, 0.0) > 0.0);
  // More variance at equal mean never hurts.
  CHECK(expected_improvement(0.5, 2.0, 1.0) > expected_improvement(0.5, 0.5, 1.0));
}
