#pragma once

#include <cstddef>
#include <vector>

#include "becopt/rng.hpp"

namespace becopt {

// Squared-exponential kernel with per-dimension length scales, over
// normalized [0,1]^d inputs.
struct GpHyperparams {
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-8;
};

// GP regression surrogate. Observations are (x in [0,1]^d, cost); the
// empirical mean of the costs serves as the prior mean. The Cholesky solve
// climbs a jitter ladder (1e-10 .. 1e-6 relative to the signal variance)
// before giving up.
class GpSurrogate {
 public:
  explicit GpSurrogate(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return xs_.size(); }

  void add(const std::vector<double>& x, double y);

  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
  };
  Posterior posterior(const std::vector<double>& x) const;

  double log_marginal_likelihood() const;
  double log_marginal_likelihood(const GpHyperparams& hp) const;

  // Multi-start ascent on the log marginal likelihood over log-hyperparameter
  // space. The incumbent is always a candidate, so the refit never lowers the
  // likelihood.
  void refit(Rng& rng, int restarts = 8);

  const GpHyperparams& hyperparams() const { return hp_; }
  void set_hyperparams(const GpHyperparams& hp);

 private:
  void factorize() const;

  std::size_t dim_;
  GpHyperparams hp_;
  std::vector<std::vector<double>> xs_;
  std::vector<double> ys_;
  // Factorization cache; rebuilt lazily after adds or hyperparameter changes.
  // Access is single-writer by the campaign contract.
  mutable double y_mean_ = 0.0;
  mutable std::vector<double> alpha_;  // K^-1 (y - mean)
  mutable std::vector<double> chol_;   // lower-triangular factor, row-major
  mutable bool factored_ = false;
};

// Expected improvement for maximization at posterior (mean, variance) given
// the incumbent best.
double expected_improvement(double mean, double variance, double best);

}  // namespace becopt
