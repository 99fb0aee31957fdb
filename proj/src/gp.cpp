#include "becopt/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace becopt {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;

double sq(double x) { return x * x; }

double kernel(const GpHyperparams& hp, const std::vector<double>& a,
              const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += sq((a[i] - b[i]) / hp.length_scales[i]);
  return hp.signal_variance * std::exp(-0.5 * s);
}

// In-place lower Cholesky of a row-major symmetric matrix; false if not PD.
bool cholesky(std::vector<double>& m, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = m[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= sq(m[j * n + k]);
    if (d <= 0.0 || !std::isfinite(d)) return false;
    const double l = std::sqrt(d);
    m[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
      m[i * n + j] = s / l;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) m[i * n + j] = 0.0;
  return true;
}

void solve_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

void solve_lower_t(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

}  // namespace

GpSurrogate::GpSurrogate(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("surrogate needs at least one dimension");
  hp_.length_scales.assign(dim, 0.3);
  hp_.signal_variance = 1.0;
  hp_.noise_variance = 1e-8;
}

void GpSurrogate::set_hyperparams(const GpHyperparams& hp) {
  if (hp.length_scales.size() != dim_ || hp.signal_variance <= 0.0 || hp.noise_variance <= 0.0)
    throw std::invalid_argument("invalid hyperparameters");
  for (double l : hp.length_scales)
    if (l <= 0.0) throw std::invalid_argument("length scales must be positive");
  hp_ = hp;
  factored_ = false;
}

void GpSurrogate::add(const std::vector<double>& x, double y) {
  if (x.size() != dim_) throw std::invalid_argument("observation dimension mismatch");
  if (!std::isfinite(y)) throw std::invalid_argument("observation cost must be finite");
  xs_.push_back(x);
  ys_.push_back(y);
  factored_ = false;
}

void GpSurrogate::factorize() const {
  const std::size_t n = xs_.size();
  y_mean_ = 0.0;
  for (double y : ys_) y_mean_ += y;
  if (n > 0) y_mean_ /= static_cast<double>(n);
  chol_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double k = kernel(hp_, xs_[i], xs_[j]);
      chol_[i * n + j] = k;
      chol_[j * n + i] = k;
    }
  bool ok = false;
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0001; jitter *= 10.0) {
    std::vector<double> attempt = chol_;
    const double bump = hp_.noise_variance + jitter * hp_.signal_variance;
    for (std::size_t i = 0; i < n; ++i) attempt[i * n + i] += bump;
    if (cholesky(attempt, n)) {
      chol_ = std::move(attempt);
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("kernel matrix not positive definite at maximum jitter");
  alpha_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) alpha_[i] = ys_[i] - y_mean_;
  solve_lower(chol_, n, alpha_);
  solve_lower_t(chol_, n, alpha_);
  factored_ = true;
}

GpSurrogate::Posterior GpSurrogate::posterior(const std::vector<double>& x) const {
  if (x.size() != dim_) throw std::invalid_argument("query dimension mismatch");
  const std::size_t n = xs_.size();
  if (n == 0) return {0.0, hp_.signal_variance};
  if (!factored_) factorize();
  std::vector<double> k_star(n);
  for (std::size_t i = 0; i < n; ++i) k_star[i] = kernel(hp_, xs_[i], x);
  double mean = y_mean_;
  for (std::size_t i = 0; i < n; ++i) mean += k_star[i] * alpha_[i];
  std::vector<double> v = k_star;
  solve_lower(chol_, n, v);
  double reduction = 0.0;
  for (double vi : v) reduction += vi * vi;
  const double variance = std::max(hp_.signal_variance - reduction, 0.0);
  return {mean, variance};
}

double GpSurrogate::log_marginal_likelihood() const {
  return log_marginal_likelihood(hp_);
}

double GpSurrogate::log_marginal_likelihood(const GpHyperparams& hp) const {
  const std::size_t n = xs_.size();
  if (n == 0) return 0.0;
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double k = kernel(hp, xs_[i], xs_[j]);
      m[i * n + j] = k;
      m[j * n + i] = k;
    }
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] += hp.noise_variance;
  if (!cholesky(m, n)) return -std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (double y : ys_) mean += y;
  mean /= static_cast<double>(n);
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = ys_[i] - mean;
  solve_lower(m, n, a);
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    quad += a[i] * a[i];
    logdet += std::log(m[i * n + i]);
  }
  return -0.5 * quad - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
}

void GpSurrogate::refit(Rng& rng, int restarts) {
  const std::size_t n = xs_.size();
  if (n < 2) return;

  double vy = 0.0, my = 0.0;
  for (double y : ys_) my += y;
  my /= static_cast<double>(n);
  for (double y : ys_) vy += sq(y - my);
  vy = std::max(vy / static_cast<double>(n), 1e-12);

  const std::size_t p = dim_ + 2;  // log length scales, log sigma_f^2, log sigma_n^2
  std::vector<double> lo(p), hi(p);
  for (std::size_t i = 0; i < dim_; ++i) {
    lo[i] = std::log(0.03);
    hi[i] = std::log(10.0);
  }
  lo[dim_] = std::log(1e-4 * vy);
  hi[dim_] = std::log(1e4 * vy);
  lo[dim_ + 1] = std::log(1e-10 * vy);
  hi[dim_ + 1] = std::log(1e-2 * vy);

  auto unpack = [&](const std::vector<double>& th) {
    GpHyperparams hp;
    hp.length_scales.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) hp.length_scales[i] = std::exp(th[i]);
    hp.signal_variance = std::exp(th[dim_]);
    hp.noise_variance = std::exp(th[dim_ + 1]);
    return hp;
  };
  auto objective = [&](const std::vector<double>& th) {
    for (std::size_t i = 0; i < p; ++i)
      if (th[i] < lo[i] || th[i] > hi[i]) return -std::numeric_limits<double>::infinity();
    return log_marginal_likelihood(unpack(th));
  };
  auto clamp_box = [&](std::vector<double> th) {
    for (std::size_t i = 0; i < p; ++i) th[i] = std::clamp(th[i], lo[i], hi[i]);
    return th;
  };

  std::vector<double> incumbent(p);
  for (std::size_t i = 0; i < dim_; ++i) incumbent[i] = std::log(hp_.length_scales[i]);
  incumbent[dim_] = std::log(hp_.signal_variance);
  incumbent[dim_ + 1] = std::log(hp_.noise_variance);
  incumbent = clamp_box(incumbent);

  std::vector<std::vector<double>> starts{incumbent};
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> th(p);
    for (std::size_t i = 0; i < p; ++i) th[i] = rng.uniform(lo[i], hi[i]);
    starts.push_back(std::move(th));
  }

  std::vector<double> best_th = incumbent;
  double best_val = objective(incumbent);
  for (const auto& start : starts) {
    std::vector<double> th = start;
    double val = objective(th);
    // Compass search in log space.
    double step = 0.6;
    int evals = 0;
    while (step > 1e-2 && evals < 160) {
      bool improved = false;
      for (std::size_t i = 0; i < p && !improved; ++i) {
        for (double dir : {+1.0, -1.0}) {
          std::vector<double> cand = th;
          cand[i] = std::clamp(cand[i] + dir * step, lo[i], hi[i]);
          const double cv = objective(cand);
          ++evals;
          if (cv > val) {
            th = std::move(cand);
            val = cv;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (val > best_val) {
      best_val = val;
      best_th = th;
    }
  }
  if (std::isfinite(best_val)) {
    hp_ = unpack(best_th);
    factored_ = false;
  }
}

double expected_improvement(double mean, double variance, double best) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double delta = mean - best;
  if (sigma < 1e-15) return std::max(delta, 0.0);
  const double z = delta / sigma;
  const double cdf = 0.5 * std::erfc(-z / 1.4142135623730951);
  const double pdf = std::exp(-0.5 * z * z) / 2.5066282746310002;
  return delta * cdf + sigma * pdf;
}

}  // namespace becopt
