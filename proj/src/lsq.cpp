#include "becopt/lsq.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "becopt/imaging.hpp"

namespace becopt {

LsqResult levenberg_marquardt(const LsqModel& model, std::vector<double> initial,
                              const LsqOptions& options) {
  const std::size_t p = initial.size();
  if (p == 0) throw std::invalid_argument("no parameters to fit");

  std::vector<double> residuals;
  std::vector<double> jacobian;
  auto eval = [&](const std::vector<double>& params, std::vector<double>* r,
                  std::vector<double>* j) {
    model(params, r, j);
    if (r->empty()) throw std::invalid_argument("model produced no residuals");
    if (j != nullptr && j->size() != r->size() * p)
      throw std::invalid_argument("jacobian shape mismatch");
  };

  std::vector<double> params = initial;
  eval(params, &residuals, &jacobian);
  const std::size_t n = residuals.size();
  double cost = 0.0;
  for (double r : residuals) cost += r * r;

  double lambda = options.lambda0;
  LsqResult result;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        jmat(jacobian.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::Map<const Eigen::VectorXd> rvec(residuals.data(), static_cast<Eigen::Index>(n));
    const Eigen::MatrixXd jtj = jmat.transpose() * jmat;
    const Eigen::VectorXd jtr = jmat.transpose() * rvec;

    bool stepped = false;
    for (int attempt = 0; attempt < 24; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (std::size_t i = 0; i < p; ++i)
        damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      if (!delta.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      std::vector<double> trial = params;
      for (std::size_t i = 0; i < p; ++i) trial[i] += delta(static_cast<Eigen::Index>(i));
      std::vector<double> trial_res;
      std::vector<double> trial_jac;
      eval(trial, &trial_res, &trial_jac);
      double trial_cost = 0.0;
      for (double r : trial_res) trial_cost += r * r;
      if (trial_cost < cost) {
        double step_rel = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
          const double s = std::abs(delta(static_cast<Eigen::Index>(i))) /
                           (std::abs(params[i]) + 1.0);
          step_rel = std::max(step_rel, s);
        }
        const double decrease = (cost - trial_cost) / (cost + 1e-300);
        params = std::move(trial);
        residuals = std::move(trial_res);
        jacobian = std::move(trial_jac);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (step_rel < options.step_tol || decrease < options.residual_tol) {
          result.params = params;
          result.residual_norm2 = cost;
          result.iterations = iter;
          result.converged = true;
          return result;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) {
      // No descent direction at any damping; treat a stationary point as
      // converged.
      result.params = params;
      result.residual_norm2 = cost;
      result.iterations = iter;
      result.converged = true;
      return result;
    }
  }
  throw FitError("least-squares fit did not converge", params);
}

}  // namespace becopt
