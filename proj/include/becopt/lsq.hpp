#pragma once

#include <functional>
#include <vector>

namespace becopt {

// Damped Gauss-Newton (Levenberg-Marquardt) for small dense least-squares
// problems. The model fills the residual vector and the row-major Jacobian
// d(residual)/d(param) of shape n_residuals x n_params.
using LsqModel =
    std::function<void(const std::vector<double>& params, std::vector<double>* residuals,
                       std::vector<double>* jacobian)>;

struct LsqOptions {
  int max_iterations = 100;
  double step_tol = 1e-8;       // relative parameter step
  double residual_tol = 1e-10;  // relative residual decrease
  double lambda0 = 1e-3;
};

struct LsqResult {
  std::vector<double> params;
  double residual_norm2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Throws becopt::FitError (imaging.hpp) with the last iterate on
// non-convergence.
LsqResult levenberg_marquardt(const LsqModel& model, std::vector<double> initial,
                              const LsqOptions& options = {});

}  // namespace becopt
