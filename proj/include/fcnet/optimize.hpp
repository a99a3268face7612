#pragma once

#include <Eigen/Core>
#include <functional>

namespace fcnet {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double initial_step = 0.5;
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-8;
};

/// Derivative-free simplex minimization. Non-finite objective values are
/// treated as +inf, i.e. the step is rejected.
MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& start,
                           const NelderMeadOptions& options = {});

/// Central-difference Hessian with relative step `h`.
Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x,
                                  double h = 1e-4);

/// Brent's method on [lo, hi] for a unimodal scalar function.
double brent_minimize(const std::function<double(double)>& f, double lo,
                      double hi, double tolerance = 1e-10);

}  // namespace fcnet
