#pragma once

#include <Eigen/Dense>

#include "pnpfv/problem.hpp"

namespace pnpfv {

// Fractions induced by a potential value y and multipliers xi:
// v_i = exp(xi_i - z_i y) / (1 + sum_j exp(xi_j - z_j y)).
// Safe against overflow for any finite arguments.
Eigen::VectorXd v_fractions(double y, const Eigen::VectorXd& xi,
                            const Eigen::VectorXd& z);

// Net charge -sum_i z_i v_i of the induced fractions and its derivative
// in y, which is nonnegative.
double charge_response(double y, const Eigen::VectorXd& xi,
                       const Eigen::VectorXd& z);
double charge_response_slope(double y, const Eigen::VectorXd& xi,
                             const Eigen::VectorXd& z);

struct PsiEval {
  double value = 0.0;
  Eigen::VectorXd grad;  // N potential entries followed by I multipliers
};

// The strictly convex merit function whose minimizer is the steady state:
// quadratic potential energy over all faces (with mirror values on the
// boundary) plus the per-cell log partition term, minus the linear terms
// for the forcing and the prescribed species masses.
PsiEval psi_value_grad(const DiscreteProblem& problem,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& xi);

struct SteadySolution {
  Eigen::VectorXd phi;
  Eigen::VectorXd xi;
  Eigen::MatrixXd u;
  double psi_value = 0.0;
  double kkt_inf = 0.0;
  int iterations = 0;
};

// Damped Newton minimization of the merit function. The default initial
// guess solves the linear Poisson problem at the initial fractions and
// sets the multipliers from the mean composition.
SteadySolution solve_steady(const DiscreteProblem& problem);
SteadySolution solve_steady(const DiscreteProblem& problem,
                            const Eigen::VectorXd& y0,
                            const Eigen::VectorXd& xi0);

}  // namespace pnpfv
