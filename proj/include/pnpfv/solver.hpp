#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "pnpfv/assembly.hpp"
#include "pnpfv/problem.hpp"

namespace pnpfv {

// Direct sparse solve with one step of iterative refinement. Throws
// SolverError when the factorization fails or the refined residual is not
// at rounding level.
Eigen::VectorXd linear_solve(const SparseOperator& A, const Eigen::VectorXd& b);

struct NewtonOptions {
  double tol_inf = 1e-10;          // residual and correction sup norm at acceptance
  int max_iters = 50;              // Newton updates per step
  double mass_tol = 1e-14;         // conservation defect, scaled by max(1, |Omega|)
  int max_positivity_sweeps = 50;  // repair passes per step
};

struct NewtonReport {
  int iterations = 0;
  double residual_inf = 0.0;
  double mass_defect = 0.0;      // worst per-species defect at acceptance
  int positivity_sweeps = 0;
};

// Solves one backward Euler step of the coupled system with a damped
// Newton method. The initial guess keeps the old fractions and refreshes
// the potential from the linear Poisson solve. A step is accepted only
// when the residual and the latest Newton correction are both below
// tol_inf, every fraction (solvent included) is strictly positive, and
// the per-species conservation defect is at rounding level; Newton keeps
// polishing until all of these hold.
std::pair<State, NewtonReport> advance_step(const DiscreteProblem& problem,
                                            const State& state_old, double tau,
                                            const NewtonOptions& options = {});

struct StepRecord {
  double time = 0.0;
  double tau = 0.0;
  int newton_iters = 0;
  double energy = 0.0;
  double dissipation = 0.0;
  double min_fraction = 0.0;
  Eigen::VectorXd masses;
};

struct TimeLoopResult {
  State initial_state;
  State final_state;
  double initial_energy = 0.0;
  std::vector<StepRecord> steps;
};

using StepCallback =
    std::function<void(int step, const StepRecord&, const State&)>;

// Runs the problem's full time grid starting from its initial data. The
// callback, when given, sees every accepted state in order.
TimeLoopResult run_transient(const DiscreteProblem& problem,
                             const NewtonOptions& options = {},
                             const StepCallback& callback = {});

}  // namespace pnpfv
