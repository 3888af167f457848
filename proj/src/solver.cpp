#include "pnpfv/solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pnpfv/compensated.hpp"
#include "pnpfv/diagnostics.hpp"
#include "pnpfv/errors.hpp"
#include "pnpfv/kernels.hpp"

namespace pnpfv {

Eigen::VectorXd linear_solve(const SparseOperator& A,
                             const Eigen::VectorXd& b) {
  Eigen::SparseLU<SparseOperator> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SolverError("sparse factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  x += lu.solve(Eigen::VectorXd(b - A * x));
  double residual = (b - A * x).lpNorm<Eigen::Infinity>();
  // Normwise backward error: the refined solve must sit at rounding level
  // relative to |A| |x| + |b|, which stays meaningful for operators with
  // dense, many-term rows.
  double row_norm =
      Eigen::VectorXd(A.cwiseAbs() * Eigen::VectorXd::Ones(A.cols()))
          .maxCoeff();
  double scale =
      1.0 + row_norm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-12 * scale))
    throw SolverError("linear solve residual " + format_double(residual) +
                      " is above rounding level");
  return x;
}

namespace {

double min_fraction(const State& s) {
  double m = s.u.minCoeff();
  return std::min(m, s.solvent().minCoeff());
}

// Exact per-species conservation defect sum_K m_K (u_new - u_old).
Eigen::VectorXd mass_defects(const DiscreteProblem& problem, const State& s,
                             const State& old) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  Eigen::VectorXd d(I);
  for (int i = 0; i < I; ++i) {
    CompensatedSum sum;
    for (int k = 0; k < N; ++k)
      sum.add(problem.mesh.cells[k].measure * (s.u(i, k) - old.u(i, k)));
    d[i] = sum.value();
  }
  return d;
}

State apply_update(const DiscreteProblem& problem, const State& s,
                   const Eigen::VectorXd& delta, double alpha) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  State t = s;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < I; ++i)
      t.u(i, k) += alpha * delta[species_index(I, i, k)];
    t.phi[k] += alpha * delta[potential_index(I, N, k)];
  }
  return t;
}

// Rewrites one nonpositive fraction from its own cell equation with the
// neighbors frozen. All ingredients are nonnegative, so the result is too,
// and it is strictly positive as soon as the old value or any inflow is.
void repair_entry(const DiscreteProblem& problem, State& s,
                  Eigen::VectorXd& u0, const State& old, double tau, int i,
                  int k) {
  const Cell& cell = problem.mesh.cells[k];
  double num = cell.measure * std::max(old.u(i, k), 0.0);
  double den = cell.measure;
  for (int f : cell.faces) {
    if (problem.face_kind[f] != FaceKind::Interior) continue;
    const Face& face = problem.mesh.faces[f];
    int other = (face.K == k) ? face.L : face.K;
    double y = problem.z[i] * (s.phi[other] - s.phi[k]);
    double coeff = tau * face.a_sigma * problem.D[i];
    den += coeff * std::max(u0[other], 0.0) * kernel_eval(problem.kernel, y);
    num += coeff * std::max(s.u(i, other), 0.0) * std::max(u0[k], 0.0) *
           kernel_eval(problem.kernel, -y);
  }
  double fresh = num / den;
  u0[k] -= fresh - s.u(i, k);
  s.u(i, k) = fresh;
}

// One forward plus one backward Gauss-Seidel pass over all nonpositive
// fractions. Returns the number of entries rewritten.
int repair_pass(const DiscreteProblem& problem, State& s, const State& old,
                double tau) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  Eigen::VectorXd u0 = s.solvent();
  int touched = 0;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < I; ++i) {
      if (s.u(i, k) <= 0.0) {
        repair_entry(problem, s, u0, old, tau, i, k);
        ++touched;
      }
    }
  }
  for (int k = N - 1; k >= 0; --k) {
    for (int i = 0; i < I; ++i) {
      if (s.u(i, k) <= 0.0) {
        repair_entry(problem, s, u0, old, tau, i, k);
        ++touched;
      }
    }
  }
  return touched;
}

}  // namespace

std::pair<State, NewtonReport> advance_step(const DiscreteProblem& problem,
                                            const State& state_old, double tau,
                                            const NewtonOptions& options) {
  const double mass_scale = std::max(1.0, problem.mesh.total_measure);
  NewtonReport report;

  State s;
  s.u = state_old.u;
  auto [poisson, rhs] = assemble_poisson(problem, s.u);
  s.phi = linear_solve(poisson, rhs);

  Eigen::VectorXd res = transient_residual(problem, s, state_old, tau);
  double rn = res.lpNorm<Eigen::Infinity>();
  // Sup norm of the latest applied correction. A step counts as converged
  // only once the correction itself has settled below tol_inf, not merely
  // the residual; before any update the guess may pass on the residual
  // alone (it can only be converged if nothing moves).
  double step_inf = std::numeric_limits<double>::infinity();

  while (true) {
    if (rn <= options.tol_inf &&
        (report.iterations == 0 || step_inf <= options.tol_inf)) {
      if (min_fraction(s) <= 0.0 &&
          report.positivity_sweeps < options.max_positivity_sweeps) {
        repair_pass(problem, s, state_old, tau);
        ++report.positivity_sweeps;
        res = transient_residual(problem, s, state_old, tau);
        rn = res.lpNorm<Eigen::Infinity>();
        continue;
      }
      double defect =
          mass_defects(problem, s, state_old).cwiseAbs().maxCoeff();
      if (min_fraction(s) > 0.0 && defect <= options.mass_tol * mass_scale) {
        report.residual_inf = rn;
        report.mass_defect = defect;
        return {std::move(s), report};
      }
    }

    if (report.iterations >= options.max_iters) {
      if (rn > options.tol_inf)
        throw SolverError("no convergence in " +
                          std::to_string(options.max_iters) +
                          " iterations, residual " + format_double(rn));
      if (step_inf > options.tol_inf)
        throw SolverError("Newton correction stayed above tolerance");
      if (min_fraction(s) <= 0.0)
        throw SolverError("positivity could not be restored");
      throw SolverError("mass conservation defect stayed above tolerance");
    }

    SparseOperator jac = transient_jacobian(problem, s, state_old, tau);
    Eigen::VectorXd delta = linear_solve(jac, -res);

    double alpha = 1.0;
    State trial;
    Eigen::VectorXd trial_res;
    double trial_rn;
    while (true) {
      trial = apply_update(problem, s, delta, alpha);
      trial_res = transient_residual(problem, trial, state_old, tau);
      trial_rn = trial_res.lpNorm<Eigen::Infinity>();
      // Demand strict decrease while converging; once the residual sits at
      // the rounding floor any update that keeps it converged is fine.
      if (std::isfinite(trial_rn) &&
          (trial_rn < rn || trial_rn <= options.tol_inf))
        break;
      alpha *= 0.5;
      if (alpha < std::ldexp(1.0, -30))
        throw SolverError("line search stalled at residual " +
                          format_double(rn));
    }
    s = std::move(trial);
    res = std::move(trial_res);
    rn = trial_rn;
    step_inf = alpha * delta.lpNorm<Eigen::Infinity>();
    ++report.iterations;
  }
}

TimeLoopResult run_transient(const DiscreteProblem& problem,
                             const NewtonOptions& options,
                             const StepCallback& callback) {
  TimeLoopResult result;

  State s;
  s.u = problem.initial;
  auto [poisson, rhs] = assemble_poisson(problem, s.u);
  s.phi = linear_solve(poisson, rhs);
  result.initial_state = s;
  result.initial_energy = free_energy(problem, s).total;

  CompensatedSum time;
  result.steps.reserve(problem.taus.size());
  for (std::size_t n = 0; n < problem.taus.size(); ++n) {
    double tau = problem.taus[n];
    auto [s_new, newton] = advance_step(problem, s, tau, options);
    time.add(tau);

    StepRecord record;
    record.time = time.value();
    record.tau = tau;
    record.newton_iters = newton.iterations;
    EnergyReport energy = free_energy(problem, s_new);
    record.energy = energy.total;
    record.masses = std::move(energy.masses);
    record.dissipation = dissipation(problem, s_new);
    record.min_fraction = min_fraction(s_new);
    result.steps.push_back(record);
    if (callback) callback(static_cast<int>(n), result.steps.back(), s_new);
    s = std::move(s_new);
  }
  result.final_state = std::move(s);
  return result;
}

}  // namespace pnpfv
