#include "pnpfv/steady.hpp"

#include <cmath>
#include <vector>

#include "pnpfv/assembly.hpp"
#include "pnpfv/compensated.hpp"
#include "pnpfv/diagnostics.hpp"
#include "pnpfv/errors.hpp"
#include "pnpfv/solver.hpp"

namespace pnpfv {

namespace {

// Shifted exponentials e_i = exp(xi_i - z_i y - shift) with
// e0 = exp(-shift), so that every entry is at most one.
struct ShiftedExp {
  Eigen::VectorXd e;
  double e0;
  double denom;
  double shift;
};

ShiftedExp shifted_exponentials(double y, const Eigen::VectorXd& xi,
                                const Eigen::VectorXd& z) {
  ShiftedExp s;
  const Eigen::Index I = xi.size();
  Eigen::VectorXd a = xi - z * y;
  s.shift = std::max(0.0, a.maxCoeff());
  s.e.resize(I);
  for (Eigen::Index i = 0; i < I; ++i) s.e[i] = std::exp(a[i] - s.shift);
  s.e0 = std::exp(-s.shift);
  s.denom = s.e0 + s.e.sum();
  return s;
}

}  // namespace

Eigen::VectorXd v_fractions(double y, const Eigen::VectorXd& xi,
                            const Eigen::VectorXd& z) {
  if (xi.size() != z.size())
    throw DomainError("multiplier and charge sizes differ");
  ShiftedExp s = shifted_exponentials(y, xi, z);
  return s.e / s.denom;
}

double charge_response(double y, const Eigen::VectorXd& xi,
                       const Eigen::VectorXd& z) {
  return -z.dot(v_fractions(y, xi, z));
}

double charge_response_slope(double y, const Eigen::VectorXd& xi,
                             const Eigen::VectorXd& z) {
  Eigen::VectorXd v = v_fractions(y, xi, z);
  double mean = z.dot(v);
  return z.cwiseProduct(z).dot(v) - mean * mean;
}

PsiEval psi_value_grad(const DiscreteProblem& problem,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& xi) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  if (y.size() != N || xi.size() != I)
    throw DomainError("argument sizes do not match the problem");

  PsiEval out;
  out.grad = Eigen::VectorXd::Zero(N + I);

  CompensatedSum value;
  for (std::size_t s = 0; s < problem.mesh.faces.size(); ++s) {
    const Face& face = problem.mesh.faces[s];
    double mirror = 0.0;
    switch (problem.face_kind[s]) {
      case FaceKind::Interior:
        mirror = y[face.L];
        break;
      case FaceKind::DirichletBoundary:
        mirror = problem.phi_dirichlet[s];
        break;
      case FaceKind::NeumannBoundary:
        continue;
    }
    double jump = y[face.K] - mirror;
    value.add(0.5 * problem.lambda_sq * face.a_sigma * jump * jump);
    double force = problem.lambda_sq * face.a_sigma * jump;
    out.grad[face.K] += force;
    if (problem.face_kind[s] == FaceKind::Interior) out.grad[face.L] -= force;
  }

  for (int k = 0; k < N; ++k) {
    double m = problem.mesh.cells[k].measure;
    ShiftedExp s = shifted_exponentials(y[k], xi, problem.z);
    value.add(m * (s.shift + std::log(s.denom)));
    value.add(-m * problem.f[k] * y[k]);
    Eigen::VectorXd v = s.e / s.denom;
    out.grad[k] += m * (-problem.z.dot(v) - problem.f[k]);
    for (int i = 0; i < I; ++i) {
      value.add(-m * xi[i] * problem.initial(i, k));
      out.grad[N + i] += m * (v[i] - problem.initial(i, k));
    }
  }
  out.value = value.value();
  return out;
}

SteadySolution solve_steady(const DiscreteProblem& problem,
                            const Eigen::VectorXd& y0,
                            const Eigen::VectorXd& xi0) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  if (y0.size() != N || xi0.size() != I)
    throw DomainError("initial guess sizes do not match the problem");

  const double tol = 1e-12;
  const int max_iters = 200;

  Eigen::VectorXd y = y0;
  Eigen::VectorXd xi = xi0;
  PsiEval eval = psi_value_grad(problem, y, xi);

  SteadySolution sol;
  sol.iterations = 0;
  while (eval.grad.lpNorm<Eigen::Infinity>() > tol) {
    if (sol.iterations >= max_iters)
      throw SolverError("steady solve did not converge, gradient " +
                        format_double(eval.grad.lpNorm<Eigen::Infinity>()));

    // Hessian: the potential block couples through the mesh, the
    // multiplier block through per-cell covariances of the fractions.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * problem.mesh.faces.size() + N * (2 * I + 1) + I * I);
    for (std::size_t s = 0; s < problem.mesh.faces.size(); ++s) {
      const Face& face = problem.mesh.faces[s];
      double w = problem.lambda_sq * face.a_sigma;
      switch (problem.face_kind[s]) {
        case FaceKind::Interior:
          trips.emplace_back(face.K, face.K, w);
          trips.emplace_back(face.L, face.L, w);
          trips.emplace_back(face.K, face.L, -w);
          trips.emplace_back(face.L, face.K, -w);
          break;
        case FaceKind::DirichletBoundary:
          trips.emplace_back(face.K, face.K, w);
          break;
        case FaceKind::NeumannBoundary:
          break;
      }
    }
    Eigen::MatrixXd xi_block = Eigen::MatrixXd::Zero(I, I);
    for (int k = 0; k < N; ++k) {
      double m = problem.mesh.cells[k].measure;
      Eigen::VectorXd v = v_fractions(y[k], xi, problem.z);
      double r = -problem.z.dot(v);
      trips.emplace_back(k, k, m * charge_response_slope(y[k], xi, problem.z));
      for (int i = 0; i < I; ++i) {
        double cross = -m * v[i] * (problem.z[i] + r);
        trips.emplace_back(k, N + i, cross);
        trips.emplace_back(N + i, k, cross);
        for (int j = 0; j < I; ++j)
          xi_block(i, j) += m * v[i] * ((i == j ? 1.0 : 0.0) - v[j]);
      }
    }
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < I; ++j)
        trips.emplace_back(N + i, N + j, xi_block(i, j));

    SparseOperator hess(N + I, N + I);
    hess.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd delta = linear_solve(hess, -eval.grad);

    double slope = eval.grad.dot(delta);
    double alpha = 1.0;
    while (true) {
      PsiEval trial = psi_value_grad(problem, y + alpha * delta.head(N),
                                     xi + alpha * delta.tail(I));
      if (std::isfinite(trial.value) &&
          trial.value <= eval.value + 1e-4 * alpha * slope) {
        y += alpha * delta.head(N);
        xi += alpha * delta.tail(I);
        eval = std::move(trial);
        break;
      }
      alpha *= 0.5;
      if (alpha < std::ldexp(1.0, -40)) {
        if (eval.grad.lpNorm<Eigen::Infinity>() <= 1e-10) goto done;
        throw SolverError("steady line search stalled at gradient " +
                          format_double(eval.grad.lpNorm<Eigen::Infinity>()));
      }
    }
    ++sol.iterations;
  }
done:
  sol.phi = std::move(y);
  sol.xi = std::move(xi);
  sol.u.resize(I, N);
  for (int k = 0; k < N; ++k)
    sol.u.col(k) = v_fractions(sol.phi[k], sol.xi, problem.z);
  sol.psi_value = eval.value;
  sol.kkt_inf = eval.grad.lpNorm<Eigen::Infinity>();
  return sol;
}

SteadySolution solve_steady(const DiscreteProblem& problem) {
  const int I = problem.n_species();
  const int N = problem.n_cells();

  auto [poisson, rhs] = assemble_poisson(problem, problem.initial);
  Eigen::VectorXd y0 = linear_solve(poisson, rhs);

  Eigen::VectorXd masses(I);
  for (int i = 0; i < I; ++i) {
    CompensatedSum sum;
    for (int k = 0; k < N; ++k)
      sum.add(problem.mesh.cells[k].measure * problem.initial(i, k));
    masses[i] = sum.value();
  }
  CompensatedSum solvent;
  for (int k = 0; k < N; ++k)
    solvent.add(problem.mesh.cells[k].measure * problem.initial_solvent()[k]);

  Eigen::VectorXd xi0(I);
  for (int i = 0; i < I; ++i) xi0[i] = std::log(masses[i] / solvent.value());
  return solve_steady(problem, y0, xi0);
}

}  // namespace pnpfv
