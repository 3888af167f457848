#include "pnpfv/assembly.hpp"

#include <vector>

#include "pnpfv/kernels.hpp"

namespace pnpfv {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// Truncation subgradient: active branch at exactly zero.
double trunc_slope(double x) { return x >= 0.0 ? 1.0 : 0.0; }

void require_dirichlet(const DiscreteProblem& problem) {
  for (FaceKind kind : problem.face_kind) {
    if (kind == FaceKind::DirichletBoundary) return;
  }
  throw SolverError(
      "singular Poisson system: the problem has no Dirichlet face");
}

}  // namespace

std::pair<SparseOperator, Eigen::VectorXd> assemble_poisson(
    const DiscreteProblem& problem, const Eigen::MatrixXd& fractions) {
  require_dirichlet(problem);
  const AdmissibleMesh& mesh = problem.mesh;
  const int N = mesh.n_cells();
  const int I = problem.n_species();
  const double l2 = problem.lambda_sq;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(3 * mesh.n_faces());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);

  for (int j = 0; j < mesh.n_faces(); ++j) {
    const Face& face = mesh.faces[j];
    switch (problem.face_kind[j]) {
      case FaceKind::Interior:
        triplets.emplace_back(face.K, face.K, l2 * face.a_sigma);
        triplets.emplace_back(face.L, face.L, l2 * face.a_sigma);
        triplets.emplace_back(face.K, face.L, -l2 * face.a_sigma);
        triplets.emplace_back(face.L, face.K, -l2 * face.a_sigma);
        break;
      case FaceKind::DirichletBoundary:
        triplets.emplace_back(face.K, face.K, l2 * face.a_sigma);
        rhs[face.K] += l2 * face.a_sigma * problem.phi_dirichlet[j];
        break;
      case FaceKind::NeumannBoundary:
        break;  // mirror value phi_K: zero contribution
    }
  }

  for (int k = 0; k < N; ++k) {
    double charge = problem.f[k];
    for (int i = 0; i < I; ++i) charge += problem.z[i] * fractions(i, k);
    rhs[k] += mesh.cells[k].measure * charge;
  }

  SparseOperator op(N, N);
  op.setFromTriplets(triplets.begin(), triplets.end());
  return {std::move(op), std::move(rhs)};
}

Eigen::VectorXd transient_residual(const DiscreteProblem& problem,
                                   const State& state_new,
                                   const State& state_old, double tau) {
  require_dirichlet(problem);
  const AdmissibleMesh& mesh = problem.mesh;
  const int N = mesh.n_cells();
  const int I = problem.n_species();
  const double l2 = problem.lambda_sq;

  Eigen::VectorXd res = Eigen::VectorXd::Zero(n_unknowns(I, N));
  const Eigen::VectorXd u0 = state_new.solvent();

  // Time terms and Poisson cell terms.
  for (int k = 0; k < N; ++k) {
    const double m = mesh.cells[k].measure;
    double charge = problem.f[k];
    for (int i = 0; i < I; ++i) {
      res[species_index(I, i, k)] =
          m * (state_new.u(i, k) - state_old.u(i, k));
      charge += problem.z[i] * state_new.u(i, k);
    }
    res[potential_index(I, N, k)] = -m * charge;
  }

  // Face sweeps. Species fluxes exist only across interior faces; the
  // Poisson row sees interior and Dirichlet faces.
  for (int j = 0; j < mesh.n_faces(); ++j) {
    const Face& face = mesh.faces[j];
    const int K = face.K;
    switch (problem.face_kind[j]) {
      case FaceKind::Interior: {
        const int L = face.L;
        for (int i = 0; i < I; ++i) {
          double flux = face_flux_truncated(
              problem.kernel, face.a_sigma, problem.D[i], problem.z[i],
              state_new.u(i, K), u0[K], state_new.u(i, L), u0[L],
              state_new.phi[K], state_new.phi[L]);
          double t = tau * flux;
          res[species_index(I, i, K)] += t;
          res[species_index(I, i, L)] -= t;
        }
        double d = l2 * face.a_sigma * (state_new.phi[K] - state_new.phi[L]);
        res[potential_index(I, N, K)] += d;
        res[potential_index(I, N, L)] -= d;
        break;
      }
      case FaceKind::DirichletBoundary:
        res[potential_index(I, N, K)] +=
            l2 * face.a_sigma * (state_new.phi[K] - problem.phi_dirichlet[j]);
        break;
      case FaceKind::NeumannBoundary:
        break;
    }
  }

  return res;
}

SparseOperator transient_jacobian(const DiscreteProblem& problem,
                                  const State& state_new,
                                  const State& /*state_old*/, double tau) {
  require_dirichlet(problem);
  const AdmissibleMesh& mesh = problem.mesh;
  const int N = mesh.n_cells();
  const int I = problem.n_species();
  const double l2 = problem.lambda_sq;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve((4 * I * (I + 2) + 4) * mesh.n_faces() + (I + 1) * N);
  const Eigen::VectorXd u0 = state_new.solvent();

  for (int k = 0; k < N; ++k) {
    const double m = mesh.cells[k].measure;
    for (int i = 0; i < I; ++i) {
      triplets.emplace_back(species_index(I, i, k), species_index(I, i, k),
                            m);
      triplets.emplace_back(potential_index(I, N, k), species_index(I, i, k),
                            -m * problem.z[i]);
    }
  }

  for (int j = 0; j < mesh.n_faces(); ++j) {
    const Face& face = mesh.faces[j];
    const int K = face.K;
    const int pK = potential_index(I, N, K);
    switch (problem.face_kind[j]) {
      case FaceKind::Interior: {
        const int L = face.L;
        const int pL = potential_index(I, N, L);
        triplets.emplace_back(pK, pK, l2 * face.a_sigma);
        triplets.emplace_back(pL, pL, l2 * face.a_sigma);
        triplets.emplace_back(pK, pL, -l2 * face.a_sigma);
        triplets.emplace_back(pL, pK, -l2 * face.a_sigma);

        const double u0K = positive_part(u0[K]);
        const double u0L = positive_part(u0[L]);
        const double s0K = trunc_slope(u0[K]);
        const double s0L = trunc_slope(u0[L]);

        for (int i = 0; i < I; ++i) {
          const double zi = problem.z[i];
          const double aD = face.a_sigma * problem.D[i];
          const double y = zi * (state_new.phi[L] - state_new.phi[K]);
          const double Bp = kernel_eval(problem.kernel, y);
          const double Bm = kernel_eval(problem.kernel, -y);
          const double dBp = kernel_deriv(problem.kernel, y);
          const double dBm = kernel_deriv(problem.kernel, -y);
          const double uiK = positive_part(state_new.u(i, K));
          const double uiL = positive_part(state_new.u(i, L));
          const double siK = trunc_slope(state_new.u(i, K));
          const double siL = trunc_slope(state_new.u(i, L));

          const int rK = species_index(I, i, K);
          const int rL = species_index(I, i, L);

          // d flux / d u_iK and d u_iL (direct factors).
          const double d_uiK = aD * siK * u0L * Bp;
          const double d_uiL = -aD * siL * u0K * Bm;
          // d flux / d u_jK and d u_jL through the solvent factors,
          // the same for every species j.
          const double d_solK = aD * uiL * s0K * Bm;
          const double d_solL = -aD * uiK * s0L * Bp;
          // d flux / d phi_K; the phi_L derivative is its negative.
          const double d_phiK = -aD * zi * (uiK * u0L * dBp + uiL * u0K * dBm);

          for (int jj = 0; jj < I; ++jj) {
            double cK = tau * ((jj == i) ? d_uiK + d_solK : d_solK);
            double cL = tau * ((jj == i) ? d_uiL + d_solL : d_solL);
            const int colK = species_index(I, jj, K);
            const int colL = species_index(I, jj, L);
            triplets.emplace_back(rK, colK, cK);
            triplets.emplace_back(rK, colL, cL);
            triplets.emplace_back(rL, colK, -cK);
            triplets.emplace_back(rL, colL, -cL);
          }
          triplets.emplace_back(rK, pK, tau * d_phiK);
          triplets.emplace_back(rK, pL, -tau * d_phiK);
          triplets.emplace_back(rL, pK, -tau * d_phiK);
          triplets.emplace_back(rL, pL, tau * d_phiK);
        }
        break;
      }
      case FaceKind::DirichletBoundary:
        triplets.emplace_back(pK, pK, l2 * face.a_sigma);
        break;
      case FaceKind::NeumannBoundary:
        break;
    }
  }

  SparseOperator jac(n_unknowns(I, N), n_unknowns(I, N));
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

}  // namespace pnpfv
