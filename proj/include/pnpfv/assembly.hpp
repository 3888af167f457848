#pragma once

#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pnpfv/problem.hpp"

namespace pnpfv {

// One time level: species fractions u_{i,K} (rows are species 1..I) and the
// potential. The solvent fraction is derived, never stored. Newton iterates
// may leave the physical range; converged states satisfy 0 < u < 1.
struct State {
  Eigen::MatrixXd u;    // I x N
  Eigen::VectorXd phi;  // N

  Eigen::VectorXd solvent() const {
    return Eigen::VectorXd::Ones(u.cols()) - u.colwise().sum().transpose();
  }
};

using SparseOperator = Eigen::SparseMatrix<double>;

// Unknown ordering: cell-major species blocks [u_{1,K}..u_{I,K}], then all
// potentials.
inline int species_index(int I, int i, int K) { return K * I + i; }
inline int potential_index(int I, int N, int K) { return N * I + K; }
inline int n_unknowns(int I, int N) { return N * (I + 1); }

// Linear system for the potential at fixed fractions: row K encodes
// lambda^2 sum_sigma a_sigma (phi_K - phi_Ksigma) = m_K (f_K + sum_i z_i u_iK)
// with Dirichlet data moved to the right-hand side.
std::pair<SparseOperator, Eigen::VectorXd> assemble_poisson(
    const DiscreteProblem& problem, const Eigen::MatrixXd& fractions);

// Coupled backward-Euler residual: species rows
// (u_new - u_old) m_K + tau sum_sigma F_iKsigma with truncated fluxes at
// state_new; potential rows are the Poisson residual at state_new.
Eigen::VectorXd transient_residual(const DiscreteProblem& problem,
                                   const State& state_new,
                                   const State& state_old, double tau);

// Exact Jacobian of transient_residual with respect to state_new, with the
// truncation subgradient taken as 1 at exactly zero.
SparseOperator transient_jacobian(const DiscreteProblem& problem,
                                  const State& state_new,
                                  const State& state_old, double tau);

}  // namespace pnpfv
