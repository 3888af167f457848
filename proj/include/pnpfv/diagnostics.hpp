#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pnpfv/assembly.hpp"
#include "pnpfv/problem.hpp"

namespace pnpfv {

// Mixing entropy u_0 log u_0 + sum_i u_i log u_i of a single volume
// fraction vector (species entries only, the solvent is implied). Zero
// entries contribute 0 log 0 = 0; negative entries or an oversaturated
// vector are rejected.
double mixing_entropy(const Eigen::VectorXd& u);

struct EnergyReport {
  double entropy = 0.0;
  double potential = 0.0;
  double boundary = 0.0;
  double total = 0.0;
  Eigen::VectorXd masses;
};

// Discrete free energy of a state: mixing entropy plus the quadratic
// potential energy over all faces (using mirror values on the boundary)
// plus the Dirichlet boundary correction. Also reports per-species masses.
EnergyReport free_energy(const DiscreteProblem& problem, const State& state);

// Discrete dissipation: sum over species and interior faces of the flux
// times the jump of mu_i = log(u_i/u_0) + z_i phi. Every summand is
// nonnegative in exact arithmetic. Requires strictly positive fractions.
double dissipation(const DiscreteProblem& problem, const State& state);

// Averages fine-grid fractions over the cells of a coarser interval mesh.
// Both meshes must be 1D with the fine cell count a multiple of the
// coarse one.
Eigen::MatrixXd project_nested(const Eigen::MatrixXd& fine_u,
                               const AdmissibleMesh& fine,
                               const AdmissibleMesh& coarse);

// Relative space-time L1 distance between two fraction series living on
// the same mesh, weighted by cell measures and step sizes. Entry n of a
// series is the I x N fraction matrix at the end of step n. The reference
// series alone provides the normalization.
double relative_l1_spacetime_error(
    const std::vector<double>& taus, const AdmissibleMesh& mesh,
    const std::vector<Eigen::MatrixXd>& series,
    const std::vector<Eigen::MatrixXd>& reference);

// Shortest decimal representation that parses back to the same binary64.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace pnpfv
