#include "pnpfv/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "pnpfv/compensated.hpp"
#include "pnpfv/errors.hpp"
#include "pnpfv/kernels.hpp"

namespace pnpfv {

namespace {

double xlogx(double x) {
  if (x < 0.0) throw DomainError("entropy argument is negative");
  if (x == 0.0) return 0.0;
  return x * std::log(x);
}

}  // namespace

double mixing_entropy(const Eigen::VectorXd& u) {
  CompensatedSum fractions;
  for (Eigen::Index i = 0; i < u.size(); ++i) fractions.add(u[i]);
  double u0 = 1.0 - fractions.value();
  if (u0 < 0.0) throw DomainError("fractions exceed the size constraint");
  double h = xlogx(u0);
  for (Eigen::Index i = 0; i < u.size(); ++i) h += xlogx(u[i]);
  return h;
}

EnergyReport free_energy(const DiscreteProblem& problem, const State& state) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  EnergyReport report;

  CompensatedSum entropy;
  std::vector<CompensatedSum> masses(I);
  for (int k = 0; k < N; ++k) {
    double m = problem.mesh.cells[k].measure;
    entropy.add(m * mixing_entropy(state.u.col(k)));
    for (int i = 0; i < I; ++i) masses[i].add(m * state.u(i, k));
  }

  CompensatedSum potential;
  CompensatedSum boundary;
  for (std::size_t s = 0; s < problem.mesh.faces.size(); ++s) {
    const Face& face = problem.mesh.faces[s];
    switch (problem.face_kind[s]) {
      case FaceKind::Interior: {
        double jump = state.phi[face.K] - state.phi[face.L];
        potential.add(face.a_sigma * jump * jump);
        break;
      }
      case FaceKind::DirichletBoundary: {
        double phi_d = problem.phi_dirichlet[s];
        double jump = state.phi[face.K] - phi_d;
        potential.add(face.a_sigma * jump * jump);
        boundary.add(face.a_sigma * phi_d * (phi_d - state.phi[face.K]));
        break;
      }
      case FaceKind::NeumannBoundary:
        break;
    }
  }

  report.entropy = entropy.value();
  report.potential = 0.5 * problem.lambda_sq * potential.value();
  report.boundary = -problem.lambda_sq * boundary.value();
  report.total = report.entropy + report.potential + report.boundary;
  report.masses.resize(I);
  for (int i = 0; i < I; ++i) report.masses[i] = masses[i].value();
  return report;
}

double dissipation(const DiscreteProblem& problem, const State& state) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  Eigen::VectorXd u0 = state.solvent();
  for (int k = 0; k < N; ++k) {
    if (u0[k] <= 0.0)
      throw DomainError("dissipation requires a strictly positive solvent");
    for (int i = 0; i < I; ++i) {
      if (state.u(i, k) <= 0.0)
        throw DomainError("dissipation requires strictly positive fractions");
    }
  }

  // mu_{i,K} = log(u_{i,K}/u_{0,K}) + z_i phi_K
  Eigen::MatrixXd mu(I, N);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < I; ++i) {
      mu(i, k) = std::log(state.u(i, k) / u0[k]) +
                 problem.z[i] * state.phi[k];
    }
  }

  CompensatedSum total;
  for (std::size_t s = 0; s < problem.mesh.faces.size(); ++s) {
    if (problem.face_kind[s] != FaceKind::Interior) continue;
    const Face& face = problem.mesh.faces[s];
    for (int i = 0; i < I; ++i) {
      double flux = face_flux_truncated(
          problem.kernel, face.a_sigma, problem.D[i], problem.z[i],
          state.u(i, face.K), u0[face.K], state.u(i, face.L), u0[face.L],
          state.phi[face.K], state.phi[face.L]);
      total.add(flux * (mu(i, face.K) - mu(i, face.L)));
    }
  }
  return total.value();
}

Eigen::MatrixXd project_nested(const Eigen::MatrixXd& fine_u,
                               const AdmissibleMesh& fine,
                               const AdmissibleMesh& coarse) {
  if (fine.dim != 1 || coarse.dim != 1)
    throw MeshError("nested projection is only defined for interval meshes");
  const auto nf = fine.cells.size();
  const auto nc = coarse.cells.size();
  if (nc == 0 || nf % nc != 0)
    throw MeshError("fine cell count is not a multiple of the coarse one");
  if (fine_u.cols() != static_cast<Eigen::Index>(nf))
    throw MeshError("fraction matrix does not match the fine mesh");

  const Eigen::Index I = fine_u.rows();
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(I, static_cast<Eigen::Index>(nc));
  Eigen::VectorXd den = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc));
  for (std::size_t k = 0; k < nf; ++k) {
    double center = fine.cells[k].center[0];
    auto idx = static_cast<std::ptrdiff_t>(center / coarse.h);
    if (idx < 0) idx = 0;
    if (idx >= static_cast<std::ptrdiff_t>(nc))
      idx = static_cast<std::ptrdiff_t>(nc) - 1;
    double m = fine.cells[k].measure;
    num.col(idx) += m * fine_u.col(static_cast<Eigen::Index>(k));
    den[idx] += m;
  }
  for (std::size_t k = 0; k < nc; ++k) {
    if (den[static_cast<Eigen::Index>(k)] <= 0.0)
      throw MeshError("coarse cell received no fine cells");
  }
  return num * den.cwiseInverse().asDiagonal();
}

double relative_l1_spacetime_error(
    const std::vector<double>& taus, const AdmissibleMesh& mesh,
    const std::vector<Eigen::MatrixXd>& series,
    const std::vector<Eigen::MatrixXd>& reference) {
  if (series.size() != taus.size() || reference.size() != taus.size())
    throw DomainError("series lengths do not match the time grid");

  const auto N = mesh.cells.size();
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t n = 0; n < taus.size(); ++n) {
    const Eigen::MatrixXd& a = series[n];
    const Eigen::MatrixXd& b = reference[n];
    if (a.rows() != b.rows() || a.cols() != b.cols() ||
        a.cols() != static_cast<Eigen::Index>(N))
      throw DomainError("series entries do not match the mesh");
    for (std::size_t k = 0; k < N; ++k) {
      double m = taus[n] * mesh.cells[k].measure;
      auto col = static_cast<Eigen::Index>(k);
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        num.add(m * std::abs(a(i, col) - b(i, col)));
        den.add(m * std::abs(b(i, col)));
      }
    }
  }
  if (den.value() <= 0.0)
    throw DomainError("reference series has zero mass");
  return num.value() / den.value();
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw IoError("number formatting failed");
  return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out.good()) throw IoError("cannot open " + path + " for writing");
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c > 0) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw IoError("csv row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  out.flush();
  if (!out.good()) throw IoError("failed writing " + path);
}

}  // namespace pnpfv
