#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnpfv/errors.hpp"

namespace pnpfv {

enum class FaceKind { Interior, DirichletBoundary, NeumannBoundary };

struct Cell {
  double measure = 0.0;                 // m_K
  std::array<double, 2> center{};      // x_K: midpoint (1D) or circumcenter
  std::array<double, 2> centroid{};    // barycenter, used for exact averaging
  double diameter = 0.0;
  std::vector<int> faces;              // E_K
  // Cell geometry as an ordered point list: the two endpoints in 1D, the
  // counterclockwise triangle in 2D. Needed for exact integration of
  // indicator data.
  std::vector<std::array<double, 2>> vertices;
};

struct Face {
  double measure = 0.0;                // m_sigma (1 in 1D, edge length in 2D)
  double d_sigma = 0.0;                // center separation along the normal
  double d_K = 0.0;                    // signed per-side distances,
  double d_L = 0.0;                    // d_sigma = d_K + d_L on interior faces
  double a_sigma = 0.0;                // transmissivity m_sigma / d_sigma
  FaceKind kind = FaceKind::Interior;
  int K = -1;                          // owner cell
  int L = -1;                          // neighbor cell, -1 on the boundary
  std::array<double, 2> normal{};      // unit, outward from K
  std::array<double, 2> midpoint{};
};

struct AdmissibleMesh {
  int dim = 1;
  std::vector<Cell> cells;
  std::vector<Face> faces;
  double h = 0.0;                      // max cell diameter
  double zeta = 0.0;                   // regularity
  double total_measure = 0.0;
  double expected_measure = -1.0;      // domain measure when known, else -1
  double theta_tol = 1e-8;             // orthogonality tolerance (radians)

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  double eps_geom() const { return 1e-12 * h; }
};

// Uniform 1D mesh of (0, domain_length) with n_cells cells. Both endpoints
// become boundary faces, tagged Dirichlet by default; the problem layer can
// retag them through its region predicate.
AdmissibleMesh build_interval_mesh(double domain_length, int n_cells);

// Parses a strict subset of the Gmsh MSH 2.2 ASCII format (sections
// $MeshFormat, $Nodes, $Elements; 3-node triangles). Cell centers are the
// triangle circumcenters; boundary faces are tagged Neumann by default.
// Point and line elements are skipped; any other element type is rejected.
AdmissibleMesh import_simplicial_mesh(const std::string& msh_text);

struct ValidationReport {
  double max_orthogonality_deviation = 0.0;  // radians, worst face
  double min_d_sigma = 0.0;
  double min_side_distance = 0.0;            // signed per-side minimum
  double zeta = 0.0;
  double h = 0.0;
  double measure_relative_defect = 0.0;      // vs expected, 0 when unknown
  bool passed = false;
};

ValidationReport validate_admissibility(const AdmissibleMesh& mesh);

// Native JSON export: arrays `cells` (measure, center, faces) and `faces`
// (measure, d_sigma, kind, neighbors).
nlohmann::json mesh_to_json(const AdmissibleMesh& mesh);

}  // namespace pnpfv
