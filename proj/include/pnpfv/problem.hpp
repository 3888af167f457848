#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pnpfv/kernels.hpp"
#include "pnpfv/mesh.hpp"

namespace pnpfv {

// Scalar data restricted to shapes whose cell averages are exact: an affine
// part plus a sum of scaled axis-aligned box indicators.
struct ScalarField {
  double constant = 0.0;
  std::array<double, 2> gradient{0.0, 0.0};
  struct Box {
    std::array<double, 4> bounds{};  // xmin, xmax, ymin, ymax
    double value = 0.0;
  };
  std::vector<Box> boxes;

  double value_at(const std::array<double, 2>& x, int dim) const;
  bool is_affine() const { return boxes.empty(); }
};

// Exact mean of the field over the cell: the affine part evaluates at the
// centroid, each box contributes value * |K intersect box| / |K|.
double cell_average(const ScalarField& field, const Cell& cell, int dim);

struct SpeciesSpec {
  std::string name;
  double D = 1.0;
  double z = 0.0;
  ScalarField initial;
};

struct ProblemSpec {
  std::vector<SpeciesSpec> species;
  double lambda_sq = 1.0;
  ScalarField f;
  // Region predicate on boundary-face midpoints selecting the Dirichlet
  // part. When absent, the mesh's own face tags stand.
  std::optional<std::array<double, 4>> dirichlet_box;
  ScalarField phi_dirichlet;  // affine only
  std::vector<double> taus;
  Kernel kernel = Kernel::Bernoulli;
};

// Everything the scheme needs, frozen onto one mesh. Immutable after
// construction.
struct DiscreteProblem {
  AdmissibleMesh mesh;
  std::vector<std::string> species_names;
  Eigen::VectorXd D;                  // size I
  Eigen::VectorXd z;                  // size I
  double lambda_sq = 1.0;
  Eigen::VectorXd f;                  // per cell
  std::vector<FaceKind> face_kind;    // per face, after region retagging
  Eigen::VectorXd phi_dirichlet;      // per face, 0 on non-Dirichlet faces
  Eigen::MatrixXd initial;            // I x N cell averages of u_i^0
  std::vector<double> taus;
  Kernel kernel = Kernel::Bernoulli;

  int n_species() const { return static_cast<int>(D.size()); }
  int n_cells() const { return mesh.n_cells(); }
  // Solvent fraction of the initial data, 1 - sum of species rows.
  Eigen::VectorXd initial_solvent() const;
};

DiscreteProblem discretize(const ProblemSpec& spec, const AdmissibleMesh& mesh);

// JSON front end. Throws ConfigError with the offending key in the message.
ProblemSpec parse_config(const nlohmann::json& config);

}  // namespace pnpfv
