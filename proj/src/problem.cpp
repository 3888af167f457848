#include "pnpfv/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace pnpfv {

namespace {

// Area of a convex polygon clipped to an axis-aligned box
// (Sutherland-Hodgman against the four half-planes, then shoelace).
double clipped_area(std::vector<std::array<double, 2>> poly,
                    const std::array<double, 4>& b) {
  // axis: 0 for x, 1 for y; keep points with sign*(p[axis]-bound) >= 0.
  auto clip = [](const std::vector<std::array<double, 2>>& in, int axis,
                 double bound, double sign) {
    std::vector<std::array<double, 2>> out;
    out.reserve(in.size() + 2);
    size_t n = in.size();
    for (size_t i = 0; i < n; ++i) {
      const auto& p = in[i];
      const auto& q = in[(i + 1) % n];
      double sp = sign * (p[axis] - bound);
      double sq = sign * (q[axis] - bound);
      if (sp >= 0.0) out.push_back(p);
      if ((sp < 0.0) != (sq < 0.0)) {
        double t = (bound - p[axis]) / (q[axis] - p[axis]);
        std::array<double, 2> cut{p[0] + t * (q[0] - p[0]),
                                  p[1] + t * (q[1] - p[1])};
        cut[axis] = bound;
        out.push_back(cut);
      }
    }
    return out;
  };

  poly = clip(poly, 0, b[0], +1.0);
  if (poly.size() < 3) return 0.0;
  poly = clip(poly, 0, b[1], -1.0);
  if (poly.size() < 3) return 0.0;
  poly = clip(poly, 1, b[2], +1.0);
  if (poly.size() < 3) return 0.0;
  poly = clip(poly, 1, b[3], -1.0);
  if (poly.size() < 3) return 0.0;

  // Shoelace relative to the first vertex; subtracting first avoids the
  // cancellation that a raw shoelace suffers on small far-from-origin cells.
  double twice = 0.0;
  const auto& o = poly[0];
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    double px = poly[i][0] - o[0];
    double py = poly[i][1] - o[1];
    double qx = poly[i + 1][0] - o[0];
    double qy = poly[i + 1][1] - o[1];
    twice += px * qy - qx * py;
  }
  return 0.5 * std::abs(twice);
}

}  // namespace

double ScalarField::value_at(const std::array<double, 2>& x, int dim) const {
  double v = constant + gradient[0] * x[0];
  if (dim == 2) v += gradient[1] * x[1];
  for (const Box& box : boxes) {
    bool in = x[0] >= box.bounds[0] && x[0] <= box.bounds[1];
    if (dim == 2) in = in && x[1] >= box.bounds[2] && x[1] <= box.bounds[3];
    if (in) v += box.value;
  }
  return v;
}

double cell_average(const ScalarField& field, const Cell& cell, int dim) {
  double v = field.constant + field.gradient[0] * cell.centroid[0];
  if (dim == 2) v += field.gradient[1] * cell.centroid[1];

  for (const ScalarField::Box& box : field.boxes) {
    double frac;
    if (dim == 1) {
      double x0 = cell.vertices[0][0];
      double x1 = cell.vertices[1][0];
      double overlap =
          std::min(x1, box.bounds[1]) - std::max(x0, box.bounds[0]);
      frac = std::max(0.0, overlap) / (x1 - x0);
    } else {
      frac = clipped_area(cell.vertices, box.bounds) / cell.measure;
    }
    v += box.value * frac;
  }
  return v;
}

Eigen::VectorXd DiscreteProblem::initial_solvent() const {
  return Eigen::VectorXd::Ones(n_cells()) - initial.colwise().sum().transpose();
}

DiscreteProblem discretize(const ProblemSpec& spec,
                           const AdmissibleMesh& mesh) {
  const int I = static_cast<int>(spec.species.size());
  const int N = mesh.n_cells();
  if (I < 1) throw ConfigError("species list is empty");
  if (!(spec.lambda_sq > 0.0)) {
    throw ConfigError("lambda_sq must be positive, got " +
                      std::to_string(spec.lambda_sq));
  }
  if (spec.taus.empty()) throw ConfigError("time grid is empty");
  for (size_t n = 0; n < spec.taus.size(); ++n) {
    if (!(spec.taus[n] >= 1e-12)) {
      std::ostringstream msg;
      msg << "time step " << n << " is " << spec.taus[n]
          << "; every step must be >= 1e-12";
      throw ConfigError(msg.str());
    }
  }
  if (!spec.phi_dirichlet.is_affine()) {
    throw ConfigError("phi_dirichlet must be affine (no indicator boxes)");
  }

  DiscreteProblem dp;
  dp.mesh = mesh;
  dp.lambda_sq = spec.lambda_sq;
  dp.taus = spec.taus;
  dp.kernel = spec.kernel;
  dp.D.resize(I);
  dp.z.resize(I);
  for (int i = 0; i < I; ++i) {
    const SpeciesSpec& sp = spec.species[i];
    if (!(sp.D > 0.0)) {
      throw ConfigError("species '" + sp.name + "' has nonpositive D");
    }
    if (sp.z != std::round(sp.z)) {
      throw ConfigError("species '" + sp.name + "' has non-integer charge " +
                        std::to_string(sp.z));
    }
    dp.species_names.push_back(sp.name);
    dp.D[i] = sp.D;
    dp.z[i] = sp.z;
  }

  // Boundary tagging. The config's region predicate, when present, fully
  // determines the Dirichlet part; otherwise the mesh defaults stand.
  dp.face_kind.resize(mesh.n_faces());
  for (int j = 0; j < mesh.n_faces(); ++j) {
    const Face& face = mesh.faces[j];
    dp.face_kind[j] = face.kind;
    if (face.kind == FaceKind::Interior || !spec.dirichlet_box) continue;
    const auto& b = *spec.dirichlet_box;
    bool in = face.midpoint[0] >= b[0] && face.midpoint[0] <= b[1];
    if (mesh.dim == 2) {
      in = in && face.midpoint[1] >= b[2] && face.midpoint[1] <= b[3];
    }
    dp.face_kind[j] = in ? FaceKind::DirichletBoundary
                         : FaceKind::NeumannBoundary;
  }
  dp.phi_dirichlet = Eigen::VectorXd::Zero(mesh.n_faces());
  int n_dirichlet = 0;
  for (int j = 0; j < mesh.n_faces(); ++j) {
    if (dp.face_kind[j] != FaceKind::DirichletBoundary) continue;
    ++n_dirichlet;
    dp.phi_dirichlet[j] =
        spec.phi_dirichlet.value_at(mesh.faces[j].midpoint, mesh.dim);
  }
  if (n_dirichlet == 0) {
    throw ConfigError(
        "no Dirichlet boundary faces: the potential needs at least one");
  }

  dp.f.resize(N);
  dp.initial.resize(I, N);
  for (int k = 0; k < N; ++k) {
    const Cell& cell = mesh.cells[k];
    dp.f[k] = cell_average(spec.f, cell, mesh.dim);
    double sum = 0.0;
    for (int i = 0; i < I; ++i) {
      double u = cell_average(spec.species[i].initial, cell, mesh.dim);
      if (u < 0.0) {
        std::ostringstream msg;
        msg << "initial fraction of species '" << spec.species[i].name
            << "' is negative (" << u << ") in cell " << k;
        throw ConfigError(msg.str());
      }
      dp.initial(i, k) = u;
      sum += u;
    }
    if (sum > 1.0 + 1e-14) {
      std::ostringstream msg;
      msg << "initial fractions sum to " << sum << " > 1 in cell " << k;
      throw ConfigError(msg.str());
    }
  }

  for (int i = 0; i < I; ++i) {
    double mass = 0.0;
    for (int k = 0; k < N; ++k) mass += mesh.cells[k].measure * dp.initial(i, k);
    if (!(mass > 0.0)) {
      throw ConfigError("species '" + spec.species[i].name +
                        "' has zero total initial mass");
    }
  }
  double solvent_mass = 0.0;
  Eigen::VectorXd u0 = dp.initial_solvent();
  for (int k = 0; k < N; ++k) solvent_mass += mesh.cells[k].measure * u0[k];
  if (!(solvent_mass > 0.0)) {
    throw ConfigError("solvent has zero total initial mass");
  }

  return dp;
}

namespace {

ScalarField parse_field(const nlohmann::json& j, const std::string& key) {
  ScalarField field;
  if (j.is_number()) {
    field.constant = j.get<double>();
    return field;
  }
  if (!j.is_object()) {
    throw ConfigError("field '" + key + "' must be a number or an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "const" && it.key() != "gradient" && it.key() != "boxes") {
      throw ConfigError("field '" + key + "' has unknown key '" + it.key() +
                        "'");
    }
  }
  if (j.contains("const")) field.constant = j["const"].get<double>();
  if (j.contains("gradient")) {
    const auto& g = j["gradient"];
    if (!g.is_array() || g.empty() || g.size() > 2) {
      throw ConfigError("field '" + key +
                        "': gradient must be [gx] or [gx, gy]");
    }
    field.gradient[0] = g[0].get<double>();
    if (g.size() == 2) field.gradient[1] = g[1].get<double>();
  }
  if (j.contains("boxes")) {
    for (const auto& jb : j["boxes"]) {
      ScalarField::Box box;
      const auto& bounds = jb.at("box");
      if (!bounds.is_array() || (bounds.size() != 2 && bounds.size() != 4)) {
        throw ConfigError("field '" + key +
                          "': box must be [xmin,xmax] or [xmin,xmax,ymin,ymax]");
      }
      box.bounds = {bounds[0].get<double>(), bounds[1].get<double>(),
                    -std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
      if (bounds.size() == 4) {
        box.bounds[2] = bounds[2].get<double>();
        box.bounds[3] = bounds[3].get<double>();
      }
      if (box.bounds[0] > box.bounds[1] || box.bounds[2] > box.bounds[3]) {
        throw ConfigError("field '" + key + "': box bounds are reversed");
      }
      box.value = jb.at("value").get<double>();
      field.boxes.push_back(box);
    }
  }
  return field;
}

}  // namespace

ProblemSpec parse_config(const nlohmann::json& config) {
  ProblemSpec spec;
  try {
    if (!config.contains("species") || !config["species"].is_array() ||
        config["species"].empty()) {
      throw ConfigError("config needs a nonempty 'species' array");
    }
    if (!config.contains("initial") || !config["initial"].is_object()) {
      throw ConfigError(
          "config needs an 'initial' object keyed by species name");
    }
    const auto& initial = config["initial"];

    std::set<std::string> names;
    for (const auto& js : config["species"]) {
      SpeciesSpec sp;
      sp.name = js.at("name").get<std::string>();
      sp.D = js.at("D").get<double>();
      sp.z = js.at("z").get<double>();
      if (!names.insert(sp.name).second) {
        throw ConfigError("duplicate species name '" + sp.name + "'");
      }
      if (!initial.contains(sp.name)) {
        throw ConfigError("no initial field for species '" + sp.name + "'");
      }
      sp.initial = parse_field(initial[sp.name], "initial." + sp.name);
      spec.species.push_back(std::move(sp));
    }
    for (auto it = initial.begin(); it != initial.end(); ++it) {
      if (!names.count(it.key())) {
        throw ConfigError("'initial' names unknown species '" + it.key() +
                          "'");
      }
    }

    spec.lambda_sq = config.at("lambda_sq").get<double>();
    if (config.contains("f")) spec.f = parse_field(config["f"], "f");

    if (config.contains("dirichlet")) {
      const auto& jd = config["dirichlet"];
      const auto& bounds = jd.at("box");
      if (!bounds.is_array() || (bounds.size() != 2 && bounds.size() != 4)) {
        throw ConfigError(
            "dirichlet.box must be [xmin,xmax] or [xmin,xmax,ymin,ymax]");
      }
      std::array<double, 4> box{bounds[0].get<double>(),
                                bounds[1].get<double>(),
                                -std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()};
      if (bounds.size() == 4) {
        box[2] = bounds[2].get<double>();
        box[3] = bounds[3].get<double>();
      }
      spec.dirichlet_box = box;
      if (jd.contains("phi")) {
        spec.phi_dirichlet = parse_field(jd["phi"], "dirichlet.phi");
        if (!spec.phi_dirichlet.is_affine()) {
          throw ConfigError("dirichlet.phi must be constant or affine");
        }
      }
    }

    const auto& jt = config.at("time");
    if (jt.contains("taus")) {
      for (const auto& t : jt["taus"]) spec.taus.push_back(t.get<double>());
      if (spec.taus.empty()) throw ConfigError("time.taus is empty");
    } else {
      double tau = jt.at("tau").get<double>();
      double T = jt.at("T").get<double>();
      if (!(tau > 0.0) || !(T > 0.0)) {
        throw ConfigError("time.tau and time.T must be positive");
      }
      // Uniform grid; a shortened final step absorbs any remainder.
      long long n_full = static_cast<long long>(std::floor(T / tau + 1e-9));
      spec.taus.assign(n_full, tau);
      double rest = T - n_full * tau;
      if (rest > 1e-12) spec.taus.push_back(rest);
      if (spec.taus.empty()) throw ConfigError("time grid came out empty");
    }

    if (config.contains("kernel")) {
      std::string k = config["kernel"].get<std::string>();
      if (k == "bernoulli") {
        spec.kernel = Kernel::Bernoulli;
      } else if (k == "sqra") {
        spec.kernel = Kernel::Sqra;
      } else {
        throw ConfigError("unknown kernel '" + k +
                          "' (expected \"bernoulli\" or \"sqra\")");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return spec;
}

}  // namespace pnpfv
