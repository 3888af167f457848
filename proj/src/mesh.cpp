#include "pnpfv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace pnpfv {

namespace {

double dot2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return a[0] * b[0] + a[1] * b[1];
}

double norm2(const std::array<double, 2>& a) { return std::sqrt(dot2(a, a)); }

std::array<double, 2> sub2(const std::array<double, 2>& a,
                           const std::array<double, 2>& b) {
  return {a[0] - b[0], a[1] - b[1]};
}

// Angle between v and the unit normal n, in radians. Faces with a
// vanishing v have already been rejected as degenerate.
double angle_deviation(const std::array<double, 2>& v,
                       const std::array<double, 2>& n) {
  double cross = v[0] * n[1] - v[1] * n[0];
  double along = dot2(v, n);
  return std::atan2(std::abs(cross), along);
}

void finalize_metrics(AdmissibleMesh& mesh) {
  mesh.total_measure = 0.0;
  mesh.h = 0.0;
  for (const Cell& cell : mesh.cells) {
    mesh.total_measure += cell.measure;
    mesh.h = std::max(mesh.h, cell.diameter);
  }
  mesh.zeta = 0.0;
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const Cell& cell = mesh.cells[k];
    double local = static_cast<double>(cell.faces.size());
    for (int f : cell.faces) {
      const Face& face = mesh.faces[f];
      double d_side = (face.K == k) ? face.d_K : face.d_L;
      local = std::max(local, cell.diameter / d_side);
    }
    mesh.zeta = std::max(mesh.zeta, local);
  }
}

}  // namespace

AdmissibleMesh build_interval_mesh(double domain_length, int n_cells) {
  if (!(domain_length > 0.0)) {
    throw MeshError("interval mesh needs a positive domain length, got " +
                    std::to_string(domain_length));
  }
  if (n_cells < 2) {
    throw MeshError("interval mesh needs at least 2 cells, got " +
                    std::to_string(n_cells));
  }

  AdmissibleMesh mesh;
  mesh.dim = 1;
  mesh.expected_measure = domain_length;
  mesh.theta_tol = 1e-8;

  const double h = domain_length / n_cells;
  mesh.cells.resize(n_cells);
  for (int k = 0; k < n_cells; ++k) {
    Cell& cell = mesh.cells[k];
    cell.measure = h;
    cell.diameter = h;
    cell.center = {(k + 0.5) * h, 0.0};
    cell.centroid = cell.center;
    cell.vertices = {{k * h, 0.0}, {(k + 1) * h, 0.0}};
    cell.faces = {k, k + 1};
  }

  mesh.faces.resize(n_cells + 1);
  for (int j = 0; j <= n_cells; ++j) {
    Face& face = mesh.faces[j];
    face.measure = 1.0;
    face.midpoint = {j * h, 0.0};
    if (j == 0 || j == n_cells) {
      face.kind = FaceKind::DirichletBoundary;
      face.K = (j == 0) ? 0 : n_cells - 1;
      face.normal = {(j == 0) ? -1.0 : 1.0, 0.0};
      face.d_K = 0.5 * h;
      face.d_sigma = 0.5 * h;
    } else {
      face.kind = FaceKind::Interior;
      face.K = j - 1;
      face.L = j;
      face.normal = {1.0, 0.0};
      face.d_K = 0.5 * h;
      face.d_L = 0.5 * h;
      face.d_sigma = h;
    }
    face.a_sigma = face.measure / face.d_sigma;
  }

  finalize_metrics(mesh);
  return mesh;
}

namespace {

struct MshData {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> triangles;  // node indices, file order
};

MshData parse_msh(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  MshData data;
  std::unordered_map<long long, int> node_index;
  bool saw_format = false;

  auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, out)) {
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  };

  while (next_line(line)) {
    if (line == "$MeshFormat") {
      if (!next_line(line)) throw MeshError("truncated $MeshFormat section");
      std::istringstream ls(line);
      std::string version;
      int file_type = -1, data_size = -1;
      ls >> version >> file_type >> data_size;
      if (version.rfind("2.2", 0) != 0 || file_type != 0 || data_size != 8) {
        throw MeshError("unsupported MSH format header '" + line +
                        "' (expected ASCII version 2.2)");
      }
      if (!next_line(line) || line != "$EndMeshFormat") {
        throw MeshError("missing $EndMeshFormat");
      }
      saw_format = true;
    } else if (line == "$Nodes") {
      if (!next_line(line)) throw MeshError("truncated $Nodes section");
      long long count = std::stoll(line);
      data.nodes.reserve(count);
      for (long long i = 0; i < count; ++i) {
        if (!next_line(line)) throw MeshError("truncated $Nodes section");
        std::istringstream ls(line);
        long long id;
        double x, y, z;
        if (!(ls >> id >> x >> y >> z)) {
          throw MeshError("malformed node line '" + line + "'");
        }
        node_index[id] = static_cast<int>(data.nodes.size());
        data.nodes.push_back({x, y});
      }
      if (!next_line(line) || line != "$EndNodes") {
        throw MeshError("missing $EndNodes");
      }
    } else if (line == "$Elements") {
      if (!next_line(line)) throw MeshError("truncated $Elements section");
      long long count = std::stoll(line);
      for (long long i = 0; i < count; ++i) {
        if (!next_line(line)) throw MeshError("truncated $Elements section");
        std::istringstream ls(line);
        long long id;
        int type = -1, n_tags = 0;
        if (!(ls >> id >> type >> n_tags)) {
          throw MeshError("malformed element line '" + line + "'");
        }
        for (int t = 0; t < n_tags; ++t) {
          long long tag;
          ls >> tag;
        }
        if (type == 2) {
          long long a, b, c;
          if (!(ls >> a >> b >> c)) {
            throw MeshError("malformed triangle element '" + line + "'");
          }
          std::array<int, 3> tri{};
          int local = 0;
          for (long long nid : {a, b, c}) {
            auto it = node_index.find(nid);
            if (it == node_index.end()) {
              throw MeshError("element " + std::to_string(id) +
                              " references unknown node " +
                              std::to_string(nid));
            }
            tri[local++] = it->second;
          }
          data.triangles.push_back(tri);
        } else if (type == 1 || type == 8 || type == 15) {
          // Point and line elements carry boundary markers we do not use.
        } else {
          throw MeshError("unsupported element type " + std::to_string(type) +
                          " in element " + std::to_string(id) +
                          "; only 3-node triangles are read");
        }
      }
      if (!next_line(line) || line != "$EndElements") {
        throw MeshError("missing $EndElements");
      }
    } else if (!line.empty() && line[0] == '$') {
      // Skip sections outside the supported subset (e.g. $PhysicalNames).
      const std::string end_tag = "$End" + line.substr(1);
      bool closed = false;
      while (next_line(line)) {
        if (line == end_tag) {
          closed = true;
          break;
        }
      }
      if (!closed) throw MeshError("unterminated section " + line);
    } else {
      throw MeshError("unexpected content outside MSH sections: '" + line +
                      "'");
    }
  }

  if (!saw_format) throw MeshError("missing $MeshFormat section");
  if (data.nodes.empty()) throw MeshError("mesh has no nodes");
  if (data.triangles.empty()) throw MeshError("mesh has no triangles");
  return data;
}

}  // namespace

AdmissibleMesh import_simplicial_mesh(const std::string& msh_text) {
  MshData data = parse_msh(msh_text);

  AdmissibleMesh mesh;
  mesh.dim = 2;
  mesh.theta_tol = 1e-6;

  mesh.cells.resize(data.triangles.size());
  for (size_t k = 0; k < data.triangles.size(); ++k) {
    std::array<int, 3>& tri = data.triangles[k];
    std::array<double, 2> A = data.nodes[tri[0]];
    std::array<double, 2> B = data.nodes[tri[1]];
    std::array<double, 2> C = data.nodes[tri[2]];
    std::array<double, 2> b = sub2(B, A);
    std::array<double, 2> c = sub2(C, A);
    double cross = b[0] * c[1] - b[1] * c[0];
    if (cross < 0.0) {
      std::swap(tri[1], tri[2]);
      std::swap(B, C);
      b = sub2(B, A);
      c = sub2(C, A);
      cross = -cross;
    }

    Cell& cell = mesh.cells[k];
    cell.vertices = {A, B, C};
    cell.diameter = std::max({norm2(sub2(B, A)), norm2(sub2(C, B)),
                              norm2(sub2(A, C))});
    if (!(cross > 1e-14 * cell.diameter * cell.diameter)) {
      throw MeshError("degenerate triangle (cell " + std::to_string(k) +
                      "): vertices are nearly collinear");
    }
    cell.measure = 0.5 * cross;
    cell.centroid = {(A[0] + B[0] + C[0]) / 3.0, (A[1] + B[1] + C[1]) / 3.0};

    double bb = dot2(b, b);
    double cc = dot2(c, c);
    double d = 2.0 * cross;
    cell.center = {A[0] + (c[1] * bb - b[1] * cc) / d,
                   A[1] + (b[0] * cc - c[0] * bb) / d};
  }

  // Collect edges. Key packs the sorted node pair; value lists the incident
  // (cell, local edge) pairs.
  struct HalfEdge {
    int cell;
    int local;
  };
  std::unordered_map<std::uint64_t, std::vector<HalfEdge>> edges;
  edges.reserve(3 * data.triangles.size());
  for (size_t k = 0; k < data.triangles.size(); ++k) {
    const std::array<int, 3>& tri = data.triangles[k];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e];
      int b = tri[(e + 1) % 3];
      std::uint64_t key =
          (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
          static_cast<std::uint64_t>(std::max(a, b));
      edges[key].push_back({static_cast<int>(k), e});
    }
  }

  mesh.faces.reserve(edges.size());
  // Deterministic face order: sweep cells and their local edges, emitting a
  // face the first time its edge is seen.
  std::unordered_map<std::uint64_t, int> face_of_edge;
  face_of_edge.reserve(edges.size());
  for (size_t k = 0; k < data.triangles.size(); ++k) {
    const std::array<int, 3>& tri = data.triangles[k];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e];
      int b = tri[(e + 1) % 3];
      std::uint64_t key =
          (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
          static_cast<std::uint64_t>(std::max(a, b));
      if (face_of_edge.count(key)) continue;

      const std::vector<HalfEdge>& inc = edges[key];
      if (inc.size() > 2) {
        throw MeshError("edge between nodes " + std::to_string(a) + " and " +
                        std::to_string(b) + " borders " +
                        std::to_string(inc.size()) +
                        " triangles; mesh is not conforming");
      }

      Face face;
      face.K = static_cast<int>(k);
      const std::array<double, 2> pa = data.nodes[a];
      const std::array<double, 2> pb = data.nodes[b];
      std::array<double, 2> t = sub2(pb, pa);
      face.measure = norm2(t);
      face.midpoint = {0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
      // Outward normal of a counterclockwise triangle boundary.
      face.normal = {t[1] / face.measure, -t[0] / face.measure};

      if (inc.size() == 2) {
        face.kind = FaceKind::Interior;
        face.L = (inc[0].cell == static_cast<int>(k)) ? inc[1].cell
                                                      : inc[0].cell;
      } else {
        face.kind = FaceKind::NeumannBoundary;
      }

      face_of_edge[key] = mesh.n_faces();
      mesh.faces.push_back(face);
    }
  }

  for (size_t k = 0; k < data.triangles.size(); ++k) {
    const std::array<int, 3>& tri = data.triangles[k];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e];
      int b = tri[(e + 1) % 3];
      std::uint64_t key =
          (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
          static_cast<std::uint64_t>(std::max(a, b));
      mesh.cells[k].faces.push_back(face_of_edge[key]);
    }
  }

  // Geometry sanity pass. Needs h first for the degeneracy threshold.
  mesh.h = 0.0;
  for (const Cell& cell : mesh.cells) mesh.h = std::max(mesh.h, cell.diameter);
  const double eps = mesh.eps_geom();

  for (int j = 0; j < mesh.n_faces(); ++j) {
    Face& face = mesh.faces[j];
    const Cell& cK = mesh.cells[face.K];
    face.d_K = dot2(sub2(face.midpoint, cK.center), face.normal);
    if (face.kind == FaceKind::Interior) {
      const Cell& cL = mesh.cells[face.L];
      face.d_L = dot2(sub2(cL.center, face.midpoint), face.normal);
      face.d_sigma = norm2(sub2(cL.center, cK.center));
      if (!(face.d_sigma > eps)) {
        throw MeshError(
            "degenerate mesh: circumcenters of cells " +
            std::to_string(face.K) + " and " + std::to_string(face.L) +
            " coincide across face " + std::to_string(j));
      }
      double dev = angle_deviation(sub2(cL.center, cK.center), face.normal);
      if (!(dev <= mesh.theta_tol)) {
        throw MeshError("admissibility violation at face " +
                        std::to_string(j) + ": center line misses the face " +
                        "normal by " + std::to_string(dev) + " rad");
      }
    } else {
      face.d_sigma = face.d_K;
      if (!(face.d_sigma > eps)) {
        throw MeshError("degenerate mesh: circumcenter of cell " +
                        std::to_string(face.K) + " lies on boundary face " +
                        std::to_string(j));
      }
    }
    if (!(face.d_K > eps) ||
        (face.kind == FaceKind::Interior && !(face.d_L > eps))) {
      throw MeshError(
          "admissibility violation at face " + std::to_string(j) +
          ": a circumcenter falls on the wrong side of its face (d_K=" +
          std::to_string(face.d_K) + ", d_L=" + std::to_string(face.d_L) +
          ")");
    }
    face.a_sigma = face.measure / face.d_sigma;
  }

  finalize_metrics(mesh);
  return mesh;
}

ValidationReport validate_admissibility(const AdmissibleMesh& mesh) {
  ValidationReport report;
  report.h = mesh.h;
  report.zeta = mesh.zeta;
  report.min_d_sigma = std::numeric_limits<double>::infinity();
  report.min_side_distance = std::numeric_limits<double>::infinity();
  report.max_orthogonality_deviation = 0.0;

  for (const Face& face : mesh.faces) {
    report.min_d_sigma = std::min(report.min_d_sigma, face.d_sigma);
    report.min_side_distance = std::min(report.min_side_distance, face.d_K);
    std::array<double, 2> link;
    if (face.kind == FaceKind::Interior) {
      report.min_side_distance = std::min(report.min_side_distance, face.d_L);
      link = sub2(mesh.cells[face.L].center, mesh.cells[face.K].center);
    } else {
      link = sub2(face.midpoint, mesh.cells[face.K].center);
    }
    if (norm2(link) > 0.0) {
      report.max_orthogonality_deviation =
          std::max(report.max_orthogonality_deviation,
                   angle_deviation(link, face.normal));
    }
  }

  if (mesh.expected_measure > 0.0) {
    report.measure_relative_defect =
        std::abs(mesh.total_measure - mesh.expected_measure) /
        mesh.expected_measure;
  }

  const double eps = mesh.eps_geom();
  report.passed = report.max_orthogonality_deviation <= mesh.theta_tol &&
                  report.min_d_sigma > eps && report.min_side_distance > eps &&
                  report.measure_relative_defect <= 1e-12;
  return report;
}

nlohmann::json mesh_to_json(const AdmissibleMesh& mesh) {
  nlohmann::json out;
  out["dim"] = mesh.dim;
  out["h"] = mesh.h;
  out["zeta"] = mesh.zeta;

  nlohmann::json cells = nlohmann::json::array();
  for (const Cell& cell : mesh.cells) {
    nlohmann::json jc;
    jc["measure"] = cell.measure;
    if (mesh.dim == 1) {
      jc["center"] = {cell.center[0]};
    } else {
      jc["center"] = {cell.center[0], cell.center[1]};
    }
    jc["faces"] = cell.faces;
    cells.push_back(std::move(jc));
  }
  out["cells"] = std::move(cells);

  nlohmann::json faces = nlohmann::json::array();
  for (const Face& face : mesh.faces) {
    nlohmann::json jf;
    jf["measure"] = face.measure;
    jf["d_sigma"] = face.d_sigma;
    switch (face.kind) {
      case FaceKind::Interior:
        jf["kind"] = "interior";
        jf["neighbors"] = {face.K, face.L};
        break;
      case FaceKind::DirichletBoundary:
        jf["kind"] = "dirichlet";
        jf["neighbors"] = {face.K};
        break;
      case FaceKind::NeumannBoundary:
        jf["kind"] = "neumann";
        jf["neighbors"] = {face.K};
        break;
    }
    faces.push_back(std::move(jf));
  }
  out["faces"] = std::move(faces);
  return out;
}

}  // namespace pnpfv
