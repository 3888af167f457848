#include "pnpfv/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pnpfv/diagnostics.hpp"
#include "pnpfv/errors.hpp"
#include "pnpfv/solver.hpp"
#include "pnpfv/steady.hpp"

namespace pnpfv {

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw IoError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config: " + std::string(e.what()));
  }
}

AdmissibleMesh load_mesh(const std::string& spec) {
  const std::string prefix = "builtin:1d:";
  if (spec.rfind(prefix, 0) == 0) {
    int cells = 0;
    try {
      std::size_t used = 0;
      cells = std::stoi(spec.substr(prefix.size()), &used);
      if (used != spec.size() - prefix.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("mesh spec " + spec +
                        " is not of the form builtin:1d:<cells>");
    }
    return build_interval_mesh(1.0, cells);
  }
  std::ifstream in(spec);
  if (!in.good()) throw IoError("cannot open mesh " + spec);
  std::ostringstream ss;
  ss << in.rdbuf();
  return import_simplicial_mesh(ss.str());
}

std::filesystem::path prepare_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw ConfigError("output directory is empty");
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
  return dir;
}

void write_state_csv(const DiscreteProblem& problem, const State& state,
                     const std::filesystem::path& path) {
  const int I = problem.n_species();
  const int N = problem.n_cells();
  std::vector<std::string> header;
  header.push_back("x");
  if (problem.mesh.dim == 2) header.push_back("y");
  for (int i = 0; i <= I; ++i) header.push_back("u_" + std::to_string(i));
  header.push_back("phi");

  Eigen::VectorXd u0 = state.solvent();
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    std::vector<double> row;
    row.push_back(problem.mesh.cells[k].center[0]);
    if (problem.mesh.dim == 2) row.push_back(problem.mesh.cells[k].center[1]);
    row.push_back(u0[k]);
    for (int i = 0; i < I; ++i) row.push_back(state.u(i, k));
    row.push_back(state.phi[k]);
    rows.push_back(std::move(row));
  }
  write_csv(path.string(), header, rows);
}

std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%06d.csv", step);
  return buf;
}

std::vector<std::string> trace_header(const DiscreteProblem& problem) {
  std::vector<std::string> header = {"step", "time", "H", "D"};
  for (int i = 1; i <= problem.n_species(); ++i)
    header.push_back("mass_" + std::to_string(i));
  header.push_back("newton_iters");
  return header;
}

std::vector<double> trace_row(int step, const StepRecord& record) {
  std::vector<double> row = {static_cast<double>(step), record.time,
                             record.energy, record.dissipation};
  for (Eigen::Index i = 0; i < record.masses.size(); ++i)
    row.push_back(record.masses[i]);
  row.push_back(static_cast<double>(record.newton_iters));
  return row;
}

nlohmann::json mesh_summary(const AdmissibleMesh& mesh) {
  return {{"dim", mesh.dim},
          {"cells", mesh.cells.size()},
          {"faces", mesh.faces.size()},
          {"h", mesh.h},
          {"zeta", mesh.zeta}};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out.good()) throw IoError("cannot open " + path.string());
  out << j.dump(2) << "\n";
  out.flush();
  if (!out.good()) throw IoError("failed writing " + path.string());
}

}  // namespace

int cmd_run(const RunOptions& options) {
  if (options.stride < 0) throw ConfigError("stride must be nonnegative");
  auto dir = prepare_out_dir(options.out_dir);
  AdmissibleMesh mesh = load_mesh(options.mesh_spec);
  DiscreteProblem problem =
      discretize(parse_config(load_json(options.config_path)), mesh);

  std::vector<std::vector<double>> trace;
  trace.reserve(problem.taus.size());
  int last_snapshot = -1;
  NewtonOptions newton;
  TimeLoopResult result = run_transient(
      problem, newton,
      [&](int step, const StepRecord& record, const State& state) {
        trace.push_back(trace_row(step + 1, record));
        if (options.stride > 0 && (step + 1) % options.stride == 0) {
          write_state_csv(problem, state, dir / snapshot_name(step + 1));
          last_snapshot = step + 1;
        }
      });

  write_state_csv(problem, result.initial_state, dir / snapshot_name(0));
  int final_step = static_cast<int>(problem.taus.size());
  if (last_snapshot != final_step)
    write_state_csv(problem, result.final_state, dir / snapshot_name(final_step));
  write_csv((dir / "trace.csv").string(), trace_header(problem), trace);

  int first_iters = result.steps.front().newton_iters;
  int min_iters = first_iters, max_iters = first_iters;
  for (const StepRecord& r : result.steps) {
    min_iters = std::min(min_iters, r.newton_iters);
    max_iters = std::max(max_iters, r.newton_iters);
  }
  nlohmann::json manifest = {
      {"command", "run"},
      {"mesh", mesh_summary(problem.mesh)},
      {"species", problem.species_names},
      {"n_steps", problem.taus.size()},
      {"total_time", result.steps.back().time},
      {"initial_energy", result.initial_energy},
      {"final_energy", result.steps.back().energy},
      {"final_min_fraction", result.steps.back().min_fraction},
      {"newton", {{"first", first_iters}, {"min", min_iters}, {"max", max_iters}}},
  };
  write_json(manifest, dir / "manifest.json");
  return 0;
}

int cmd_steady(const RunOptions& options) {
  auto dir = prepare_out_dir(options.out_dir);
  AdmissibleMesh mesh = load_mesh(options.mesh_spec);
  DiscreteProblem problem =
      discretize(parse_config(load_json(options.config_path)), mesh);

  SteadySolution sol = solve_steady(problem);

  State state;
  state.u = sol.u;
  state.phi = sol.phi;
  write_state_csv(problem, state, dir / "steady_state.csv");

  std::vector<double> xi(sol.xi.data(), sol.xi.data() + sol.xi.size());
  Eigen::VectorXd masses = free_energy(problem, state).masses;
  nlohmann::json out = {
      {"command", "steady"},
      {"mesh", mesh_summary(problem.mesh)},
      {"species", problem.species_names},
      {"mu", xi},
      {"psi_value", sol.psi_value},
      {"kkt_residual", sol.kkt_inf},
      {"iterations", sol.iterations},
      {"masses", std::vector<double>(masses.data(), masses.data() + masses.size())},
  };
  write_json(out, dir / "steady.json");
  return 0;
}

int cmd_longtime(const RunOptions& options) {
  if (options.stride < 0) throw ConfigError("stride must be nonnegative");
  auto dir = prepare_out_dir(options.out_dir);
  AdmissibleMesh mesh = load_mesh(options.mesh_spec);
  DiscreteProblem problem =
      discretize(parse_config(load_json(options.config_path)), mesh);

  SteadySolution steady = solve_steady(problem);
  State steady_state;
  steady_state.u = steady.u;
  steady_state.phi = steady.phi;
  double steady_energy = free_energy(problem, steady_state).total;
  write_state_csv(problem, steady_state, dir / "steady_state.csv");

  std::vector<std::vector<double>> trace;
  std::vector<std::vector<double>> relative;
  trace.reserve(problem.taus.size());
  relative.reserve(problem.taus.size() + 1);
  int last_snapshot = -1;

  double initial_gap = 0.0;
  TimeLoopResult result = run_transient(
      problem, NewtonOptions{},
      [&](int step, const StepRecord& record, const State& state) {
        trace.push_back(trace_row(step + 1, record));
        double gap = (state.u - steady.u).cwiseAbs().maxCoeff();
        relative.push_back({record.time, record.energy - steady_energy, gap});
        if (options.stride > 0 && (step + 1) % options.stride == 0) {
          write_state_csv(problem, state, dir / snapshot_name(step + 1));
          last_snapshot = step + 1;
        }
      });

  // Normalize the energy column by the initial distance; a run that
  // starts at the steady state keeps the raw differences.
  initial_gap = result.initial_energy - steady_energy;
  double scale = (initial_gap > 1e-14) ? initial_gap : 1.0;
  std::vector<std::vector<double>> rel_rows;
  rel_rows.reserve(relative.size() + 1);
  rel_rows.push_back(
      {0.0, initial_gap / scale,
       (result.initial_state.u - steady.u).cwiseAbs().maxCoeff()});
  for (auto& row : relative)
    rel_rows.push_back({row[0], row[1] / scale, row[2]});
  write_csv((dir / "relative_energy.csv").string(),
            {"time", "H_rel", "U_gap_inf"}, rel_rows);

  write_state_csv(problem, result.initial_state, dir / snapshot_name(0));
  int final_step = static_cast<int>(problem.taus.size());
  if (last_snapshot != final_step)
    write_state_csv(problem, result.final_state, dir / snapshot_name(final_step));
  write_csv((dir / "trace.csv").string(), trace_header(problem), trace);

  nlohmann::json manifest = {
      {"command", "longtime"},
      {"mesh", mesh_summary(problem.mesh)},
      {"species", problem.species_names},
      {"n_steps", problem.taus.size()},
      {"total_time", result.steps.back().time},
      {"initial_energy", result.initial_energy},
      {"final_energy", result.steps.back().energy},
      {"steady_energy", steady_energy},
      {"steady_kkt_residual", steady.kkt_inf},
      {"final_min_fraction", result.steps.back().min_fraction},
  };
  write_json(manifest, dir / "manifest.json");
  return 0;
}

int cmd_convergence(const ConvergenceOptions& options) {
  nlohmann::json config = load_json(options.config_path);
  if (!config.contains("ladder") || !config["ladder"].is_object())
    throw ConfigError("convergence needs a 'ladder' object in the config");
  std::vector<int> cells;
  int ref_cells = 0;
  try {
    const auto& jl = config["ladder"];
    for (const auto& n : jl.at("cells")) cells.push_back(n.get<int>());
    ref_cells = jl.at("ref_cells").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ladder: ") + e.what());
  }
  if (cells.empty()) throw ConfigError("ladder.cells is empty");
  for (std::size_t l = 1; l < cells.size(); ++l) {
    if (cells[l] <= cells[l - 1])
      throw ConfigError("ladder.cells must be strictly increasing");
  }
  for (int n : cells) {
    if (n <= 0 || ref_cells % n != 0)
      throw ConfigError("ladder.ref_cells must be a multiple of every "
                        "ladder entry");
  }
  if (ref_cells <= cells.back())
    throw ConfigError("reference mesh must be finer than the ladder");
  auto dir = prepare_out_dir(options.out_dir);

  ProblemSpec spec = parse_config(config);
  std::vector<DiscreteProblem> ladder;
  ladder.reserve(cells.size());
  for (int n : cells)
    ladder.push_back(discretize(spec, build_interval_mesh(1.0, n)));
  DiscreteProblem reference =
      discretize(spec, build_interval_mesh(1.0, ref_cells));

  std::vector<std::vector<Eigen::MatrixXd>> projected(ladder.size());
  for (auto& p : projected) p.reserve(reference.taus.size());
  run_transient(reference, NewtonOptions{},
                [&](int, const StepRecord&, const State& state) {
                  for (std::size_t l = 0; l < ladder.size(); ++l)
                    projected[l].push_back(project_nested(
                        state.u, reference.mesh, ladder[l].mesh));
                });

  std::vector<double> errors;
  errors.reserve(ladder.size());
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    std::vector<Eigen::MatrixXd> series;
    series.reserve(ladder[l].taus.size());
    run_transient(ladder[l], NewtonOptions{},
                  [&](int, const StepRecord&, const State& state) {
                    series.push_back(state.u);
                  });
    errors.push_back(relative_l1_spacetime_error(ladder[l].taus,
                                                 ladder[l].mesh, series,
                                                 projected[l]));
  }

  std::ofstream out(dir / "convergence.csv");
  if (!out.good()) throw IoError("cannot open convergence.csv for writing");
  out << "n_cells,error,observed_order\n";
  for (std::size_t l = 0; l < errors.size(); ++l) {
    out << cells[l] << ',' << format_double(errors[l]) << ',';
    if (l > 0) {
      double order =
          std::log(errors[l - 1] / errors[l]) /
          std::log(static_cast<double>(cells[l]) / cells[l - 1]);
      out << format_double(order);
    }
    out << '\n';
  }
  out.flush();
  if (!out.good()) throw IoError("failed writing convergence.csv");
  return 0;
}

}  // namespace pnpfv
