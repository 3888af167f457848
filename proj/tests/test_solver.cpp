#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "pnpfv/diagnostics.hpp"
#include "pnpfv/errors.hpp"
#include "pnpfv/solver.hpp"

using nlohmann::json;
using pnpfv::AdmissibleMesh;
using pnpfv::DiscreteProblem;
using pnpfv::State;

namespace {

DiscreteProblem steep_1d_problem(int n_cells, int n_steps) {
  std::vector<double> taus(n_steps, 1e-3);
  json cfg = {
      {"species",
       json::array({{{"name", "p"}, {"D", 1.0}, {"z", 2.0}},
                    {{"name", "m"}, {"D", 1.0}, {"z", 1.0}}})},
      {"lambda_sq", 1e-2},
      {"dirichlet",
       {{"box", {0.0, 1.0}},
        {"phi", {{"const", 10.0}, {"gradient", {-10.0}}}}}},
      {"initial",
       {{"p", {{"const", 0.1}, {"gradient", {0.1}}}}, {"m", 0.4}}},
      {"time", {{"taus", taus}}},
  };
  AdmissibleMesh mesh = pnpfv::build_interval_mesh(1.0, n_cells);
  return pnpfv::discretize(pnpfv::parse_config(cfg), mesh);
}

DiscreteProblem neutral_problem(int n_cells) {
  json cfg = {
      {"species",
       json::array({{{"name", "p"}, {"D", 1.0}, {"z", 1.0}},
                    {{"name", "m"}, {"D", 2.0}, {"z", -1.0}}})},
      {"lambda_sq", 0.05},
      {"initial", {{"p", 0.2}, {"m", 0.2}}},
      {"time", {{"taus", {1e-3}}}},
  };
  AdmissibleMesh mesh = pnpfv::build_interval_mesh(1.0, n_cells);
  return pnpfv::discretize(pnpfv::parse_config(cfg), mesh);
}

}  // namespace

TEST_CASE("linear solve handles identity and rejects singular systems") {
  pnpfv::SparseOperator eye(3, 3);
  eye.setIdentity();
  Eigen::VectorXd b(3);
  b << 0.3, -1.7, 2.5;
  Eigen::VectorXd x = pnpfv::linear_solve(eye, b);
  CHECK((x - b).lpNorm<Eigen::Infinity>() <= 1e-15);

  pnpfv::SparseOperator singular(2, 2);
  singular.insert(0, 0) = 1.0;
  singular.insert(1, 1) = 0.0;
  singular.makeCompressed();
  Eigen::VectorXd b2(2);
  b2 << 1.0, 1.0;
  CHECK_THROWS_AS((void)pnpfv::linear_solve(singular, b2),
                  pnpfv::SolverError);
}

TEST_CASE("linear solve reproduces the two-cell potential") {
  pnpfv::SparseOperator A(2, 2);
  A.insert(0, 0) = 6.0;
  A.insert(0, 1) = -2.0;
  A.insert(1, 0) = -2.0;
  A.insert(1, 1) = 6.0;
  A.makeCompressed();
  Eigen::VectorXd b(2);
  b << 0.25, 0.25;
  Eigen::VectorXd x = pnpfv::linear_solve(A, b);
  CHECK(x[0] == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.0625).epsilon(1e-14));
}

TEST_CASE("cell-centered Poisson solve converges at second order") {
  // -phi'' = 1 with zero boundary values has solution x(1-x)/2.
  auto solve_error = [](int n) {
    json cfg = {
        {"species", json::array({{{"name", "s"}, {"D", 1.0}, {"z", 0.0}}})},
        {"lambda_sq", 1.0},
        {"f", 1.0},
        {"dirichlet", {{"box", {0.0, 1.0}}, {"phi", 0.0}}},
        {"initial", {{"s", 0.3}}},
        {"time", {{"taus", {1e-3}}}},
    };
    AdmissibleMesh mesh = pnpfv::build_interval_mesh(1.0, n);
    DiscreteProblem dp = pnpfv::discretize(pnpfv::parse_config(cfg), mesh);
    auto [op, rhs] = pnpfv::assemble_poisson(dp, dp.initial);
    Eigen::VectorXd phi = pnpfv::linear_solve(op, rhs);
    double err = 0.0;
    for (int k = 0; k < n; ++k) {
      double x = dp.mesh.cells[k].center[0];
      err = std::max(err, std::abs(phi[k] - 0.5 * x * (1.0 - x)));
    }
    return err;
  };

  double e32 = solve_error(32);
  double e64 = solve_error(64);
  CHECK(e32 < 1e-3);
  CHECK(e32 / e64 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("an equilibrium state is a fixed point of the stepper") {
  DiscreteProblem dp = neutral_problem(8);
  State s;
  s.u = Eigen::MatrixXd::Constant(2, 8, 0.2);
  s.phi = Eigen::VectorXd::Zero(8);

  auto [next, report] = pnpfv::advance_step(dp, s, 1e-3);
  CHECK(report.iterations <= 1);
  CHECK((next.u - s.u).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(next.phi.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("one step of the steep-gradient problem") {
  DiscreteProblem dp = steep_1d_problem(64, 1);
  State s0;
  s0.u = dp.initial;
  auto [poisson, rhs] = pnpfv::assemble_poisson(dp, s0.u);
  s0.phi = pnpfv::linear_solve(poisson, rhs);
  double h0 = pnpfv::free_energy(dp, s0).total;

  auto [s1, report] = pnpfv::advance_step(dp, s0, 1e-3);

  CHECK(report.iterations >= 1);
  CHECK(report.iterations <= 12);
  CHECK(report.residual_inf <= 1e-10);
  CHECK(report.mass_defect <= 1e-14);

  double min_u = std::min(s1.u.minCoeff(), s1.solvent().minCoeff());
  CHECK(min_u > 0.0);

  double h1 = pnpfv::free_energy(dp, s1).total;
  double d1 = pnpfv::dissipation(dp, s1);
  CHECK(d1 >= -1e-14);
  CHECK(h1 + 1e-3 * d1 <= h0 + 1e-10);
}

TEST_CASE("mirror-symmetric data stays mirror symmetric") {
  json cfg = {
      {"species", json::array({{{"name", "s"}, {"D", 1.0}, {"z", 1.0}}})},
      {"lambda_sq", 0.1},
      {"dirichlet", {{"box", {0.0, 1.0}}, {"phi", 5.0}}},
      {"initial", {{"s", 0.3}}},
      {"time", {{"taus", {1e-3}}}},
  };
  AdmissibleMesh mesh = pnpfv::build_interval_mesh(1.0, 2);
  DiscreteProblem dp = pnpfv::discretize(pnpfv::parse_config(cfg), mesh);

  State s;
  s.u = dp.initial;
  auto [poisson, rhs] = pnpfv::assemble_poisson(dp, s.u);
  s.phi = pnpfv::linear_solve(poisson, rhs);

  auto [next, report] = pnpfv::advance_step(dp, s, 1e-3);
  CHECK(std::abs(next.u(0, 0) - next.u(0, 1)) <= 1e-13);
  CHECK(std::abs(next.phi[0] - next.phi[1]) <= 1e-13);
}

TEST_CASE("the stepper is deterministic") {
  DiscreteProblem dp = steep_1d_problem(32, 1);
  State s0;
  s0.u = dp.initial;
  auto [poisson, rhs] = pnpfv::assemble_poisson(dp, s0.u);
  s0.phi = pnpfv::linear_solve(poisson, rhs);

  auto [a, ra] = pnpfv::advance_step(dp, s0, 1e-3);
  auto [b, rb] = pnpfv::advance_step(dp, s0, 1e-3);
  CHECK((a.u.array() == b.u.array()).all());
  CHECK((a.phi.array() == b.phi.array()).all());
  CHECK(ra.iterations == rb.iterations);
}

TEST_CASE("iteration budget is enforced") {
  DiscreteProblem dp = steep_1d_problem(32, 1);
  State s0;
  s0.u = dp.initial;
  auto [poisson, rhs] = pnpfv::assemble_poisson(dp, s0.u);
  s0.phi = pnpfv::linear_solve(poisson, rhs);

  pnpfv::NewtonOptions opts;
  opts.max_iters = 0;
  CHECK_THROWS_AS((void)pnpfv::advance_step(dp, s0, 1e-3, opts),
                  pnpfv::SolverError);
}

TEST_CASE("short transient run keeps the invariants") {
  DiscreteProblem dp = steep_1d_problem(16, 5);

  std::vector<int> seen;
  pnpfv::TimeLoopResult result = pnpfv::run_transient(
      dp, pnpfv::NewtonOptions{},
      [&](int step, const pnpfv::StepRecord& rec, const State& state) {
        seen.push_back(step);
        CHECK(rec.min_fraction > 0.0);
        CHECK(state.u.cols() == 16);
      });

  REQUIRE(result.steps.size() == 5);
  CHECK(seen == std::vector<int>{0, 1, 2, 3, 4});

  Eigen::VectorXd mass0(2);
  for (int i = 0; i < 2; ++i) {
    mass0[i] = 0.0;
    for (int k = 0; k < 16; ++k)
      mass0[i] += dp.mesh.cells[k].measure * dp.initial(i, k);
  }

  double previous = result.initial_energy;
  for (std::size_t n = 0; n < result.steps.size(); ++n) {
    const pnpfv::StepRecord& rec = result.steps[n];
    CHECK(rec.time == doctest::Approx(1e-3 * (n + 1)).epsilon(1e-12));
    CHECK(rec.newton_iters >= 1);
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(rec.masses[i] - mass0[i]) <= 1e-13);
    CHECK(rec.dissipation >= -1e-14);
    CHECK(rec.energy + rec.tau * rec.dissipation <= previous + 1e-10);
    CHECK(rec.min_fraction > 0.0);
    previous = rec.energy;
  }

  CHECK((result.final_state.u.array() > 0.0).all());
}

TEST_CASE("one step on the triangulated square with indicator data") {
  const char* path = std::getenv("PNPFV_MESH");
  REQUIRE_MESSAGE(path != nullptr, "PNPFV_MESH not set");
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  AdmissibleMesh mesh = pnpfv::import_simplicial_mesh(ss.str());

  json cfg = {
      {"species",
       json::array(
           {{{"name", "a"}, {"D", 1.0}, {"z", 2.0}},
            {{"name", "b"}, {"D", 2.0}, {"z", 1.0}},
            {{"name", "c"}, {"D", 2.0}, {"z", -1.0}}})},
      {"lambda_sq", 0.16},
      {"dirichlet", {{"box", {0.0, 0.5, 1.0, 1.0}}, {"phi", 0.0}}},
      {"initial",
       {{"a", {{"const", 0.0}, {"boxes", {{{"box", {0.0, 0.5, 0.0, 0.5}}, {"value", 0.3}}}}}},
        {"b", {{"const", 0.0}, {"boxes", {{{"box", {0.5, 1.0, 0.0, 0.5}}, {"value", 0.3}}}}}},
        {"c", {{"const", 0.0}, {"boxes", {{{"box", {0.5, 1.0, 0.5, 1.0}}, {"value", 0.9}}}}}}}},
      {"time", {{"taus", {1e-3}}}},
  };
  DiscreteProblem dp = pnpfv::discretize(pnpfv::parse_config(cfg), mesh);

  State s0;
  s0.u = dp.initial;
  auto [poisson, rhs] = pnpfv::assemble_poisson(dp, s0.u);
  s0.phi = pnpfv::linear_solve(poisson, rhs);
  double h0 = pnpfv::free_energy(dp, s0).total;

  auto [s1, report] = pnpfv::advance_step(dp, s0, 1e-3);

  CHECK(report.residual_inf <= 1e-10);
  double min_u = std::min(s1.u.minCoeff(), s1.solvent().minCoeff());
  CHECK(min_u > 0.0);
  CHECK(report.mass_defect <= 1e-14 * dp.mesh.total_measure);

  double h1 = pnpfv::free_energy(dp, s1).total;
  double d1 = pnpfv::dissipation(dp, s1);
  CHECK(d1 >= -1e-14);
  CHECK(h1 + 1e-3 * d1 <= h0 + 1e-10);

  Eigen::VectorXd m0 = pnpfv::free_energy(dp, s0).masses;
  Eigen::VectorXd m1 = pnpfv::free_energy(dp, s1).masses;
  CHECK((m1 - m0).cwiseAbs().maxCoeff() <= 1e-13);
}
