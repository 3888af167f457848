#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pnpfv/diagnostics.hpp"
#include "pnpfv/errors.hpp"

using nlohmann::json;
using pnpfv::AdmissibleMesh;
using pnpfv::DiscreteProblem;
using pnpfv::State;

namespace {

DiscreteProblem make_problem(int n_cells, const json& species,
                             const json& initial, double lambda_sq,
                             const std::string& kernel = "bernoulli") {
  json cfg = {
      {"species", species},
      {"lambda_sq", lambda_sq},
      {"initial", initial},
      {"time", {{"taus", {1e-3}}}},
      {"kernel", kernel},
  };
  AdmissibleMesh mesh = pnpfv::build_interval_mesh(1.0, n_cells);
  return pnpfv::discretize(pnpfv::parse_config(cfg), mesh);
}

}  // namespace

TEST_CASE("mixing entropy values") {
  Eigen::VectorXd u(2);
  u << 0.5, 0.25;
  // 0.5 log 0.5 + 0.25 log 0.25 + 0.25 log 0.25
  CHECK(pnpfv::mixing_entropy(u) ==
        doctest::Approx(-1.0397207708399179).epsilon(1e-15));

  Eigen::VectorXd uniform(2);
  uniform << 1.0 / 3.0, 1.0 / 3.0;
  CHECK(pnpfv::mixing_entropy(uniform) ==
        doctest::Approx(-std::log(3.0)).epsilon(1e-14));

  Eigen::VectorXd vertex(1);
  vertex << 1.0;
  CHECK(pnpfv::mixing_entropy(vertex) == 0.0);

  Eigen::VectorXd zeros(3);
  zeros << 0.0, 0.0, 0.0;
  CHECK(pnpfv::mixing_entropy(zeros) == 0.0);

  Eigen::VectorXd negative(2);
  negative << -0.1, 0.2;
  CHECK_THROWS_AS((void)pnpfv::mixing_entropy(negative), pnpfv::DomainError);

  Eigen::VectorXd oversaturated(2);
  oversaturated << 0.7, 0.5;
  CHECK_THROWS_AS((void)pnpfv::mixing_entropy(oversaturated),
                  pnpfv::DomainError);
}

TEST_CASE("free energy of the two-cell hand example") {
  auto species = json::array({{{"name", "s"}, {"D", 1.0}, {"z", 1.0}}});
  DiscreteProblem dp = make_problem(2, species, {{"s", 0.5}}, 1.0);

  State s;
  s.u = Eigen::MatrixXd::Constant(1, 2, 0.5);
  s.phi = Eigen::VectorXd::Constant(2, 0.0625);

  pnpfv::EnergyReport report = pnpfv::free_energy(dp, s);
  // Entropy: two cells of measure 1/2, each 2 * 0.5 log 0.5 = log 0.5.
  CHECK(report.entropy ==
        doctest::Approx(std::log(0.5)).epsilon(1e-15));
  // Potential: interior jump vanishes; two Dirichlet faces with a = 4
  // contribute (1/2) * 4 * 0.0625^2 each.
  CHECK(report.potential == doctest::Approx(0.015625).epsilon(1e-15));
  CHECK(report.boundary == 0.0);
  CHECK(report.total ==
        doctest::Approx(std::log(0.5) + 0.015625).epsilon(1e-14));
  REQUIRE(report.masses.size() == 1);
  CHECK(report.masses[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("constant neutral state has zero field energy and dissipation") {
  auto species = json::array({{{"name", "p"}, {"D", 1.0}, {"z", 1.0}},
                              {{"name", "m"}, {"D", 2.0}, {"z", -1.0}}});
  DiscreteProblem dp =
      make_problem(8, species, {{"p", 0.2}, {"m", 0.2}}, 0.05);

  State s;
  s.u = Eigen::MatrixXd::Constant(2, 8, 0.2);
  s.phi = Eigen::VectorXd::Zero(8);

  pnpfv::EnergyReport report = pnpfv::free_energy(dp, s);
  CHECK(report.potential == 0.0);
  CHECK(report.boundary == 0.0);
  CHECK(pnpfv::dissipation(dp, s) == 0.0);
}

TEST_CASE("dissipation vanishes exactly at equilibrium shapes") {
  auto species = json::array({{{"name", "p"}, {"D", 1.0}, {"z", 2.0}},
                              {{"name", "m"}, {"D", 1.5}, {"z", 1.0}}});
  DiscreteProblem dp =
      make_problem(16, species, {{"p", 0.2}, {"m", 0.2}}, 1.0);
  const double z[2] = {2.0, 1.0};
  const double xi[2] = {-0.3, 0.2};

  for (const char* kernel : {"bernoulli", "sqra"}) {
    DiscreteProblem local = make_problem(16, species,
                                         {{"p", 0.2}, {"m", 0.2}}, 1.0, kernel);
    State s;
    s.u.resize(2, 16);
    s.phi.resize(16);
    for (int k = 0; k < 16; ++k) {
      s.phi[k] = std::sin(1.7 * k) - 0.4;
      double denom = 1.0;
      for (int i = 0; i < 2; ++i) denom += std::exp(xi[i] - z[i] * s.phi[k]);
      for (int i = 0; i < 2; ++i)
        s.u(i, k) = std::exp(xi[i] - z[i] * s.phi[k]) / denom;
    }
    CHECK(std::abs(pnpfv::dissipation(local, s)) <= 1e-13);

    // Any deviation from the equilibrium shape dissipates.
    State perturbed = s;
    perturbed.u(0, 3) += 0.01;
    CHECK(pnpfv::dissipation(local, perturbed) > 1e-8);
  }

  // Random positive states never produce negative dissipation.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> du(0.02, 0.4);
  std::uniform_real_distribution<double> dphi(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    State s;
    s.u.resize(2, 16);
    s.phi.resize(16);
    for (int k = 0; k < 16; ++k) {
      s.u(0, k) = du(rng);
      s.u(1, k) = du(rng);
      s.phi[k] = dphi(rng);
    }
    CHECK(pnpfv::dissipation(dp, s) >= -1e-14);
  }
}

TEST_CASE("dissipation rejects nonpositive fractions") {
  auto species = json::array({{{"name", "s"}, {"D", 1.0}, {"z", 1.0}}});
  DiscreteProblem dp = make_problem(4, species, {{"s", 0.3}}, 1.0);
  State s;
  s.u = Eigen::MatrixXd::Constant(1, 4, 0.3);
  s.phi = Eigen::VectorXd::Zero(4);
  s.u(0, 2) = 0.0;
  CHECK_THROWS_AS((void)pnpfv::dissipation(dp, s), pnpfv::DomainError);
}

TEST_CASE("nested projection averages fine cells") {
  AdmissibleMesh coarse = pnpfv::build_interval_mesh(1.0, 2);
  AdmissibleMesh fine = pnpfv::build_interval_mesh(1.0, 8);

  Eigen::MatrixXd uf(1, 8);
  for (int k = 0; k < 8; ++k) uf(0, k) = static_cast<double>(k);
  Eigen::MatrixXd proj = pnpfv::project_nested(uf, fine, coarse);
  CHECK(proj(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(proj(0, 1) == doctest::Approx(5.5).epsilon(1e-15));

  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(2, 8, 0.3);
  Eigen::MatrixXd pc = pnpfv::project_nested(constant, fine, coarse);
  for (int k = 0; k < 2; ++k) {
    CHECK(pc(0, k) == 0.3);
    CHECK(pc(1, k) == 0.3);
  }

  AdmissibleMesh six = pnpfv::build_interval_mesh(1.0, 6);
  Eigen::MatrixXd u6(1, 6);
  u6.setZero();
  AdmissibleMesh four = pnpfv::build_interval_mesh(1.0, 4);
  CHECK_THROWS_AS((void)pnpfv::project_nested(u6, six, four),
                  pnpfv::MeshError);
  CHECK_THROWS_AS((void)pnpfv::project_nested(u6, fine, coarse),
                  pnpfv::MeshError);
}

TEST_CASE("space-time error norm") {
  AdmissibleMesh mesh = pnpfv::build_interval_mesh(1.0, 2);
  std::vector<double> taus = {0.5, 0.25};

  Eigen::MatrixXd a0(1, 2), a1(1, 2), b0(1, 2), b1(1, 2);
  a0 << 0.2, 0.4;
  a1 << 0.1, 0.3;
  b0 << 0.3, 0.4;
  b1 << 0.1, 0.5;

  SUBCASE("hand-computed value") {
    double err = pnpfv::relative_l1_spacetime_error(taus, mesh, {a0, a1},
                                                    {b0, b1});
    // numerator 0.05, denominator 0.25
    CHECK(err == doctest::Approx(0.2).epsilon(1e-14));
  }

  SUBCASE("series against itself") {
    CHECK(pnpfv::relative_l1_spacetime_error(taus, mesh, {b0, b1},
                                             {b0, b1}) == 0.0);
  }

  SUBCASE("shape mismatches are rejected") {
    CHECK_THROWS_AS((void)pnpfv::relative_l1_spacetime_error(
                        taus, mesh, {a0}, {b0, b1}),
                    pnpfv::DomainError);
    Eigen::MatrixXd wide(1, 3);
    wide.setZero();
    CHECK_THROWS_AS((void)pnpfv::relative_l1_spacetime_error(
                        taus, mesh, {a0, wide}, {b0, b1}),
                    pnpfv::DomainError);
  }

  SUBCASE("zero reference is rejected") {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 2);
    CHECK_THROWS_AS((void)pnpfv::relative_l1_spacetime_error(
                        taus, mesh, {a0, a1}, {z, z}),
                    pnpfv::DomainError);
  }
}

TEST_CASE("csv output round-trips binary64 values") {
  CHECK(pnpfv::format_double(0.1) == "0.1");
  CHECK(pnpfv::format_double(3.0) == "3");
  CHECK(pnpfv::format_double(0.0) == "0");

  std::vector<double> values = {0.1,       1.0 / 3.0,     1e-300,
                                12345.678, -2.5e17,       7.0,
                                2.2250738585072014e-308};
  for (double v : values) {
    std::string text = pnpfv::format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }

  auto path = std::filesystem::temp_directory_path() / "pnpfv_csv_test.csv";
  pnpfv::write_csv(path.string(), {"a", "b"},
                   {{0.1, 1.0 / 3.0}, {3.0, -2.5e17}});
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b");
  std::getline(in, line);
  CHECK(line.substr(0, 4) == "0.1,");
  double second = std::strtod(line.c_str() + 4, nullptr);
  CHECK(second == 1.0 / 3.0);
  std::getline(in, line);
  CHECK(line == "3,-2.5e+17");
  in.close();
  std::filesystem::remove(path);

  CHECK_THROWS_AS(pnpfv::write_csv("/nonexistent_dir_zz/x.csv", {"a"}, {}),
                  pnpfv::IoError);
  CHECK_THROWS_AS(pnpfv::write_csv(
                      (std::filesystem::temp_directory_path() /
                       "pnpfv_csv_bad.csv")
                          .string(),
                      {"a", "b"}, {{1.0}}),
                  pnpfv::IoError);
}
