#include "doctest.h"

#include "reki/cem.hpp"
#include "reki/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <numbers>
#include <utility>

using namespace reki;

namespace {

MeshHandle desk_mesh() {
  static const MeshHandle mesh = std::make_shared<const TriMesh>(make_disk_mesh(disk_mesh_for_target(1600)));
  return mesh;
}

Field random_logk(const MeshHandle& mesh, std::uint64_t seed) {
  Eigen::VectorXd v(mesh->element_count());
  for (Eigen::Index e = 0; e < v.size(); ++e) v[e] = rng::normal(seed, 0, std::uint64_t(e));
  return Field(mesh, v);
}

}  // namespace

TEST_CASE("disk mesh geometry") {
  const DiskMeshOptions o = disk_mesh_for_target(1600);
  const TriMesh m = make_disk_mesh(o);
  CHECK(m.element_count() == disk_mesh_element_count(o.rings, o.outer_vertices, o.radial_grading));
  CHECK(std::abs(double(m.element_count()) - 1600.0) / 1600.0 < 0.05);
  CHECK(m.electrode_count() == 16);
  CHECK(realized_coverage(m) == doctest::Approx(0.5).epsilon(1e-12));
  double polygon = 0.0;
  for (const auto& e : m.boundary()) {
    polygon += 0.5 * (m.vertices()(e.a, 0) * m.vertices()(e.b, 1) - m.vertices()(e.b, 0) * m.vertices()(e.a, 1));
  }
  CHECK(polygon > 3.1);
  CHECK(m.areas().sum() == doctest::Approx(polygon).epsilon(1e-12));
  for (int k = 0; k < 16; ++k) CHECK(m.electrode_length(k) == doctest::Approx(m.electrode_length(0)).epsilon(1e-12));

  // Every vertex has an exact mirror image across the x-axis.
  std::map<std::pair<double, double>, int> where;
  for (Eigen::Index v = 0; v < m.vertex_count(); ++v) where[{m.vertices()(v, 0), m.vertices()(v, 1)}] = int(v);
  for (Eigen::Index v = 0; v < m.vertex_count(); ++v) {
    const double y = m.vertices()(v, 1);
    CHECK(where.count({m.vertices()(v, 0), y == 0.0 ? 0.0 : -y}) == 1);
  }

  for (Eigen::Index target : {Eigen::Index(7744), Eigen::Index(6400)}) {
    DiskMeshOptions shape;
    shape.outer_vertices = 256;
    const auto big = disk_mesh_for_target(target, shape);
    CHECK(std::abs(double(disk_mesh_element_count(big.rings, 256, big.radial_grading)) - double(target)) / double(target) < 0.05);
  }
  // Non-aligned vertex counts snap edges by midpoint.
  const TriMesh coarse = make_disk_mesh({4, 40, 16, 0.5, 0.0, 1.0});
  CHECK(coarse.electrode_count() == 16);
  CHECK(realized_coverage(coarse) > 0.3);
}

TEST_CASE("setup validation") {
  const CemSetup s = CemSetup::adjacent(desk_mesh());
  CHECK(s.pattern_count() == 15);
  CHECK(s.patterns.colwise().sum().cwiseAbs().maxCoeff() == 0.0);
  CemSetup bad = s;
  bad.patterns(3, 2) = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.contact_impedance[4] = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Eigen::MatrixXd unbalanced = Eigen::MatrixXd::Zero(16, 1);
  unbalanced(0, 0) = 1.0;
  CHECK_THROWS_AS(solve_patterns(Field::constant(s.mesh, 0.0), s, unbalanced), std::invalid_argument);
}

TEST_CASE("zero current gives zero potentials") {
  const CemSetup s = CemSetup::adjacent(desk_mesh());
  const auto sol = solve_patterns(random_logk(s.mesh, 1), s, Eigen::MatrixXd::Zero(16, 1));
  CHECK(sol[0].V.isZero(0.0));
  CHECK(sol[0].v.isZero(0.0));
}

TEST_CASE("opposite injection on a symmetric mesh gives mirrored voltages") {
  const CemSetup s = CemSetup::adjacent(desk_mesh());
  Eigen::MatrixXd I = Eigen::MatrixXd::Zero(16, 1);
  I(0, 0) = 1.0;
  I(8, 0) = -1.0;
  const auto sol = solve_patterns(Field::constant(s.mesh, 0.0), s, I);
  for (int k = 0; k < 16; ++k) CHECK(std::abs(sol[0].V[k] - sol[0].V[(16 - k) % 16]) < 1e-8);
  CHECK(std::abs(sol[0].V.sum()) < 1e-10);
}

TEST_CASE("reciprocity, current balance and power identity") {
  const CemSetup s = CemSetup::adjacent(desk_mesh());
  const Field logk = random_logk(s.mesh, 9);
  const auto sol = assemble_and_solve(logk, s);
  REQUIRE(sol.size() == 15);
  for (Eigen::Index p = 0; p < 15; ++p) {
    for (Eigen::Index q = 0; q < 15; ++q) {
      const double a = s.patterns.col(q).dot(sol[std::size_t(p)].V);
      const double b = s.patterns.col(p).dot(sol[std::size_t(q)].V);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(std::abs(a), std::abs(b)) + 1e-14);
    }
    const Eigen::VectorXd I = electrode_currents(sol[std::size_t(p)], s);
    CHECK((I - s.patterns.col(p)).norm() <= 1e-8 * s.patterns.col(p).norm());
    const double power = dissipated_power(sol[std::size_t(p)], logk, s);
    const double work = s.patterns.col(p).dot(sol[std::size_t(p)].V);
    CHECK(std::abs(power - work) <= 1e-8 * std::abs(work));
    CHECK(std::abs(sol[std::size_t(p)].V.sum()) < 1e-10 * sol[std::size_t(p)].V.norm());
  }
}

TEST_CASE("system matrix is PSD before gauging and PD after") {
  const MeshHandle mesh = std::make_shared<const TriMesh>(make_disk_mesh({3, 64, 16, 0.5, 0.6, 1.75}));
  const CemSetup s = CemSetup::adjacent(mesh);
  const Field logk = random_logk(mesh, 4);
  const Eigen::MatrixXd raw(assemble_cem_matrix(logk, s, false));
  const Eigen::MatrixXd gauged(assemble_cem_matrix(logk, s, true));
  CHECK((raw - raw.transpose()).cwiseAbs().maxCoeff() < 1e-12 * raw.cwiseAbs().maxCoeff());
  const Eigen::VectorXd er = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(raw).eigenvalues();
  const Eigen::VectorXd eg = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gauged).eigenvalues();
  CHECK(er[0] > -1e-10 * er.maxCoeff());
  CHECK(std::abs(er[0]) < 1e-10 * er.maxCoeff());
  CHECK(er[1] > 1e-10 * er.maxCoeff());
  CHECK(eg[0] > 1e-10 * eg.maxCoeff());
  CHECK((raw * Eigen::VectorXd::Ones(raw.rows())).norm() < 1e-10 * raw.norm());
}

TEST_CASE("observation layout") {
  std::vector<CemSolution> sols(15);
  for (int p = 0; p < 15; ++p) {
    sols[std::size_t(p)].V.resize(16);
    for (int k = 0; k < 16; ++k) sols[std::size_t(p)].V[k] = 100.0 * p + k;
  }
  const Eigen::VectorXd y = observe_voltages(sols);
  CHECK(y.size() == 240);
  for (int p = 0; p < 15; ++p) {
    for (int k = 0; k < 16; ++k) CHECK(y[16 * p + k] == 100.0 * p + k);
  }
  for (auto& s : sols) s.V.setZero();
  CHECK(observe_voltages(sols).isZero(0.0));
  const CemModel model(CemSetup::adjacent(desk_mesh()));
  CHECK(model.output_size() == 240);
}

namespace {

Eigen::VectorXd uniform_voltages(int outer, Eigen::Index target) {
  DiskMeshOptions shape;
  shape.outer_vertices = outer;
  const auto mesh = std::make_shared<const TriMesh>(make_disk_mesh(disk_mesh_for_target(target, shape)));
  return CemModel(CemSetup::adjacent(mesh)).evaluate(Eigen::VectorXd::Zero(mesh->element_count()));
}

}  // namespace

TEST_CASE("uniform-conductivity voltages converge under refinement") {
  const Eigen::VectorXd ref = uniform_voltages(1024, 100000);
  const double e_desk = (uniform_voltages(128, 1600) - ref).norm() / ref.norm();
  const double e_mid = (uniform_voltages(256, 6400) - ref).norm() / ref.norm();
  const double e_fine = (uniform_voltages(512, 25600) - ref).norm() / ref.norm();
  MESSAGE("relative distance to the 100k-element solve: " << e_desk << ", " << e_mid << ", " << e_fine);
  CHECK(e_mid < e_desk);
  CHECK(e_fine < e_mid);
  CHECK(e_fine < 0.01);
}
