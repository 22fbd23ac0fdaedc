#include "doctest.h"

#include "reki/grf.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>

using namespace reki;

TEST_CASE("spherical kernel values") {
  CHECK(spherical_kernel(0.0, 2.5, 1.0) == 2.5);
  CHECK(spherical_kernel(1.0, 2.5, 1.0) == 0.0);
  CHECK(spherical_kernel(1.7, 2.5, 1.0) == 0.0);
  const double hand = 1.0 - 1.5 * 0.5 + 0.5 * 0.125;
  CHECK(std::abs(spherical_kernel(0.5, 1.0, 1.0) - hand) < 1e-15);
  CHECK(hand == 0.3125);
}

TEST_CASE("covariance parameters are validated") {
  CHECK_THROWS_AS(CovarianceSpec::spherical(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceSpec::spherical(1.0, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceSpec::whittle_matern(-0.2), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceSpec::laplacian_power(2.0, 0.0), std::invalid_argument);
  CHECK(family_from_string(to_string(Family::WhittleMatern)) == Family::WhittleMatern);
}

TEST_CASE("spherical matrix has exact compact support") {
  const Grid g = Grid::square(12, 0.0, 6.0);
  const auto spec = CovarianceSpec::spherical(1.3, 1.1);
  const Eigen::MatrixXd C = build_covariance_matrix(spec, g);
  const Eigen::MatrixX2d x = cell_centers(g);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double h = (x.row(i) - x.row(j)).norm();
      if (h > spec.a) {
        REQUIRE(C(i, j) == 0.0);
      } else {
        REQUIRE(std::abs(C(i, j) - g.cell_area() * spherical_kernel(h, spec.c0, spec.a)) < 1e-14);
      }
    }
  }
  CHECK(C == C.transpose());
}

TEST_CASE("kl_decompose on trivial matrices") {
  const Grid g = Grid::square(3, 0.0, 1.0);
  const KLBasis id = kl_decompose(Eigen::MatrixXd::Identity(9, 9), g, Truncation::modes(4));
  CHECK(id.truncation() == 4);
  for (int k = 0; k < 4; ++k) CHECK(id.eigenvalues[k] == doctest::Approx(1.0));

  Eigen::VectorXd v(9);
  v << 1, 2, 0, -1, 3, 0.5, 0, 1, -2;
  const KLBasis r1 = kl_decompose(v * v.transpose(), g, Truncation::modes(2));
  CHECK(r1.eigenvalues[0] == doctest::Approx(v.squaredNorm()));
  CHECK(r1.eigenvalues[1] == 0.0);

  CHECK_THROWS_AS(kl_decompose(-Eigen::MatrixXd::Identity(9, 9), g), std::runtime_error);
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(9, 9);
  asym(0, 1) = 1e-3;
  CHECK_THROWS_AS(kl_decompose(asym, g), std::invalid_argument);
  CHECK_THROWS_AS(kl_decompose(Eigen::MatrixXd::Identity(9, 9), g, Truncation::modes(10)), std::invalid_argument);
}

TEST_CASE("spherical KL basis: ordering, orthonormality, reconstruction") {
  const Grid g = Grid::square(20, 0.0, 6.0);
  const auto spec = CovarianceSpec::spherical(1.0, 2.0);
  const Eigen::MatrixXd C = build_covariance_matrix(spec, g);
  const KLBasis basis = kl_basis(spec, g, Truncation::fraction(0.999));
  REQUIRE(basis.truncation() > 0);
  REQUIRE(basis.truncation() <= g.size());
  for (Eigen::Index k = 1; k < basis.truncation(); ++k) CHECK(basis.eigenvalues[k] <= basis.eigenvalues[k - 1]);
  CHECK(basis.eigenvalues.minCoeff() >= 0.0);

  const Eigen::MatrixXd gram = basis.eigenvectors.transpose() * basis.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd phi = basis.l2_eigenfunctions();
  const Eigen::MatrixXd l2gram = g.cell_area() * phi.transpose() * phi;
  CHECK((l2gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);

  // Independent full eigendecomposition.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const Eigen::VectorXd ref = es.eigenvalues().reverse();
  for (Eigen::Index k = 0; k < 10; ++k) CHECK(std::abs(basis.eigenvalues[k] - ref[k]) < 1e-10 * ref[0]);

  const Eigen::MatrixXd R = basis.eigenvectors * basis.eigenvalues.asDiagonal() * basis.eigenvectors.transpose();
  CHECK((R - C).norm() / C.norm() < 0.01);
}

TEST_CASE("sampling: zero truncation, determinism, shared coefficients") {
  const Grid g = Grid::square(8, 0.0, 6.0);
  const KLBasis zero = kl_basis(CovarianceSpec::spherical(1.0, 2.0), g, Truncation::modes(0));
  CHECK(sample(zero, 3, 1)[0].values().isZero(0.0));

  const KLBasis b = kl_basis(CovarianceSpec::spherical(1.0, 2.0), g);
  const Eigen::MatrixXd s1 = sample_matrix(b, 42, 5);
  const Eigen::MatrixXd s2 = sample_matrix(b, 42, 5);
  CHECK(s1 == s2);
  CHECK(s1 != sample_matrix(b, 43, 5));
  // Extending an ensemble keeps earlier members.
  CHECK(sample_matrix(b, 42, 3, 2).col(0) == s1.col(2));
  CHECK(kl_coefficients(9, 4, 10).head(5) == kl_coefficients(9, 4, 5));
}

TEST_CASE("Monte Carlo moments of spherical samples") {
  const Grid g = Grid::square(10, 0.0, 6.0);
  const double c0 = 1.0;
  const KLBasis b = kl_basis(CovarianceSpec::spherical(c0, 2.0), g);
  const Eigen::Index n = 10000;
  const Eigen::MatrixXd S = sample_matrix(b, 2024, n);
  const Eigen::VectorXd mean = S.rowwise().mean();
  const Eigen::VectorXd var = S.array().square().rowwise().mean().matrix() - mean.array().square().matrix();
  CHECK(mean.cwiseAbs().maxCoeff() <= 4.0 * std::sqrt(c0 / n) * 3.0);
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) CHECK(std::abs(var[g.index(i, j)] - c0) < 0.05 * c0);
  }
}

TEST_CASE("Whittle-Matern round trip through the Laplacian") {
  const Grid g = Grid::square(8, 0.0, 1.0);
  const auto spec = CovarianceSpec::whittle_matern(0.2, 5.0, 0.1);
  const Eigen::MatrixXd C = build_covariance_matrix(spec, g);
  const Eigen::MatrixXd D = neumann_laplacian(g);
  const Eigen::MatrixXd op = Eigen::MatrixXd::Identity(g.size(), g.size()) - spec.L * spec.L * D;
  Eigen::VectorXd v(g.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = std::sin(1.0 + 0.37 * double(k));
  Eigen::VectorXd r = C * v;
  for (int t = 0; t < 5; ++t) r = op * r;
  const Eigen::VectorXd expect = spec.omega * spec.L * spec.L * v;
  CHECK((r - expect).norm() / expect.norm() < 1e-8);
}

TEST_CASE("spectral eigenvalues match the Laplacian spectrum") {
  const Grid g(6, 5, 0.0, 1.2, 0.0, 1.0);
  const Eigen::MatrixXd D = neumann_laplacian(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-D);
  const Eigen::VectorXd lam = es.eigenvalues();
  const auto spec = CovarianceSpec::laplacian_power(2.0, 1.5);
  const KLBasis b = kl_basis(spec, g, Truncation::modes(g.size() - 1));
  // Largest covariance eigenvalue pairs with the smallest nonzero Laplacian eigenvalue.
  for (Eigen::Index k = 0; k < b.truncation(); ++k) {
    CHECK(std::abs(b.eigenvalues[k] - spec.omega * std::pow(lam[k + 1], -spec.theta)) < 1e-10 * b.eigenvalues[0]);
  }
  const Eigen::MatrixXd C = build_covariance_matrix(spec, g);
  CHECK((C * Eigen::VectorXd::Ones(g.size())).norm() < 1e-12);
  CHECK_THROWS_AS(kl_basis(spec, g, Truncation::modes(g.size())), std::invalid_argument);
  CHECK_THROWS_AS(build_covariance_matrix(spec, Grid::square(1, 0.0, 1.0)), std::invalid_argument);

  const KLBasis wm = kl_basis(CovarianceSpec::whittle_matern(), g, Truncation::fraction(1.0));
  const KLBasis direct = kl_decompose(build_covariance_matrix(CovarianceSpec::whittle_matern(), g), g, Truncation::fraction(1.0));
  CHECK((wm.eigenvalues - direct.eigenvalues.head(wm.truncation())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("off-grid synthesis agrees with on-grid samples at cell centers") {
  const Grid g = Grid::square(12, 0.0, 6.0);
  for (const auto& spec : {CovarianceSpec::spherical(1.0, 2.0), CovarianceSpec::whittle_matern(0.8, 2.0, 1.0)}) {
    const KLBasis b = kl_basis(spec, g);
    const Eigen::VectorXd xi = kl_coefficients(5, 0, b.truncation());
    const Eigen::VectorXd on = synthesize(b, xi);
    const Eigen::VectorXd off = synthesize_at(b, xi, cell_centers(g));
    CHECK((on - off).cwiseAbs().maxCoeff() < 1e-9 * on.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("projection between discretizations") {
  const Grid fine = Grid::square(160, 0.0, 6.0);
  const Grid coarse = Grid::square(80, 0.0, 6.0);
  Eigen::VectorXd ramp(fine.size());
  for (Eigen::Index k = 0; k < fine.size(); ++k) {
    const auto c = fine.center(k);
    ramp[k] = 0.5 + 2.0 * c[0] - 0.25 * c[1];
  }
  const Field pc = project(Field(fine, ramp), coarse);
  for (Eigen::Index k = 0; k < coarse.size(); ++k) {
    const auto c = coarse.center(k);
    REQUIRE(std::abs(pc.values()[k] - (0.5 + 2.0 * c[0] - 0.25 * c[1])) < 1e-12);
  }

  const Field f(fine, ramp);
  CHECK(project(f, fine).values() == ramp);
  CHECK(project(Field::constant(coarse, 3.0), Grid(7, 5, 1.0, 4.0, 0.5, 5.5)).values().isConstant(3.0, 1e-13));
  CHECK_THROWS_AS(project(f, Grid::square(4, 10.0, 12.0)), std::invalid_argument);

  Eigen::MatrixX2d p(4, 2);
  p << 1, 1, 2, 1, 2, 2, 1, 2;
  TriangleList t(2, 3);
  t << 0, 1, 2, 0, 2, 3;
  const auto mesh = std::make_shared<const TriMesh>(p, t, std::vector<BoundaryEdge>{});
  const Field onmesh = project(f, mesh);
  for (Eigen::Index e = 0; e < 2; ++e) {
    const auto c = mesh->centroids().row(e);
    CHECK(std::abs(onmesh.values()[e] - (0.5 + 2.0 * c(0) - 0.25 * c(1))) < 1e-12);
  }
  CHECK(project(onmesh, mesh).values() == onmesh.values());
  CHECK(project(Field::constant(coarse, 3.0), mesh).values().isConstant(3.0, 1e-13));
}

TEST_CASE("parallel kernels match their serial references bitwise") {
  const Grid g = Grid::square(15, 0.0, 6.0);
  const auto spec = CovarianceSpec::spherical(1.0, 2.0);
  CHECK(build_covariance_matrix(spec, g) == serial::build_covariance_matrix(spec, g));
  const KLBasis b = kl_basis(spec, g);
  CHECK(sample_matrix(b, 77, 33, 4) == serial::sample_matrix(b, 77, 33, 4));
}
