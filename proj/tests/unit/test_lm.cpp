#include "doctest.h"

#include "reki/darcy.hpp"
#include "reki/grf.hpp"
#include "reki/lm.hpp"
#include "support/linear_problems.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

using namespace reki;
using reki::testing::randn;
using reki::testing::random_spd;
using reki::testing::strip;

namespace {

class Square final : public ForwardModel {
 public:
  Eigen::Index input_size() const override { return 1; }
  Eigen::Index output_size() const override { return 1; }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override { return u.array().square().matrix(); }
};

ReducedSpace identity_space(int n) {
  return {strip(n), Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n)};
}

ReducedSpace kl_space(const KLBasis& b, Eigen::Index k) {
  return {b.grid, Eigen::VectorXd::Zero(b.grid.size()), b.sample_scale * b.eigenvectors.leftCols(k),
          Eigen::MatrixXd(b.eigenvalues.head(k).asDiagonal())};
}

}  // namespace

TEST_CASE("reduced space") {
  Ensemble e(strip(6), randn(6, 4, 1));
  const ReducedSpace s = ReducedSpace::from_ensemble(e);
  CHECK_NOTHROW(s.validate());
  const Eigen::MatrixXd cov = s.basis * s.prior_cov * s.basis.transpose();
  const Eigen::MatrixXd D = e.members().colwise() - e.mean();
  CHECK((cov - D * D.transpose() / 3.0).norm() < 1e-12);
  CHECK((s.lift(Eigen::VectorXd::Zero(4)) - e.mean()).norm() == 0.0);
  ReducedSpace bad = s;
  bad.prior_cov(0, 0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("finite-difference Jacobian") {
  SUBCASE("exact for linear maps") {
    const Eigen::MatrixXd A = randn(5, 8, 2);
    const LinearModel g(A);
    ReducedSpace s{strip(8), randn(8, 1, 3).col(0), randn(8, 3, 4), random_spd(3, 5)};
    for (double step : {1e-1, 1e-3, 1e-5}) {
      const Eigen::MatrixXd J = finite_difference_jacobian(g, s, randn(3, 1, 6).col(0), step);
      CHECK((J - A * s.basis).norm() <= 1e-10 * (A * s.basis).norm() / std::min(1.0, step * 1e4));
    }
  }
  SUBCASE("quadratic scalar") {
    const ReducedSpace s = identity_space(1);
    const Eigen::MatrixXd J = finite_difference_jacobian(Square(), s, Eigen::VectorXd::Ones(1), 1e-4);
    CHECK(J(0, 0) == doctest::Approx(2.0).epsilon(1e-7));
  }
  SUBCASE("second-order convergence on Darcy") {
    const Grid g = Grid::square(12, 0.0, 6.0);
    const DarcyModel model(DarcyProblem::standard(12), MeasurementLayout::lattice(4));
    const KLBasis b = kl_basis(CovarianceSpec::spherical(1.0, 2.0), g, Truncation::modes(6));
    const ReducedSpace s = kl_space(b, 6);
    const Eigen::VectorXd a = 0.5 * randn(6, 1, 7).col(0);
    const Eigen::MatrixXd J1 = finite_difference_jacobian(model, s, a, 4e-2);
    const Eigen::MatrixXd J2 = finite_difference_jacobian(model, s, a, 2e-2);
    const Eigen::MatrixXd J3 = finite_difference_jacobian(model, s, a, 1e-2);
    const double ratio = (J1 - J2).norm() / (J2 - J3).norm();
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }
  SUBCASE("parallel and serial agree bitwise") {
    const DarcyModel model(DarcyProblem::standard(10), MeasurementLayout::lattice(3));
    const KLBasis b = kl_basis(CovarianceSpec::spherical(1.0, 2.0), Grid::square(10, 0.0, 6.0), Truncation::modes(5));
    const ReducedSpace s = kl_space(b, 5);
    const Eigen::VectorXd a = randn(5, 1, 8).col(0);
    CHECK(finite_difference_jacobian(model, s, a, 1e-5) == serial::finite_difference_jacobian(model, s, a, 1e-5));
  }
  CHECK_THROWS_AS(finite_difference_jacobian(Square(), identity_space(1), Eigen::VectorXd::Ones(1), 0.0), std::invalid_argument);
}

TEST_CASE("covariance form and normal-equation form give the same step") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Eigen::MatrixXd J = randn(4, 6, 1000 + seed);
    const Eigen::MatrixXd C = random_spd(6, 2000 + seed);
    const Eigen::VectorXd g = 0.1 + randn(4, 1, 3000 + seed).col(0).array().abs();
    const Eigen::VectorXd r = randn(4, 1, 4000 + seed).col(0);
    const double alpha = std::exp(randn(1, 1, 5000 + seed)(0, 0));
    const Eigen::VectorXd v6 = lm_increment(J, C, g, r, alpha);
    const Eigen::VectorXd v2 = lm_increment_normal(J, C, g, r, alpha);
    CHECK((v6 - v2).norm() <= 1e-8 * v2.norm());
  }
}

TEST_CASE("linearized residual of the step equals the acceptance quantity") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Eigen::MatrixXd J = randn(5, 7, 6000 + seed);
    const Eigen::MatrixXd C = random_spd(7, 7000 + seed);
    const Eigen::VectorXd g = 0.05 + randn(5, 1, 8000 + seed).col(0).array().abs();
    const Eigen::VectorXd r = randn(5, 1, 9000 + seed).col(0);
    const double alpha = std::exp(2 * randn(1, 1, 9500 + seed)(0, 0));
    const Eigen::VectorXd v = lm_increment(J, C, g, r, alpha);
    const double lhs = ((r - J * v).array() / g.array().sqrt()).matrix().norm();
    const Eigen::MatrixXd K = J * C * J.transpose();
    CHECK(lhs == doctest::Approx(alpha_condition_lhs(K, r, g, alpha)).epsilon(1e-8));
  }
}

TEST_CASE("small alpha fits linear data exactly") {
  const Eigen::MatrixXd A = randn(4, 9, 11);
  const ReducedSpace s{strip(9), Eigen::VectorXd::Zero(9), randn(9, 6, 12), random_spd(6, 13)};
  const Eigen::MatrixXd J = A * s.basis;
  const Eigen::VectorXd r = randn(4, 1, 14).col(0);
  const Eigen::VectorXd v = lm_increment(J, s.prior_cov, Eigen::VectorXd::Ones(4), r, 1e-10);
  CHECK((J * v - r).norm() <= 1e-8 * r.norm());
}

TEST_CASE("lm run on a linear-Gaussian problem") {
  const auto p = reki::testing::LinearGaussian::make(10, 5, 20);
  const ReducedSpace s{strip(10), p.m0, Eigen::MatrixXd::Identity(10, 10), p.C};
  LmConfig cfg;
  cfg.eki = EkiConfig(0.7, 1.0 / 0.7 + 0.05);
  RunOptions opts;
  opts.error = [&](const Eigen::VectorXd& u) { return (u - p.u_true).norm() / p.u_true.norm(); };
  const LmResult r = run_lm(s, *p.model, p.obs, cfg, opts);
  CHECK(r.converged);
  CHECK(r.records.back().misfit <= cfg.eki.tau * p.obs.eta);
  for (std::size_t n = 1; n < r.records.size(); ++n) {
    CHECK(r.records[n].misfit < r.records[n - 1].misfit);
  }
  // A stepping record includes its own Jacobian; the stopping record does not take one.
  for (std::size_t n = 0; n < r.records.size(); ++n) {
    const long jac = r.records[n].stopped ? long(n) : long(n + 1);
    CHECK(r.records[n].jacobian_evals == jac);
    CHECK(r.records[n].forward_evals == long(n + 1) + 20L * jac);
  }
  std::ostringstream out;
  write_records_csv(out, r.records, true);
  CHECK(out.str().rfind("n,alpha,doublings,misfit,mean_output_misfit,rel_error,forward_evals,stopped,jacobian_evals\n", 0) == 0);
}

TEST_CASE("run comparison") {
  const auto p = reki::testing::LinearGaussian::make(6, 4, 30);
  const ReducedSpace s{strip(6), p.m0, Eigen::MatrixXd::Identity(6, 6), p.C};
  LmConfig cfg;
  const LmResult a = run_lm(s, *p.model, p.obs, cfg);
  const RunComparison same = compare_runs(a.records, p.obs, a.records, p.obs);
  for (const auto& row : same.rows) CHECK(row.eki_misfit == row.lm_misfit);
  CHECK(same.terminal_misfit_ratio() == 1.0);
  ObservationSet other = p.obs;
  other.y[0] += 1.0;
  CHECK_THROWS_AS(compare_runs(a.records, p.obs, a.records, other), std::invalid_argument);
  std::ostringstream out;
  write_comparison_csv(out, same);
  CHECK(out.str().rfind("n,eki_misfit,lm_misfit,eki_error,lm_error\n", 0) == 0);
}
