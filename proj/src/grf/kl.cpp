#include "reki/grf.hpp"
#include "reki/rng.hpp"
#include "spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace reki {

namespace {

Eigen::Index retained_count(const Eigen::VectorXd& eigenvalues, const Truncation& truncation, Eigen::Index available) {
  if (truncation.count) {
    const Eigen::Index k = *truncation.count;
    if (k < 0 || k > available) throw std::invalid_argument("truncation count " + std::to_string(k) + " exceeds available modes");
    return k;
  }
  const double f = truncation.trace_fraction;
  if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("truncation trace fraction must lie in (0, 1]");
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    acc += eigenvalues[k];
    if (acc >= f * total * (1.0 - 1e-14)) return k + 1;
  }
  return eigenvalues.size();
}

// Fix the sign so the largest-magnitude entry (first on ties) is positive.
void canonical_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0) v = -v;
}

}  // namespace

KLBasis kl_decompose(const Eigen::MatrixXd& covariance, const Grid& grid, const Truncation& truncation) {
  const Eigen::Index n = covariance.rows();
  if (covariance.cols() != n) throw std::invalid_argument("kl_decompose: matrix not square");
  if (n != grid.size()) throw std::invalid_argument("kl_decompose: matrix size does not match grid");
  if (!covariance.allFinite()) throw std::invalid_argument("kl_decompose: non-finite entries");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("kl_decompose: matrix not symmetric");
  }

  Eigen::MatrixXd A = covariance;
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', lapack_int(n), A.data(), lapack_int(n), w.data());
  if (info != 0) throw std::runtime_error("kl_decompose: eigensolver failed (info=" + std::to_string(info) + ")");

  // LAPACK returns ascending order.
  Eigen::VectorXd lambda = w.reverse();
  Eigen::MatrixXd V = A.rowwise().reverse();
  const double lmax = std::max(lambda.size() ? lambda[0] : 0.0, 0.0);
  if (lambda.size() && lambda[n - 1] < -1e-8 * lmax) {
    throw std::runtime_error("kl_decompose: covariance has a significantly negative eigenvalue");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda[k] < 1e-12 * lmax) lambda[k] = 0.0;
  }

  KLBasis basis;
  basis.grid = grid;
  const Eigen::Index k = retained_count(lambda, truncation, n);
  basis.eigenvalues = lambda.head(k);
  basis.eigenvectors = V.leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) canonical_sign(basis.eigenvectors.col(c));
  basis.sample_scale = 1.0 / std::sqrt(grid.cell_area());
  return basis;
}

KLBasis kl_basis(const CovarianceSpec& spec, const Grid& grid, const Truncation& truncation) {
  spec.validate();
  if (spec.family == Family::Spherical) {
    KLBasis basis = kl_decompose(build_covariance_matrix(spec, grid), grid, truncation);
    basis.spec = spec;
    return basis;
  }
  const auto modes = detail::spectral_modes(spec, grid);
  Eigen::VectorXd lambda(Eigen::Index(modes.size()));
  for (std::size_t m = 0; m < modes.size(); ++m) lambda[Eigen::Index(m)] = modes[m].eigenvalue;
  const Eigen::Index k = retained_count(lambda, truncation, lambda.size());

  KLBasis basis;
  basis.grid = grid;
  basis.spec = spec;
  basis.eigenvalues = lambda.head(k);
  basis.eigenvectors.resize(grid.size(), k);
  basis.modes.reserve(std::size_t(k));
  for (Eigen::Index m = 0; m < k; ++m) {
    const auto& mode = modes[std::size_t(m)];
    basis.modes.push_back({mode.p, mode.q});
    for (int j = 0; j < grid.ny; ++j) {
      const double vy = detail::cosine_mode(mode.q, grid.ny, (j + 0.5) / grid.ny);
      for (int i = 0; i < grid.nx; ++i) {
        basis.eigenvectors(grid.index(i, j), m) = detail::cosine_mode(mode.p, grid.nx, (i + 0.5) / grid.nx) * vy;
      }
    }
  }
  basis.sample_scale = 1.0 / std::sqrt(grid.cell_area());
  return basis;
}

Eigen::VectorXd kl_coefficients(std::uint64_t seed, std::uint64_t index, Eigen::Index modes) {
  Eigen::VectorXd xi(modes);
  for (Eigen::Index k = 0; k < modes; ++k) xi[k] = rng::normal(seed, index, std::uint64_t(k));
  return xi;
}

Eigen::VectorXd synthesize(const KLBasis& basis, const Eigen::VectorXd& xi) {
  const Eigen::Index k = basis.truncation();
  if (xi.size() < k) throw std::invalid_argument("synthesize: too few coefficients");
  const Eigen::VectorXd amp = basis.eigenvalues.cwiseSqrt().cwiseProduct(xi.head(k));
  return basis.sample_scale * (basis.eigenvectors * amp);
}

namespace {

template <bool Parallel>
Eigen::MatrixXd sample_columns(const KLBasis& basis, std::uint64_t seed, Eigen::Index count, std::uint64_t first) {
  if (count < 1) throw std::invalid_argument("sample: count must be at least 1");
  Eigen::MatrixXd out(basis.grid.size(), count);
#pragma omp parallel for schedule(static) if (Parallel)
  for (Eigen::Index s = 0; s < count; ++s) {
    out.col(s) = synthesize(basis, kl_coefficients(seed, first + std::uint64_t(s), basis.truncation()));
  }
  return out;
}

}  // namespace

Eigen::MatrixXd sample_matrix(const KLBasis& basis, std::uint64_t seed, Eigen::Index count, std::uint64_t first) {
  return sample_columns<true>(basis, seed, count, first);
}

namespace serial {
Eigen::MatrixXd sample_matrix(const KLBasis& basis, std::uint64_t seed, Eigen::Index count, std::uint64_t first) {
  return sample_columns<false>(basis, seed, count, first);
}
}  // namespace serial

std::vector<Field> sample(const KLBasis& basis, std::uint64_t seed, Eigen::Index count) {
  const Eigen::MatrixXd cols = sample_matrix(basis, seed, count);
  std::vector<Field> out;
  out.reserve(std::size_t(count));
  for (Eigen::Index s = 0; s < count; ++s) out.emplace_back(basis.grid, cols.col(s));
  return out;
}

Eigen::VectorXd synthesize_at(const KLBasis& basis, const Eigen::VectorXd& xi, const Eigen::MatrixX2d& points) {
  if (!basis.spec) throw std::logic_error("synthesize_at: basis carries no covariance spec");
  const Eigen::Index k = basis.truncation();
  if (xi.size() < k) throw std::invalid_argument("synthesize_at: too few coefficients");
  const Grid& g = basis.grid;
  Eigen::VectorXd out(points.rows());

  if (basis.spec->family == Family::Spherical) {
    // u(x) = s w sum_j c(x, x_j) beta_j with beta = V (xi / sqrt(lambda)).
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
    for (Eigen::Index m = 0; m < k; ++m) {
      if (basis.eigenvalues[m] > 0) coef[m] = xi[m] / std::sqrt(basis.eigenvalues[m]);
    }
    const Eigen::VectorXd beta = basis.eigenvectors * coef;
    const Eigen::MatrixX2d centers = cell_centers(g);
    const double factor = basis.sample_scale * g.cell_area();
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < centers.rows(); ++j) {
        const double h = std::hypot(points(r, 0) - centers(j, 0), points(r, 1) - centers(j, 1));
        acc += spherical_kernel(h, basis.spec->c0, basis.spec->a) * beta[j];
      }
      out[r] = factor * acc;
    }
    return out;
  }

  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const double sx = (points(r, 0) - g.x0) / (g.x1 - g.x0);
    const double sy = (points(r, 1) - g.y0) / (g.y1 - g.y0);
    double acc = 0.0;
    for (Eigen::Index m = 0; m < k; ++m) {
      const auto [p, q] = basis.modes[std::size_t(m)];
      acc += std::sqrt(basis.eigenvalues[m]) * xi[m] * detail::cosine_mode(p, g.nx, sx) * detail::cosine_mode(q, g.ny, sy);
    }
    out[r] = basis.sample_scale * acc;
  }
  return out;
}

}  // namespace reki
