#include "reki/grf.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace reki {

std::string to_string(Family family) {
  switch (family) {
    case Family::Spherical: return "spherical";
    case Family::WhittleMatern: return "whittle-matern";
    case Family::LaplacianPower: return "laplacian-power";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "spherical") return Family::Spherical;
  if (name == "whittle-matern" || name == "whittle_matern" || name == "matern") return Family::WhittleMatern;
  if (name == "laplacian-power" || name == "laplacian_power" || name == "laplacian") return Family::LaplacianPower;
  throw std::invalid_argument("unknown covariance family '" + name + "'");
}

CovarianceSpec CovarianceSpec::spherical(double c0, double a) {
  CovarianceSpec s;
  s.family = Family::Spherical;
  s.c0 = c0;
  s.a = a;
  s.validate();
  return s;
}

CovarianceSpec CovarianceSpec::whittle_matern(double L, double theta, double omega) {
  CovarianceSpec s;
  s.family = Family::WhittleMatern;
  s.L = L;
  s.theta = theta;
  s.omega = omega;
  s.validate();
  return s;
}

CovarianceSpec CovarianceSpec::laplacian_power(double theta, double omega) {
  CovarianceSpec s;
  s.family = Family::LaplacianPower;
  s.theta = theta;
  s.omega = omega;
  s.validate();
  return s;
}

namespace {

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || !(v > 0)) throw std::invalid_argument(std::string("CovarianceSpec: ") + name + " must be finite and positive");
}

}  // namespace

void CovarianceSpec::validate() const {
  switch (family) {
    case Family::Spherical:
      require_positive(c0, "c0");
      require_positive(a, "a");
      break;
    case Family::WhittleMatern:
      require_positive(L, "L");
      require_positive(theta, "theta");
      require_positive(omega, "omega");
      break;
    case Family::LaplacianPower:
      require_positive(theta, "theta");
      require_positive(omega, "omega");
      break;
  }
}

double spherical_kernel(double h, double c0, double a) {
  if (h >= a) return 0.0;
  const double r = h / a;
  return c0 * (1.0 - 1.5 * r + 0.5 * r * r * r);
}

Eigen::VectorXd neumann_eigenvalues_1d(int n, double h) {
  Eigen::VectorXd lam(n);
  for (int p = 0; p < n; ++p) {
    const double s = std::sin(p * std::numbers::pi / (2.0 * n));
    lam[p] = 4.0 / (h * h) * s * s;
  }
  return lam;
}

Eigen::MatrixXd neumann_laplacian(const Grid& grid) {
  const Eigen::Index n = grid.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double cx = 1.0 / (grid.hx() * grid.hx());
  const double cy = 1.0 / (grid.hy() * grid.hy());
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const auto k = grid.index(i, j);
      auto link = [&](int ii, int jj, double c) {
        const auto m = grid.index(ii, jj);
        D(k, m) += c;
        D(k, k) -= c;
      };
      if (i > 0) link(i - 1, j, cx);
      if (i + 1 < grid.nx) link(i + 1, j, cx);
      if (j > 0) link(i, j - 1, cy);
      if (j + 1 < grid.ny) link(i, j + 1, cy);
    }
  }
  return D;
}

namespace detail {

double cosine_mode(int p, int n, double s) {
  const double norm = p == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  return norm * std::cos(p * std::numbers::pi * s);
}

std::vector<SpectralMode> spectral_modes(const CovarianceSpec& spec, const Grid& grid) {
  spec.validate();
  if (spec.family == Family::Spherical) throw std::logic_error("spectral_modes: spherical family has no spectral form");
  if (spec.family == Family::LaplacianPower && grid.size() < 2) {
    throw std::invalid_argument("LaplacianPower: grid has no non-constant mode");
  }
  const Eigen::VectorXd lx = neumann_eigenvalues_1d(grid.nx, grid.hx());
  const Eigen::VectorXd ly = neumann_eigenvalues_1d(grid.ny, grid.hy());
  std::vector<SpectralMode> modes;
  modes.reserve(static_cast<std::size_t>(grid.size()));
  for (int q = 0; q < grid.ny; ++q) {
    for (int p = 0; p < grid.nx; ++p) {
      const double lam = lx[p] + ly[q];
      double mu = 0.0;
      if (spec.family == Family::WhittleMatern) {
        const double L2 = spec.L * spec.L;
        mu = spec.omega * L2 * std::pow(1.0 + L2 * lam, -spec.theta);
      } else {
        if (p == 0 && q == 0) continue;
        mu = spec.omega * std::pow(lam, -spec.theta);
      }
      modes.push_back({p, q, mu});
    }
  }
  std::stable_sort(modes.begin(), modes.end(), [](const SpectralMode& l, const SpectralMode& r) { return l.eigenvalue > r.eigenvalue; });
  return modes;
}

}  // namespace detail

namespace {

Eigen::MatrixXd spectral_covariance(const CovarianceSpec& spec, const Grid& grid) {
  const auto modes = detail::spectral_modes(spec, grid);
  const Eigen::Index n = grid.size();
  Eigen::MatrixXd V(n, Eigen::Index(modes.size()));
  Eigen::VectorXd mu(Eigen::Index(modes.size()));
  for (std::size_t m = 0; m < modes.size(); ++m) {
    mu[Eigen::Index(m)] = modes[m].eigenvalue;
    for (int j = 0; j < grid.ny; ++j) {
      const double vy = detail::cosine_mode(modes[m].q, grid.ny, (j + 0.5) / grid.ny);
      for (int i = 0; i < grid.nx; ++i) {
        V(grid.index(i, j), Eigen::Index(m)) = detail::cosine_mode(modes[m].p, grid.nx, (i + 0.5) / grid.nx) * vy;
      }
    }
  }
  Eigen::MatrixXd C = V * mu.asDiagonal() * V.transpose();
  // Symmetrize the rounding of the triple product.
  return 0.5 * (C + C.transpose());
}

template <bool Parallel>
Eigen::MatrixXd spherical_covariance(const CovarianceSpec& spec, const Grid& grid) {
  const Eigen::MatrixX2d pts = cell_centers(grid);
  const Eigen::Index n = grid.size();
  const double w = grid.cell_area();
  Eigen::MatrixXd C(n, n);
#pragma omp parallel for schedule(static) if (Parallel)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = std::hypot(pts(i, 0) - pts(j, 0), pts(i, 1) - pts(j, 1));
      C(i, j) = w * spherical_kernel(h, spec.c0, spec.a);
    }
  }
  return C;
}

template <bool Parallel>
Eigen::MatrixXd build(const CovarianceSpec& spec, const Grid& grid) {
  spec.validate();
  if (grid.size() < 1) throw std::invalid_argument("build_covariance_matrix: empty grid");
  if (spec.family == Family::Spherical) return spherical_covariance<Parallel>(spec, grid);
  return spectral_covariance(spec, grid);
}

}  // namespace

Eigen::MatrixXd build_covariance_matrix(const CovarianceSpec& spec, const Grid& grid) { return build<true>(spec, grid); }

namespace serial {
Eigen::MatrixXd build_covariance_matrix(const CovarianceSpec& spec, const Grid& grid) { return build<false>(spec, grid); }
}  // namespace serial

}  // namespace reki
