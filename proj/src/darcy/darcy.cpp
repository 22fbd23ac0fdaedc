#include "reki/darcy.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace reki {

BoundaryCondition BoundaryCondition::dirichlet(double head) {
  return {BoundaryKind::Dirichlet, [head](double, double) { return head; }};
}
BoundaryCondition BoundaryCondition::dirichlet(Profile head) { return {BoundaryKind::Dirichlet, std::move(head)}; }
BoundaryCondition BoundaryCondition::flux(double inward) {
  return {BoundaryKind::Flux, [inward](double, double) { return inward; }};
}
BoundaryCondition BoundaryCondition::flux(Profile inward) { return {BoundaryKind::Flux, std::move(inward)}; }

double layered_source_value(double y) {
  if (y <= 4.0) return 0.0;
  if (y < 5.0) return 137.0;
  return 274.0;
}

Eigen::VectorXd layered_source(const Grid& grid) {
  // Integral of f over [0, y] in closed form.
  auto F = [](double y) {
    return 137.0 * std::clamp(y - 4.0, 0.0, 1.0) + 274.0 * std::clamp(y - 5.0, 0.0, 1.0);
  };
  Eigen::VectorXd f(grid.size());
  const double hy = grid.hy();
  for (int j = 0; j < grid.ny; ++j) {
    const double lo = grid.y0 + j * hy;
    const double avg = (F(lo + hy) - F(lo)) / hy;
    for (int i = 0; i < grid.nx; ++i) f[grid.index(i, j)] = avg;
  }
  return f;
}

DarcyProblem DarcyProblem::standard(int n) {
  DarcyProblem p;
  p.grid = Grid::square(n, 0.0, 6.0);
  p.source = layered_source(p.grid);
  p.side(Side::Left) = BoundaryCondition::flux(500.0);
  p.side(Side::Right) = BoundaryCondition::flux(0.0);
  p.side(Side::Bottom) = BoundaryCondition::dirichlet(100.0);
  p.side(Side::Top) = BoundaryCondition::flux(0.0);
  return p;
}

MeasurementLayout MeasurementLayout::lattice(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("MeasurementLayout: lattice needs n >= 1");
  MeasurementLayout m;
  m.points.resize(Eigen::Index(n) * n, 2);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      m.points(Eigen::Index(j) * n + i, 0) = lo + (hi - lo) * (i + 1) / (n + 1);
      m.points(Eigen::Index(j) * n + i, 1) = lo + (hi - lo) * (j + 1) / (n + 1);
    }
  }
  return m;
}

void MeasurementLayout::validate(const Grid& grid) const {
  if (points.rows() < 1) throw std::invalid_argument("MeasurementLayout: no points");
  for (Eigen::Index m = 0; m < points.rows(); ++m) {
    const double x = points(m, 0);
    const double y = points(m, 1);
    if (!(x > grid.x0 && x < grid.x1 && y > grid.y0 && y < grid.y1)) {
      throw std::out_of_range("MeasurementLayout: point " + std::to_string(m) + " is not strictly inside the domain");
    }
  }
}

namespace {

struct Face {
  Side side;
  int i, j;
  double x, y;     // face midpoint
  double length;
  double half;     // center-to-face distance
};

template <class Fn>
void for_each_boundary_face(const Grid& g, Fn&& fn) {
  const double hx = g.hx();
  const double hy = g.hy();
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y0 + (j + 0.5) * hy;
    fn(Face{Side::Left, 0, j, g.x0, y, hy, 0.5 * hx});
    fn(Face{Side::Right, g.nx - 1, j, g.x1, y, hy, 0.5 * hx});
  }
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x0 + (i + 0.5) * hx;
    fn(Face{Side::Bottom, i, 0, x, g.y0, hx, 0.5 * hy});
    fn(Face{Side::Top, i, g.ny - 1, x, g.y1, hx, 0.5 * hy});
  }
}

Eigen::VectorXd conductivity(const Eigen::VectorXd& logk) {
  if (!logk.allFinite()) throw std::invalid_argument("darcy: non-finite log-conductivity");
  Eigen::VectorXd k = logk.array().exp();
  if (!k.allFinite() || k.minCoeff() <= 0.0) throw std::invalid_argument("darcy: conductivity overflow or underflow");
  return k;
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

bool has_dirichlet(const DarcyProblem& p) {
  return std::any_of(p.bc.begin(), p.bc.end(), [](const BoundaryCondition& b) { return b.kind == BoundaryKind::Dirichlet; });
}

}  // namespace

DarcySystem assemble(const Eigen::VectorXd& logk, const DarcyProblem& problem) {
  const Grid& g = problem.grid;
  if (logk.size() != g.size()) throw std::invalid_argument("darcy: log-conductivity does not match the grid");
  if (problem.source.size() != g.size()) throw std::invalid_argument("darcy: source does not match the grid");
  const Eigen::VectorXd k = conductivity(logk);
  const double tx = g.hy() / g.hx();
  const double ty = g.hx() / g.hy();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(5 * g.size()));
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd rhs = problem.source * g.cell_area();

  auto couple = [&](Eigen::Index a, Eigen::Index b, double t) {
    trips.emplace_back(a, b, -t);
    trips.emplace_back(b, a, -t);
    diag[a] += t;
    diag[b] += t;
  };
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto c = g.index(i, j);
      if (i + 1 < g.nx) couple(c, g.index(i + 1, j), tx * harmonic(k[c], k[g.index(i + 1, j)]));
      if (j + 1 < g.ny) couple(c, g.index(i, j + 1), ty * harmonic(k[c], k[g.index(i, j + 1)]));
    }
  }
  for_each_boundary_face(g, [&](const Face& f) {
    const auto c = g.index(f.i, f.j);
    const auto& bc = problem.side(f.side);
    const double v = bc.value(f.x, f.y);
    if (bc.kind == BoundaryKind::Dirichlet) {
      const double t = k[c] * f.length / f.half;
      diag[c] += t;
      rhs[c] += t * v;
    } else {
      rhs[c] += v * f.length;
    }
  });
  for (Eigen::Index c = 0; c < g.size(); ++c) trips.emplace_back(c, c, diag[c]);

  DarcySystem sys;
  sys.matrix.resize(g.size(), g.size());
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  sys.rhs = std::move(rhs);
  return sys;
}

Field solve_head(const Field& logk, const DarcyProblem& problem) {
  if (!same_discretization(logk.discretization(), Discretization(problem.grid))) {
    throw std::invalid_argument("solve_head: log-conductivity is not on the problem grid");
  }
  if (!has_dirichlet(problem)) throw std::invalid_argument("solve_head: at least one Dirichlet side is required");
  const DarcySystem sys = assemble(logk.values(), problem);
  const double bnorm = std::max(sys.rhs.norm(), 1e-300);

  Eigen::VectorXd h;
  // Direct factorization up to a few hundred thousand cells; CG beyond.
  if (problem.grid.size() <= 250000) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.matrix);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("solve_head: factorization failed");
    h = ldlt.solve(sys.rhs);
    if ((sys.matrix * h - sys.rhs).norm() > 1e-10 * bnorm) {
      Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(sys.matrix);
      cg.setTolerance(1e-12);
      h = cg.solveWithGuess(sys.rhs, h);
    }
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg(sys.matrix);
    cg.setTolerance(1e-12);
    cg.setMaxIterations(20 * problem.grid.size());
    h = cg.solve(sys.rhs);
  }
  if (!h.allFinite() || (sys.matrix * h - sys.rhs).norm() > 1e-10 * bnorm) {
    throw std::runtime_error("solve_head: linear solve did not reach relative residual 1e-10");
  }
  return Field(problem.grid, std::move(h));
}

Eigen::VectorXd observe(const Field& head, const MeasurementLayout& layout) {
  const Grid& g = head.grid();
  layout.validate(g);
  Eigen::VectorXd out(layout.size());
  for (Eigen::Index m = 0; m < layout.size(); ++m) out[m] = interpolate(g, head.values(), layout.points(m, 0), layout.points(m, 1));
  return out;
}

double FluxBalance::relative_defect() const {
  const double scale = std::max({std::abs(dirichlet_outflow), std::abs(prescribed_inflow) + std::abs(source_integral), 1e-300});
  return std::abs(dirichlet_outflow - prescribed_inflow - source_integral) / scale;
}

FluxBalance flux_balance(const Field& head, const Field& logk, const DarcyProblem& problem) {
  const Grid& g = problem.grid;
  const Eigen::VectorXd k = conductivity(logk.values());
  FluxBalance out;
  out.source_integral = problem.source.sum() * g.cell_area();
  for_each_boundary_face(g, [&](const Face& f) {
    const auto c = g.index(f.i, f.j);
    const auto& bc = problem.side(f.side);
    const double v = bc.value(f.x, f.y);
    if (bc.kind == BoundaryKind::Dirichlet) {
      out.dirichlet_outflow += k[c] * f.length / f.half * (head.values()[c] - v);
    } else {
      out.prescribed_inflow += v * f.length;
    }
  });
  return out;
}

DarcyModel::DarcyModel(DarcyProblem problem, MeasurementLayout layout) : problem_(std::move(problem)), layout_(std::move(layout)) {
  layout_.validate(problem_.grid);
  if (!has_dirichlet(problem_)) throw std::invalid_argument("DarcyModel: at least one Dirichlet side is required");
}

Eigen::VectorXd DarcyModel::evaluate(const Eigen::VectorXd& logk) const {
  return observe(solve_head(Field(problem_.grid, logk), problem_), layout_);
}

}  // namespace reki
