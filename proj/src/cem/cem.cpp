#include "reki/cem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <stdexcept>
#include <string>

namespace reki {

CemSetup CemSetup::adjacent(MeshHandle mesh, double z) {
  if (!mesh) throw std::invalid_argument("CemSetup: null mesh");
  const int ne = mesh->electrode_count();
  if (ne < 2) throw std::invalid_argument("CemSetup: mesh has fewer than two electrodes");
  CemSetup s;
  s.mesh = std::move(mesh);
  s.contact_impedance = Eigen::VectorXd::Constant(ne, z);
  s.patterns = Eigen::MatrixXd::Zero(ne, ne - 1);
  for (int p = 0; p + 1 < ne; ++p) {
    s.patterns(p, p) = 1.0;
    s.patterns(p + 1, p) = -1.0;
  }
  s.validate();
  return s;
}

namespace {

void check_patterns(const Eigen::MatrixXd& patterns, int electrodes) {
  if (patterns.rows() != electrodes) throw std::invalid_argument("CemSetup: pattern length does not match electrode count");
  if (!patterns.allFinite()) throw std::invalid_argument("CemSetup: non-finite current pattern");
  for (Eigen::Index p = 0; p < patterns.cols(); ++p) {
    const double scale = std::max(patterns.col(p).cwiseAbs().maxCoeff(), 1e-300);
    if (std::abs(patterns.col(p).sum()) > 1e-12 * scale) {
      throw std::invalid_argument("CemSetup: pattern " + std::to_string(p) + " violates conservation of charge");
    }
  }
}

struct Gradients {
  // Gradients of the three P1 basis functions on element e.
  Eigen::Matrix<double, 3, 2> g;
  double area;
};

Gradients element_gradients(const TriMesh& m, Eigen::Index e) {
  const auto& t = m.triangles();
  const auto& p = m.vertices();
  const Eigen::RowVector2d a = p.row(t(e, 0)), b = p.row(t(e, 1)), c = p.row(t(e, 2));
  const double twice = 2.0 * m.area(e);
  Gradients G;
  G.area = m.area(e);
  G.g.row(0) << (b.y() - c.y()) / twice, (c.x() - b.x()) / twice;
  G.g.row(1) << (c.y() - a.y()) / twice, (a.x() - c.x()) / twice;
  G.g.row(2) << (a.y() - b.y()) / twice, (b.x() - a.x()) / twice;
  return G;
}

}  // namespace

void CemSetup::validate() const {
  if (!mesh) throw std::invalid_argument("CemSetup: null mesh");
  if (contact_impedance.size() != mesh->electrode_count()) throw std::invalid_argument("CemSetup: impedance count does not match mesh electrodes");
  for (Eigen::Index k = 0; k < contact_impedance.size(); ++k) {
    if (!(contact_impedance[k] > 0) || !std::isfinite(contact_impedance[k])) throw std::invalid_argument("CemSetup: contact impedances must be positive");
    if (!(mesh->electrode_length(int(k)) > 0)) throw std::invalid_argument("CemSetup: electrode " + std::to_string(k) + " has no boundary edges");
  }
  check_patterns(patterns, electrodes());
}

Eigen::SparseMatrix<double> assemble_cem_matrix(const Field& logk, const CemSetup& setup, bool gauge) {
  setup.validate();
  const TriMesh& m = *setup.mesh;
  if (!same_discretization(logk.discretization(), Discretization(setup.mesh))) {
    throw std::invalid_argument("CEM: log-conductivity is not defined on the setup mesh");
  }
  const Eigen::VectorXd kappa = logk.values().array().exp();
  if (!kappa.allFinite()) throw std::invalid_argument("CEM: conductivity overflow");
  const Eigen::Index nv = m.vertex_count();
  const int ne = setup.electrodes();
  const Eigen::Index n = nv + ne;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(9 * m.element_count() + 4 * m.boundary().size() + ne * ne));

  for (Eigen::Index e = 0; e < m.element_count(); ++e) {
    const Gradients G = element_gradients(m, e);
    const Eigen::Matrix3d K = kappa[e] * G.area * G.g * G.g.transpose();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) trips.emplace_back(m.triangles()(e, r), m.triangles()(e, c), K(r, c));
    }
  }
  double vv_scale = 0.0;
  for (const auto& edge : m.boundary()) {
    if (edge.electrode < 0) continue;
    const double len = (m.vertices().row(edge.a) - m.vertices().row(edge.b)).norm();
    const double iz = 1.0 / setup.contact_impedance[edge.electrode];
    const Eigen::Index V = nv + edge.electrode;
    trips.emplace_back(edge.a, edge.a, iz * len / 3.0);
    trips.emplace_back(edge.b, edge.b, iz * len / 3.0);
    trips.emplace_back(edge.a, edge.b, iz * len / 6.0);
    trips.emplace_back(edge.b, edge.a, iz * len / 6.0);
    for (int v : {edge.a, edge.b}) {
      trips.emplace_back(v, V, -iz * len / 2.0);
      trips.emplace_back(V, v, -iz * len / 2.0);
    }
    trips.emplace_back(V, V, iz * len);
    vv_scale += iz * len;
  }
  // Ground: nu * g g^T with g = [0; 1] forces sum_k V_k = 0 and removes the constant null space.
  if (gauge) {
    const double nu = vv_scale / (ne * ne);
    for (int a = 0; a < ne; ++a) {
      for (int b = 0; b < ne; ++b) trips.emplace_back(nv + a, nv + b, nu);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());

  return A;
}

std::vector<CemSolution> solve_patterns(const Field& logk, const CemSetup& setup, const Eigen::MatrixXd& patterns) {
  const Eigen::SparseMatrix<double> A = assemble_cem_matrix(logk, setup, true);
  check_patterns(patterns, setup.electrodes());
  const int ne = setup.electrodes();
  const Eigen::Index n = A.rows();
  const Eigen::Index nv = n - ne;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("CEM: factorization failed");
  if ((ldlt.vectorD().array() <= 0).any()) throw std::runtime_error("CEM: gauged system is not positive definite");

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, patterns.cols());
  rhs.bottomRows(ne) = patterns;
  const Eigen::MatrixXd x = ldlt.solve(rhs);
  std::vector<CemSolution> out;
  out.reserve(std::size_t(patterns.cols()));
  for (Eigen::Index p = 0; p < patterns.cols(); ++p) {
    const double bnorm = rhs.col(p).norm();
    if (bnorm > 0 && (A * x.col(p) - rhs.col(p)).norm() > 1e-10 * bnorm) {
      throw std::runtime_error("CEM: solve did not reach relative residual 1e-10");
    }
    out.push_back({x.col(p).head(nv), x.col(p).tail(ne)});
  }
  return out;
}

std::vector<CemSolution> assemble_and_solve(const Field& logk, const CemSetup& setup) {
  return solve_patterns(logk, setup, setup.patterns);
}

Eigen::VectorXd observe_voltages(const std::vector<CemSolution>& solutions) {
  if (solutions.empty()) return {};
  const Eigen::Index ne = solutions.front().V.size();
  Eigen::VectorXd out(ne * Eigen::Index(solutions.size()));
  for (std::size_t p = 0; p < solutions.size(); ++p) {
    if (solutions[p].V.size() != ne) throw std::invalid_argument("observe_voltages: inconsistent electrode counts");
    out.segment(Eigen::Index(p) * ne, ne) = solutions[p].V;
  }
  return out;
}

Eigen::VectorXd electrode_currents(const CemSolution& s, const CemSetup& setup) {
  const TriMesh& m = *setup.mesh;
  Eigen::VectorXd I = Eigen::VectorXd::Zero(setup.electrodes());
  for (const auto& edge : m.boundary()) {
    if (edge.electrode < 0) continue;
    const double len = (m.vertices().row(edge.a) - m.vertices().row(edge.b)).norm();
    const double Vk = s.V[edge.electrode];
    I[edge.electrode] += len * (Vk - 0.5 * (s.v[edge.a] + s.v[edge.b])) / setup.contact_impedance[edge.electrode];
  }
  return I;
}

double dissipated_power(const CemSolution& s, const Field& logk, const CemSetup& setup) {
  const TriMesh& m = *setup.mesh;
  double power = 0.0;
  for (Eigen::Index e = 0; e < m.element_count(); ++e) {
    const Gradients G = element_gradients(m, e);
    Eigen::RowVector2d grad = Eigen::RowVector2d::Zero();
    for (int r = 0; r < 3; ++r) grad += s.v[m.triangles()(e, r)] * G.g.row(r);
    power += std::exp(logk.values()[e]) * G.area * grad.squaredNorm();
  }
  for (const auto& edge : m.boundary()) {
    if (edge.electrode < 0) continue;
    const double len = (m.vertices().row(edge.a) - m.vertices().row(edge.b)).norm();
    const double da = s.v[edge.a] - s.V[edge.electrode];
    const double db = s.v[edge.b] - s.V[edge.electrode];
    power += len * (da * da + da * db + db * db) / 3.0 / setup.contact_impedance[edge.electrode];
  }
  return power;
}

CemModel::CemModel(CemSetup setup) : setup_(std::move(setup)) { setup_.validate(); }

Eigen::VectorXd CemModel::evaluate(const Eigen::VectorXd& logk) const {
  return observe_voltages(assemble_and_solve(Field(setup_.mesh, logk), setup_));
}

}  // namespace reki
