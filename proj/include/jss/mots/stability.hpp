#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "jss/errors.hpp"
#include "jss/geometry/metric.hpp"

namespace jss {

// Discretized cross-section: an open interval (Dirichlet ends), a closed
// circle, or a rectangular patch with Dirichlet boundary.
struct SigmaMesh {
  enum class Kind { interval, circle, patch };
  Kind kind = Kind::interval;
  int nx = 0, ny = 1;  // nodes; for intervals nx includes both endpoints
  double lx = 1.0, ly = 1.0;

  static SigmaMesh interval(double length, int nodes) { return {Kind::interval, nodes, 1, length, 1.0}; }
  static SigmaMesh circle(double length, int nodes) { return {Kind::circle, nodes, 1, length, 1.0}; }
  static SigmaMesh patch(double lx, double ly, int nx, int ny) { return {Kind::patch, nx, ny, lx, ly}; }

  int size() const { return nx * ny; }
  double hx() const { return kind == Kind::circle ? lx / nx : lx / (nx - 1); }
  double hy() const { return kind == Kind::patch ? ly / (ny - 1) : 1.0; }
  bool on_boundary(int i) const {
    int ix = i % nx, iy = i / nx;
    switch (kind) {
      case Kind::interval: return ix == 0 || ix == nx - 1;
      case Kind::circle: return false;
      case Kind::patch: return ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
    }
    return false;
  }
};

struct StabilityCoefficients {
  SigmaMesh mesh;
  std::vector<Vec2> X;  // tangential drift; x-component only on curves
  std::vector<double> h_plus_k_sq, scal_sigma, J_nu, mu, div_X, X_sq;

  explicit StabilityCoefficients(SigmaMesh m = {}) : mesh(m) {
    int n = m.size();
    X.assign(n, Vec2::Zero());
    h_plus_k_sq.assign(n, 0.0);
    scal_sigma.assign(n, 0.0);
    J_nu.assign(n, 0.0);
    mu.assign(n, 0.0);
    div_X.assign(n, 0.0);
    X_sq.assign(n, 0.0);
  }

  double potential(int i) const {
    return 0.5 * scal_sigma[i] - 0.5 * h_plus_k_sq[i] - J_nu[i] - mu[i] + div_X[i] - X_sq[i];
  }

  // Convenience for tests and the arc-stability form: puts v into the
  // zeroth-order term through the scalar curvature slot.
  void set_potential(double v) {
    for (size_t i = 0; i < scal_sigma.size(); ++i) {
      scal_sigma[i] = 2.0 * v;
      h_plus_k_sq[i] = J_nu[i] = mu[i] = div_X[i] = X_sq[i] = 0.0;
    }
  }
  void set_potential(const std::vector<double>& v) {
    for (size_t i = 0; i < scal_sigma.size(); ++i) {
      scal_sigma[i] = 2.0 * v[i];
      h_plus_k_sq[i] = J_nu[i] = mu[i] = div_X[i] = X_sq[i] = 0.0;
    }
  }
};

struct StabilityOperator {
  Eigen::SparseMatrix<double> A;  // acts on unknown nodes only
  std::vector<int> unknown_to_node;
  int nodes = 0;
  double potential_sup = 0.0;
};

namespace detail {

// Drift contribution b * d/ds along one axis: centered unless the cell Peclet
// number |b| h / 2 exceeds 2, then upwind.
inline void drift_stencil(double b, double h, double& cm, double& c0, double& cp) {
  if (std::abs(b) * h / 2.0 <= 2.0) {
    cm = -b / (2 * h);
    c0 = 0.0;
    cp = b / (2 * h);
  } else if (b > 0) {
    cm = -b / h;
    c0 = b / h;
    cp = 0.0;
  } else {
    cm = 0.0;
    c0 = -b / h;
    cp = b / h;
  }
}

}  // namespace detail

inline StabilityOperator assemble_stability_operator(const StabilityCoefficients& c) {
  const SigmaMesh& m = c.mesh;
  const int n = m.size();
  if (m.kind == SigmaMesh::Kind::interval && m.nx < 3) throw MeshTopology("interval needs at least 3 nodes");
  if (m.kind == SigmaMesh::Kind::circle && m.nx < 3) throw MeshTopology("circle needs at least 3 nodes");
  if (m.kind == SigmaMesh::Kind::patch && (m.nx < 3 || m.ny < 3)) throw MeshTopology("patch needs 3x3 nodes");
  if (!(m.lx > 0.0) || !(m.ly > 0.0)) throw MeshTopology("non-positive extent");
  auto check = [&](const std::vector<double>& f, const char* name) {
    if (static_cast<int>(f.size()) != n) throw MeshTopology(std::string(name) + " has wrong length");
    for (double v : f)
      if (!std::isfinite(v)) throw MeshTopology(std::string(name) + " is not finite");
  };
  check(c.h_plus_k_sq, "h_plus_k_sq");
  check(c.scal_sigma, "scal_sigma");
  check(c.J_nu, "J_nu");
  check(c.mu, "mu");
  check(c.div_X, "div_X");
  check(c.X_sq, "X_sq");
  if (static_cast<int>(c.X.size()) != n) throw MeshTopology("X has wrong length");

  StabilityOperator op;
  op.nodes = n;
  std::vector<int> node_to_unknown(n, -1);
  for (int i = 0; i < n; ++i)
    if (!m.on_boundary(i)) {
      node_to_unknown[i] = static_cast<int>(op.unknown_to_node.size());
      op.unknown_to_node.push_back(i);
    }
  const int nu = static_cast<int>(op.unknown_to_node.size());
  std::vector<Eigen::Triplet<double>> trip;
  auto add = [&](int row, int node, double v) {
    int col = node_to_unknown[node];
    if (col >= 0 && v != 0.0) trip.emplace_back(row, col, v);
  };
  for (int r = 0; r < nu; ++r) {
    int i = op.unknown_to_node[r];
    int ix = i % m.nx, iy = i / m.nx;
    double V = c.potential(i);
    op.potential_sup = std::max(op.potential_sup, std::abs(V));
    double hx = m.hx();
    double cm, c0, cp;
    detail::drift_stencil(2.0 * c.X[i].x(), hx, cm, c0, cp);
    int left = ix - 1, right = ix + 1;
    if (m.kind == SigmaMesh::Kind::circle) {
      left = (ix + m.nx - 1) % m.nx;
      right = (ix + 1) % m.nx;
    }
    double diag = 2.0 / (hx * hx) + c0 + V;
    add(r, iy * m.nx + left, -1.0 / (hx * hx) + cm);
    add(r, iy * m.nx + right, -1.0 / (hx * hx) + cp);
    if (m.kind == SigmaMesh::Kind::patch) {
      double hy = m.hy();
      detail::drift_stencil(2.0 * c.X[i].y(), hy, cm, c0, cp);
      diag += 2.0 / (hy * hy) + c0;
      add(r, (iy - 1) * m.nx + ix, -1.0 / (hy * hy) + cm);
      add(r, (iy + 1) * m.nx + ix, -1.0 / (hy * hy) + cp);
    }
    trip.emplace_back(r, r, diag);
  }
  op.A.resize(nu, nu);
  op.A.setFromTriplets(trip.begin(), trip.end());
  op.A.makeCompressed();
  return op;
}

struct Eigenpair {
  double lambda = 0.0;
  std::vector<double> eigenfunction;  // per mesh node, sup = 1, zero on Dirichlet nodes
  int iterations = 0;
};

inline Eigenpair principal_eigenvalue(const StabilityOperator& op, double tau_pos = 1e-8, int max_iter = 50000) {
  const int n = static_cast<int>(op.A.rows());
  if (n == 0) throw EigFailure("no unknowns");
  const double sigma = op.potential_sup + 1.0;
  Eigen::SparseMatrix<double> S = op.A;
  for (int i = 0; i < n; ++i) S.coeffRef(i, i) += sigma;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(S);
  lu.factorize(S);
  if (lu.info() != Eigen::Success) throw EigFailure("factorization failed");

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double lambda = 0.0, prev = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    Eigen::Index imax;
    y.cwiseAbs().maxCoeff(&imax);
    double mu = y[imax] / x[imax];
    Eigen::VectorXd xn = y / y[imax];
    double change = (xn - x).cwiseAbs().maxCoeff();
    x = xn;
    lambda = 1.0 / mu - sigma;
    if (std::abs(lambda - prev) <= 1e-13 * (1.0 + std::abs(lambda)) && change <= 1e-11) break;
    prev = lambda;
  }
  if (it == max_iter) throw EigFailure("inverse iteration did not converge");
  Eigenpair out;
  out.lambda = lambda;
  out.iterations = it + 1;
  out.eigenfunction.assign(op.nodes, 0.0);
  double sup = x.maxCoeff();
  for (int r = 0; r < n; ++r) {
    double v = x[r] / sup;
    if (!(v >= -tau_pos)) throw NotPrincipal("eigenfunction not positive at node " + std::to_string(op.unknown_to_node[r]));
    out.eigenfunction[op.unknown_to_node[r]] = v;
  }
  return out;
}

struct StabilityVerdict {
  bool stable = false;
  double margin = 0.0;  // the principal eigenvalue
  double tau = 0.0;
};

// scale: characteristic size of the operator, e.g. 1/L^2.
inline StabilityVerdict is_stable(const StabilityCoefficients& c, double scale = 1.0) {
  auto pair = principal_eigenvalue(assemble_stability_operator(c));
  StabilityVerdict v;
  v.tau = 1e-6 * scale;
  v.margin = pair.lambda;
  v.stable = pair.lambda >= -v.tau;
  return v;
}

}  // namespace jss
