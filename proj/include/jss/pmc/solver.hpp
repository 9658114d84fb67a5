#pragma once
// Capillarity-regularized prescribed mean curvature equation
//   div(Du / W) = H_k + u / k,   W = sqrt(1 + |Du|^2),
// discretized with P1 elements and mass lumping. The discrete equation is the
// optimality condition of a strictly convex energy, which is minimized by a
// projected Newton method inside the barrier sandwich.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "jss/pmc/auxiliary.hpp"

namespace jss {

struct NewtonOptions {
  double tol = 1e-9;
  int max_iter = 200;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double floor = 1.0 / (1 << 20);
};

struct NewtonReport {
  int iterations = 0;
  double residual = 0.0;
  double roundoff_floor = 0.0;  // largest per-node rounding bound on the residual
  bool converged = false;
};

// Per-triangle metric data at the centroid.
struct ElementGeometry {
  std::array<Vec2, 3> grad;  // hat gradients
  Mat2 ginv;
  double weight = 0.0;  // chart area times sqrt(det g)
};

inline std::vector<ElementGeometry> element_geometry(const MetricField& g, const TriangleMesh& m) {
  std::vector<ElementGeometry> out(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    Vec2 c = m.centroid(t);
    out[t].grad = m.hat_gradients(t);
    out[t].ginv = g.at(c).inverse();
    out[t].weight = m.chart_area(t) * g.sqrt_det(c);
  }
  return out;
}

inline std::vector<double> lumped_mass(const TriangleMesh& m, const std::vector<ElementGeometry>& E) {
  std::vector<double> mass(m.num_vertices(), 0.0);
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int k : m.triangles[t]) mass[k] += E[t].weight / 3.0;
  return mass;
}

// Lumped weak divergence of Du/W including the boundary flux, so that affine
// data on a flat mesh give zero at every node.
inline std::vector<double> mean_curvature_operator(const MetricField& g, const TriangleMesh& m,
                                                   const std::vector<double>& u) {
  for (double x : u)
    if (!std::isfinite(x)) throw DomainError("non-finite nodal value");
  auto E = element_geometry(g, m);
  auto mass = lumped_mass(m, E);
  std::vector<double> acc(m.num_vertices(), 0.0);
  std::vector<Vec2> flux(m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& T = m.triangles[t];
    Vec2 Du = u[T[0]] * E[t].grad[0] + u[T[1]] * E[t].grad[1] + u[T[2]] * E[t].grad[2];
    Vec2 up = E[t].ginv * Du;
    double W = std::sqrt(1.0 + Du.dot(up));
    flux[t] = up / W;
    for (int k = 0; k < 3; ++k) acc[T[k]] -= E[t].weight * flux[t].dot(E[t].grad[k]);
  }
  // Boundary term: the integral of phi_i times the co-normal flux on each boundary edge.
  std::map<std::pair<int, int>, int> owner;
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) {
      int a = m.triangles[t][k], b = m.triangles[t][(k + 1) % 3];
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      if (owner.count(key)) owner[key] = -1;
      else owner[key] = t;
    }
  for (const auto& [e, t] : owner) {
    if (t < 0) continue;
    int a = e.first, b = e.second;
    const auto& T = m.triangles[t];
    int c = T[0] + T[1] + T[2] - a - b;
    Vec2 d = m.vertices[b] - m.vertices[a];
    Vec2 n(d.y(), -d.x());  // chart normal scaled by the edge length
    if (n.dot(m.vertices[c] - m.vertices[a]) > 0) n = -n;
    Vec2 mid = 0.5 * (m.vertices[a] + m.vertices[b]);
    // sqrt(g) g^{ij} u_j n_i dl in chart terms: flux is already g^{-1}Du/W.
    double q = g.sqrt_det(mid) * flux[t].dot(n) / 2.0;
    acc[a] += q;
    acc[b] += q;
  }
  for (int v = 0; v < m.num_vertices(); ++v) acc[v] /= mass[v];
  return acc;
}

struct RegularizationParams {
  double k = 1.0;
  double C = 0.0;  // barrier constant; set from the auxiliary domain when zero
};

// The discrete problem on an auxiliary domain for one k.
class RegularizedProblem {
 public:
  RegularizedProblem(const AuxiliaryDomain& aux, RegularizationParams p) : aux_(aux), p_(p) {
    const auto& m = *aux.mesh;
    E_ = element_geometry(aux.domain.metric(), m);
    mass_ = lumped_mass(m, E_);
    const int n = m.num_vertices();
    Hk_.resize(n);
    double supH = 0.0;
    for (int v = 0; v < n; ++v) supH = std::max(supH, std::abs(aux.H[v]));
    if (p_.C == 0.0) p_.C = supH + 2.0;
    double supHk = 0.0;
    for (int v = 0; v < n; ++v) {
      Hk_[v] = aux.H[v] - aux.chi[v] / std::sqrt(p_.k);
      supHk = std::max(supHk, std::abs(Hk_[v]));
    }
    if (!(p_.C > supHk)) throw DomainError("barrier constant must exceed sup|H_k|");
    lo_.assign(n, -p_.C * p_.k);
    hi_.assign(n, p_.C * p_.k);
    fixed_.assign(n, 0);
    for (int v = 0; v < n; ++v) {
      int ci = aux.vertex_crescent[v];
      double t = aux.vertex_t[v];
      if (ci >= 0 && t > 0.0) {
        const auto& cr = aux.crescents[ci];
        double b = crescent_barrier_value(cr.tag, cr.eps, t);
        if (cr.tag == Tag::plus) lo_[v] = std::max(lo_[v], std::sqrt(p_.k) + b);
        else hi_[v] = std::min(hi_[v], -std::sqrt(p_.k) + b);
      }
      if (aux.dirichlet[v]) {
        fixed_[v] = 1;
        int s = aux.crescents[ci].sign();
        lo_[v] = hi_[v] = s * p_.C * p_.k;
      }
    }
  }

  const RegularizationParams& params() const { return p_; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }
  const std::vector<double>& Hk() const { return Hk_; }
  const std::vector<double>& mass() const { return mass_; }
  const std::vector<ElementGeometry>& elements() const { return E_; }

  std::vector<double> clip(std::vector<double> u) const {
    for (size_t v = 0; v < u.size(); ++v) u[v] = std::clamp(u[v], lo_[v], hi_[v]);
    return u;
  }

  double energy(const std::vector<double>& u) const {
    const auto& m = *aux_.mesh;
    double e = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t) {
      const auto& T = m.triangles[t];
      Vec2 Du = u[T[0]] * E_[t].grad[0] + u[T[1]] * E_[t].grad[1] + u[T[2]] * E_[t].grad[2];
      e += E_[t].weight * std::sqrt(1.0 + Du.dot(E_[t].ginv * Du));
    }
    for (int v = 0; v < m.num_vertices(); ++v) e += mass_[v] * (Hk_[v] * u[v] + u[v] * u[v] / (2.0 * p_.k));
    return e;
  }

  // Gradient of the energy (nodal), optionally the Hessian. beta < 1 shrinks
  // the rank-one term; beta = 0 is the lagged-diffusion (Picard) matrix.
  void derivatives(const std::vector<double>& u, Eigen::VectorXd& grad,
                   std::vector<Eigen::Triplet<double>>* hess, double beta = 1.0,
                   Eigen::VectorXd* magnitude = nullptr) const {
    const auto& m = *aux_.mesh;
    const int n = m.num_vertices();
    grad.setZero(n);
    if (magnitude) magnitude->setZero(n);
    if (hess) {
      hess->clear();
      hess->reserve(9 * m.num_triangles() + n);
    }
    for (int t = 0; t < m.num_triangles(); ++t) {
      const auto& T = m.triangles[t];
      const auto& G = E_[t].grad;
      Vec2 Du = u[T[0]] * G[0] + u[T[1]] * G[1] + u[T[2]] * G[2];
      Vec2 up = E_[t].ginv * Du;
      double W = std::sqrt(1.0 + Du.dot(up));
      for (int a = 0; a < 3; ++a) {
        double term = E_[t].weight * up.dot(G[a]) / W;
        grad[T[a]] += term;
        if (magnitude) (*magnitude)[T[a]] += std::abs(term);
      }
      if (hess) {
        Mat2 K = E_[t].ginv / W - beta * up * up.transpose() / (W * W * W);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) hess->emplace_back(T[a], T[b], E_[t].weight * G[a].dot(K * G[b]));
      }
    }
    for (int v = 0; v < n; ++v) {
      grad[v] += mass_[v] * (Hk_[v] + u[v] / p_.k);
      if (magnitude) (*magnitude)[v] += mass_[v] * (std::abs(Hk_[v]) + std::abs(u[v]) / p_.k);
      if (hess) hess->emplace_back(v, v, mass_[v] / p_.k);
    }
  }

  // Nodal residual div(Du/W) - H_k - u/k, zero where a bound blocks the descent direction.
  std::vector<double> residual(const std::vector<double>& u) const {
    Eigen::VectorXd grad;
    derivatives(u, grad, nullptr);
    std::vector<double> r(u.size(), 0.0);
    for (size_t v = 0; v < u.size(); ++v) {
      if (fixed_[v]) continue;
      double gv = grad[v];
      if (u[v] <= lo_[v] && gv > 0) continue;
      if (u[v] >= hi_[v] && gv < 0) continue;
      r[v] = -gv / mass_[v];
    }
    return r;
  }

  static double sup(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s = std::max(s, std::abs(x));
    return s;
  }

  // Projected Newton with Armijo backtracking. Nodes with mask == 0 are frozen.
  NewtonReport solve(std::vector<double>& u, const NewtonOptions& opt = {},
                     const std::vector<char>* free_mask = nullptr) const {
    const auto& m = *aux_.mesh;
    const int n = m.num_vertices();
    u = clip(u);
    NewtonReport rep;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd grad;
    auto frozen = [&](int v) { return fixed_[v] || (free_mask && !(*free_mask)[v]); };
    // Converged when every free node is within tol, or within the rounding
    // error of its own residual sum (steep elements next to tiny lumped masses).
    bool within = false;
    Eigen::VectorXd mag;
    auto measure = [&](const Eigen::VectorXd& gr) {
      double s = 0.0;
      within = true;
      for (int v = 0; v < n; ++v) {
        if (frozen(v)) continue;
        if (u[v] <= lo_[v] && gr[v] > 0) continue;
        if (u[v] >= hi_[v] && gr[v] < 0) continue;
        double r = std::abs(gr[v]) / mass_[v];
        s = std::max(s, r);
        double floor = 64 * std::numeric_limits<double>::epsilon() * mag[v] / mass_[v];
        if (r > opt.tol && r > floor) within = false;
        rep.roundoff_floor = std::max(rep.roundoff_floor, floor);
      }
      return s;
    };
    double E0 = energy(u);
    double beta = 1.0;
    for (int it = 0; it <= opt.max_iter; ++it) {
      derivatives(u, grad, &trip, beta, &mag);
      rep.roundoff_floor = 0.0;
      rep.residual = measure(grad);
      rep.iterations = it;
      if (within) {
        rep.converged = true;
        return rep;
      }
      if (it == opt.max_iter) break;
      // Active set: frozen nodes and bounds the gradient pushes against.
      std::vector<int> index(n, -1);
      int nf = 0;
      // Bertsekas' epsilon-active set: nodes within w of a bound they are pushed
      // against are held there, which stops active-set zig-zag near the obstacle.
      double w = 0.0;
      for (int v = 0; v < n; ++v)
        if (!frozen(v)) w = std::max(w, std::abs(u[v] - std::clamp(u[v] - grad[v] / mass_[v], lo_[v], hi_[v])));
      for (int v = 0; v < n; ++v) {
        if (frozen(v)) continue;
        double band = std::max(1e-12 * (1 + std::abs(u[v])), std::min(w, 1e-3 * (1 + std::abs(u[v]))));
        bool at_lo = u[v] <= lo_[v] + band && grad[v] > 0;
        bool at_hi = u[v] >= hi_[v] - band && grad[v] < 0;
        if (at_lo || at_hi) continue;
        index[v] = nf++;
      }
      if (nf == 0) break;
      std::vector<Eigen::Triplet<double>> sub;
      sub.reserve(trip.size());
      for (const auto& tr : trip) {
        int a = index[tr.row()], b = index[tr.col()];
        if (a >= 0 && b >= 0) sub.emplace_back(a, b, tr.value());
      }
      Eigen::SparseMatrix<double> Hs(nf, nf);
      Hs.setFromTriplets(sub.begin(), sub.end());
      Eigen::VectorXd rhs(nf);
      for (int v = 0; v < n; ++v)
        if (index[v] >= 0) rhs[index[v]] = -grad[v];
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Hs);
      if (ldlt.info() != Eigen::Success) throw SolveFailure("factorization failed", rep.residual);
      Eigen::VectorXd d = ldlt.solve(rhs);
      // Steep elements make the matrix badly conditioned; refine once.
      d += ldlt.solve(rhs - Hs * d);
      std::vector<double> dir(n, 0.0);
      for (int v = 0; v < n; ++v)
        if (index[v] >= 0) dir[v] = d[index[v]];
        else if (!frozen(v)) dir[v] = -grad[v] / mass_[v];  // held nodes: scaled gradient, then projected
      // Backtracking on the projected path.
      double alpha = 1.0, Enew = E0;
      std::vector<double> trial(n);
      bool accepted = false;
      double slack = 64 * std::numeric_limits<double>::epsilon() * std::abs(E0) + 1e-300;
      while (alpha >= opt.floor) {
        double dec = 0.0;
        for (int v = 0; v < n; ++v) {
          trial[v] = std::clamp(u[v] + alpha * dir[v], lo_[v], hi_[v]);
          dec += grad[v] * (trial[v] - u[v]);
        }
        Enew = energy(trial);
        if (Enew <= E0 + opt.armijo * dec + slack) {
          accepted = true;
          break;
        }
        alpha *= opt.backtrack;
      }
      if (!accepted) {
        // Energy differences below rounding: accept if the residual improves.
        Eigen::VectorXd g2;
        for (int v = 0; v < n; ++v) trial[v] = std::clamp(u[v] + dir[v], lo_[v], hi_[v]);
        std::swap(u, trial);
        derivatives(u, g2, nullptr, 1.0, &mag);
        if (measure(g2) < rep.residual) {
          E0 = energy(u);
          continue;
        }
        std::swap(u, trial);
        throw SolveFailure("line search stalled at the damping floor", rep.residual);
      }
      u.swap(trial);
      E0 = Enew;
      // Heavy damping means the Newton model is poor in steep elements.
      beta = alpha < 0.25 ? 0.0 : alpha == 1.0 ? 1.0 : beta;
    }
    throw SolveFailure("Newton did not converge in " + std::to_string(opt.max_iter) + " iterations", rep.residual);
  }

 private:
  const AuxiliaryDomain& aux_;
  RegularizationParams p_;
  std::vector<ElementGeometry> E_;
  std::vector<double> mass_, Hk_, lo_, hi_;
  std::vector<char> fixed_;
};

struct RegularizedSolution {
  std::vector<double> u;
  double k = 0.0, C = 0.0;
  NewtonReport newton;
  int perron_sweeps = 0;
  double final_residual = 0.0;
};

// Warm starts from a smaller k scale the crescent values by the ratio of the
// k's: the Dirichlet data and obstacles there grow linearly in k.
// Newton, then local lifts on every crescent (Dirichlet trace from the current
// iterate on the surrounding ring) until the pointwise maximum is a fixed point.
inline RegularizedSolution solve_regularized(const AuxiliaryDomain& aux, RegularizationParams params,
                                             const std::vector<double>* warm_start = nullptr,
                                             double warm_k = 0.0, const NewtonOptions& opt = {}) {
  RegularizedProblem prob(aux, params);
  const int n = aux.mesh->num_vertices();
  std::vector<double> u = warm_start ? *warm_start : std::vector<double>(n, 0.0);
  if (static_cast<int>(u.size()) != n) throw MeshTopology("warm start does not match the mesh");
  if (warm_start && warm_k > 0.0)
    for (int v = 0; v < n; ++v)
      if (aux.vertex_crescent[v] >= 0) u[v] *= prob.params().k / warm_k;
  RegularizedSolution out;
  out.k = prob.params().k;
  out.C = prob.params().C;
  out.newton = prob.solve(u, opt);
  // Vertex neighbourhoods for the local problems.
  std::vector<std::vector<int>> adj(n);
  for (const auto& T : aux.mesh->triangles)
    for (int a : T)
      for (int b : T)
        if (a != b) adj[a].push_back(b);
  for (int sweep = 0; sweep < 10; ++sweep) {
    out.perron_sweeps = sweep + 1;
    double change = 0.0;
    for (size_t ci = 0; ci < aux.crescents.size(); ++ci) {
      std::vector<char> mask(n, 0);
      for (int v = 0; v < n; ++v)
        if (aux.vertex_crescent[v] == static_cast<int>(ci)) mask[v] = 1;
      // One ring into the domain, so the lift can move the crescent's base.
      std::vector<char> grown = mask;
      for (int v = 0; v < n; ++v)
        if (mask[v])
          for (int w : adj[v]) grown[w] = 1;
      std::vector<char> interior(n, 0);
      for (int v = 0; v < n; ++v)
        if (grown[v]) {
          bool inner = true;
          for (int w : adj[v]) inner = inner && grown[w];
          interior[v] = inner;
        }
      std::vector<double> local = u;
      prob.solve(local, opt, &interior);
      for (int v = 0; v < n; ++v)
        if (local[v] > u[v]) {
          change = std::max(change, local[v] - u[v]);
          u[v] = local[v];
        }
    }
    if (change <= opt.tol) break;
    out.newton = prob.solve(u, opt);
  }
  out.final_residual = RegularizedProblem::sup(prob.residual(u));
  out.u = std::move(u);
  return out;
}

// The k schedule, each solve warm-started from the previous one.
inline std::vector<RegularizedSolution> solve_schedule(const AuxiliaryDomain& aux, const std::vector<double>& ks,
                                                       double C = 0.0, const NewtonOptions& opt = {}) {
  std::vector<RegularizedSolution> out;
  for (double k : ks) {
    if (!(k > 0.0)) throw DomainError("k must be positive");
    if (!out.empty() && !(k > out.back().k)) throw DomainError("k schedule must be increasing");
    if (out.empty()) out.push_back(solve_regularized(aux, {k, C}, nullptr, 0.0, opt));
    else out.push_back(solve_regularized(aux, {k, C}, &out.back().u, out.back().k, opt));
  }
  return out;
}

}  // namespace jss
