#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "jss/mots/stability.hpp"

using namespace jss;
using std::numbers::pi;

namespace {

// Dense oracle: -f'' + b f' + V f on n interior points, centered differences,
// solved with a general eigensolver; returns the eigenvalue of least real part.
double dense_oracle(double L, int nodes, double b, double V) {
  int n = nodes - 2;
  double h = L / (nodes - 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2 / (h * h) + V;
    if (i > 0) A(i, i - 1) = -1 / (h * h) - b / (2 * h);
    if (i + 1 < n) A(i, i + 1) = -1 / (h * h) + b / (2 * h);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  double best = 1e300;
  for (int i = 0; i < n; ++i) best = std::min(best, es.eigenvalues()[i].real());
  return best;
}

double lambda_of(const StabilityCoefficients& c) { return principal_eigenvalue(assemble_stability_operator(c)).lambda; }

}  // namespace

TEST(Stability, DirichletIntervalIsPiSquared) {
  StabilityCoefficients c(SigmaMesh::interval(1.0, 1000));
  auto ev = principal_eigenvalue(assemble_stability_operator(c));
  EXPECT_NEAR(ev.lambda, pi * pi, 1e-3);
  for (size_t i = 1; i + 1 < ev.eigenfunction.size(); ++i) EXPECT_GT(ev.eigenfunction[i], 0.0);
  EXPECT_TRUE(is_stable(c).stable);
  EXPECT_NEAR(is_stable(c).margin, pi * pi, 1e-3);
}

TEST(Stability, ConstantDriftMatchesDenseOracleAndGauge) {
  const int nodes = 400;
  StabilityCoefficients c(SigmaMesh::interval(1.0, nodes));
  for (auto& x : c.X) x = Vec2(1.0, 0.0);
  double lam = lambda_of(c);
  EXPECT_NEAR(lam, dense_oracle(1.0, nodes, 2.0, 0.0), 1e-8);
  EXPECT_NEAR(lam, 1 + pi * pi, 1e-3);
}

TEST(Stability, CircleHasZeroEigenvalueAndConstantKernel) {
  StabilityCoefficients c(SigmaMesh::circle(2 * pi * 1.5, 300));
  auto ev = principal_eigenvalue(assemble_stability_operator(c));
  EXPECT_NEAR(ev.lambda, 0.0, 1e-10);
  for (double v : ev.eigenfunction) EXPECT_NEAR(v, 1.0, 1e-8);
}

TEST(Stability, ConstantPotentialShiftsSpectrum) {
  double L = 2.0;
  StabilityCoefficients c(SigmaMesh::interval(L, 1000));
  c.set_potential(-2 * (pi / L) * (pi / L));
  auto v = is_stable(c, 1 / (L * L));
  EXPECT_FALSE(v.stable);
  EXPECT_NEAR(v.margin, -(pi / L) * (pi / L), 1e-4);
}

TEST(Stability, ArcFormBoundaryCase) {
  // Potential -(H0^2 + K) with L = pi / sqrt(H0^2 + K) sits exactly at the threshold.
  double p = 1.7;
  double L = pi / std::sqrt(p);
  StabilityCoefficients c(SigmaMesh::interval(L, 2000));
  c.set_potential(-p);
  EXPECT_NEAR(lambda_of(c), 0.0, 1e-4);
  StabilityCoefficients shorter(SigmaMesh::interval(0.9 * L, 2000));
  shorter.set_potential(-p);
  EXPECT_TRUE(is_stable(shorter).stable);
  StabilityCoefficients longer(SigmaMesh::interval(1.1 * L, 2000));
  longer.set_potential(-p);
  EXPECT_FALSE(is_stable(longer).stable);
}

TEST(Stability, SelfAdjointMatchesSymmetricSolve) {
  const int nodes = 200;
  StabilityCoefficients c(SigmaMesh::interval(1.0, nodes));
  std::vector<double> V(nodes);
  for (int i = 0; i < nodes; ++i) V[i] = 5 * std::sin(3.0 * i / nodes) - 2;
  c.set_potential(V);
  auto op = assemble_stability_operator(c);
  Eigen::MatrixXd dense = Eigen::MatrixXd(op.A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  EXPECT_NEAR(principal_eigenvalue(op).lambda, es.eigenvalues()[0], 1e-8);
}

TEST(Stability, ReflectionInvariance) {
  // Reversing the node order and the drift leaves the spectrum unchanged.
  const int nodes = 300;
  StabilityCoefficients a(SigmaMesh::interval(1.0, nodes)), b(SigmaMesh::interval(1.0, nodes));
  std::vector<double> V(nodes), W(nodes);
  for (int i = 0; i < nodes; ++i) {
    double x = static_cast<double>(i) / (nodes - 1);
    a.X[i] = Vec2(std::cos(4 * x), 0);
    b.X[nodes - 1 - i] = Vec2(-std::cos(4 * x), 0);
    V[i] = x * x;
    W[nodes - 1 - i] = x * x;
  }
  a.set_potential(V);
  b.set_potential(W);
  EXPECT_NEAR(lambda_of(a), lambda_of(b), 1e-10);
}

TEST(Stability, MonotoneInPotentialScale) {
  double prev = -1e300;
  for (double s : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    StabilityCoefficients c(SigmaMesh::interval(1.0, 300));
    std::vector<double> V(300);
    for (int i = 0; i < 300; ++i) V[i] = -s * (1 + std::sin(0.02 * i) * std::sin(0.02 * i));
    c.set_potential(V);
    double lam = lambda_of(c);
    if (prev > -1e300) EXPECT_LE(lam, prev + 1e-12);
    prev = lam;
  }
}

TEST(Stability, PatchDirichletSquare) {
  StabilityCoefficients c(SigmaMesh::patch(1.0, 1.0, 61, 61));
  double lam = lambda_of(c);
  EXPECT_NEAR(lam, 2 * pi * pi, 1e-2);
}

TEST(Stability, StrongDriftStaysPrincipal) {
  // Cell Peclet far above 2: the upwind branch keeps the eigenfunction positive.
  StabilityCoefficients c(SigmaMesh::interval(1.0, 50));
  for (auto& x : c.X) x = Vec2(200.0, 0.0);
  auto ev = principal_eigenvalue(assemble_stability_operator(c));
  for (size_t i = 1; i + 1 < ev.eigenfunction.size(); ++i) EXPECT_GT(ev.eigenfunction[i], 0.0);
}

TEST(Stability, RejectsBadMeshes) {
  StabilityCoefficients c(SigmaMesh::interval(1.0, 2));
  EXPECT_THROW(assemble_stability_operator(c), MeshTopology);
  StabilityCoefficients d(SigmaMesh::interval(1.0, 10));
  d.mu[3] = std::nan("");
  EXPECT_THROW(assemble_stability_operator(d), MeshTopology);
}
