#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "stochtrig/analysis.hpp"
#include "stochtrig/fem1d.hpp"

using namespace stochtrig;
using namespace stochtrig::fem;
constexpr double pi = std::numbers::pi;

namespace {

// Uniform-mesh eigenvalue of the P1 pencil, derived independently from the
// three-term recurrence with sin(j pi x_i) nodal vectors.
double closed_form_eigenvalue(int j, int N) {
  const double h = 1.0 / N;
  const double c = std::cos(j * pi * h);
  const double stiffness = (2.0 - 2.0 * c) / h;
  const double mass = h * (4.0 + 2.0 * c) / 6.0;
  return stiffness / mass;
}

// L2 error between a P1 function and f by fine quadrature (independent of the mass matrix).
double l2_error(const FemFunction& v, const Mesh& mesh, double (*f)(double)) {
  double sum = 0.0;
  const int sub = 64;
  const int cells = mesh.num_cells() * sub;
  const double w = 1.0 / cells;
  const double g[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  for (int c = 0; c < cells; ++c)
    for (int q = 0; q < 3; ++q) {
      const double x = (c + 0.5 + 0.5 * g[q]) * w;
      const double d = evaluate(v, mesh, x) - f(x);
      sum += 0.5 * w * gw[q] * d * d;
    }
  return std::sqrt(sum);
}

double sin_pi(double x) { return std::sin(pi * x); }

}  // namespace

TEST(Mesh, Basics) {
  const Mesh m(4);
  EXPECT_EQ(m.num_interior(), 3);
  EXPECT_EQ(m.h(), 0.25);
  EXPECT_EQ(m.node(3), 0.75);
  EXPECT_EQ(Mesh::dyadic(5).num_cells(), 32);
  EXPECT_THROW(Mesh(1), DomainError);
  EXPECT_THROW(Mesh::dyadic(0), DomainError);
}

TEST(Assemble, MatricesForQuarterMesh) {
  const FemSystem sys = assemble(Mesh(4));
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(sys.mass().diag[i], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(sys.stiffness().diag[i], 8.0);
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(sys.mass().off[i], 1.0 / 24.0);
    EXPECT_DOUBLE_EQ(sys.stiffness().off[i], -4.0);
  }
  EXPECT_NEAR(sys.eig_values()[0], 6.0 * 16.0 * (1 - std::cos(pi / 4)) / (2 + std::cos(pi / 4)), 1e-12);
}

TEST(Assemble, EigenpairInvariants) {
  for (const int N : {4, 17, 64}) {
    const FemSystem sys{Mesh(N)};
    const Eigen::MatrixXd M = sys.mass().dense();
    const Eigen::MatrixXd S = sys.stiffness().dense();
    const Eigen::MatrixXd& V = sys.eig_vectors();
    EXPECT_LT((V.transpose() * M * V - Eigen::MatrixXd::Identity(N - 1, N - 1)).cwiseAbs().maxCoeff(), 1e-10);
    for (int j = 0; j < N - 1; ++j) {
      const double l = sys.eig_values()[j];
      EXPECT_LE((S * V.col(j) - l * M * V.col(j)).norm(), 1e-10 * l);
      EXPECT_GE(l, spectral::eigenvalue(j + 1) * (1 - 1e-14));
      EXPECT_NEAR(l, closed_form_eigenvalue(j + 1, N), 1e-8 * l);
      EXPECT_NEAR(uniform_mesh_eigenvalue(j + 1, 1.0 / N), closed_form_eigenvalue(j + 1, N), 1e-9 * l);
    }
  }
}

TEST(Assemble, FirstEigenvalueConvergesQuadratically) {
  std::vector<double> hs, gaps;
  for (const int N : {8, 16, 32, 64}) {
    const FemSystem sys{Mesh(N)};
    hs.push_back(1.0 / N);
    gaps.push_back(sys.eig_values()[0] - pi * pi);
  }
  EXPECT_NEAR(analysis::rate_regression(hs, gaps).slope, 2.0, 0.1);
}

TEST(Tridiagonal, SolveInvertsMultiply) {
  const FemSystem sys{Mesh(10)};
  Eigen::VectorXd x(9);
  for (int i = 0; i < 9; ++i) x[i] = std::cos(i + 0.3);
  EXPECT_LT((sys.mass().solve(sys.mass().multiply(x)) - x).norm(), 1e-13);
  EXPECT_LT((sys.stiffness().multiply(x) - sys.stiffness().dense() * x).norm(), 1e-12);
}

TEST(L2Project, IdentityOnFiniteElementFunctions) {
  const Mesh mesh(16);
  const FemSystem sys{mesh};
  FemFunction v{Eigen::VectorXd(15)};
  for (int i = 0; i < 15; ++i) v.values[i] = std::sin(1.7 * i) + 0.1 * i;
  const auto projected = l2_project([&](double x) { return evaluate(v, mesh, x); }, sys);
  EXPECT_LT((projected.values - v.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(L2Project, ZeroAndNonFinite) {
  const FemSystem sys{Mesh(8)};
  EXPECT_EQ(l2_project([](double) { return 0.0; }, sys).values.norm(), 0.0);
  EXPECT_THROW(l2_project([](double x) { return 1.0 / (x - 0.5) / 0.0; }, sys), NumericalError);
}

TEST(L2Project, SecondOrderForSine) {
  std::vector<double> hs, errs;
  for (const int N : {8, 16, 32}) {
    const Mesh mesh(N);
    const FemSystem sys{mesh};
    hs.push_back(mesh.h());
    errs.push_back(l2_error(l2_project(sin_pi, sys), mesh, sin_pi));
  }
  EXPECT_NEAR(analysis::rate_regression(hs, errs).slope, 2.0, 0.1);
}

TEST(ProjectSpectral, LoadsMatchQuadratureOracle) {
  const Mesh mesh(64);
  const FemSystem sys{mesh};
  for (const int j : {1, 5, 40, 100}) {
    for (const int i : {1, 17, 63}) {
      // int sqrt2 sin(j pi x) psi_i(x) dx over the two cells of node i, fine Simpson rule.
      const double a = mesh.node(i - 1), b = mesh.node(i + 1);
      const int n = 2000;
      double sum = 0.0;
      for (int q = 0; q <= n; ++q) {
        const double x = a + (b - a) * q / n;
        const double hat = 1.0 - std::abs(x - mesh.node(i)) / mesh.h();
        const double w = (q == 0 || q == n) ? 1.0 : (q % 2 ? 4.0 : 2.0);
        sum += w * std::sqrt(2.0) * std::sin(j * pi * x) * hat;
      }
      sum *= (b - a) / n / 3.0;
      EXPECT_NEAR(sine_load(j, i, mesh), sum, 1e-11) << "j=" << j << " i=" << i;
    }
  }
  const spectral::SpectralBasis basis(4);
  EXPECT_NEAR(mass_norm(project_spectral(spectral::SpectralField::unit(basis, 1), sys), sys), 1.0, 1e-3);
  EXPECT_EQ(project_spectral(spectral::SpectralField::zero(basis), sys).values.norm(), 0.0);
}

TEST(ProjectSpectral, Linear) {
  const FemSystem sys{Mesh(32)};
  spectral::SpectralField v{Eigen::VectorXd::LinSpaced(10, 1.0, -2.0)};
  spectral::SpectralField w{Eigen::VectorXd::LinSpaced(10, 0.5, 3.0)};
  spectral::SpectralField combo{2.5 * v.coeffs + w.coeffs};
  const auto lhs = project_spectral(combo, sys).values;
  const auto rhs = (2.5 * project_spectral(v, sys).values + project_spectral(w, sys).values).eval();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectSpectral, ProjectorAgreesWithDirectProjection) {
  const FemSystem sys{Mesh(16)};
  const SpectralProjector proj(sys, 20);
  Eigen::VectorXd c(20);
  for (int j = 0; j < 20; ++j) c[j] = std::pow(j + 1.0, -1.5) * (j % 3 ? 1 : -1);
  EXPECT_LT((proj.project(c).values - project_spectral({c}, sys).values).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((proj.modal_projection() - sys.eig_vectors().transpose() * sys.mass().dense() * proj.projection())
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  EXPECT_THROW(proj.project(Eigen::VectorXd::Zero(3)), DomainError);
}

TEST(ProjectInterpolant, ConstantOneIncludesBoundary) {
  // The interpolant of the constant 1 has unit boundary values, so it is not a member of V_h.
  const Mesh mesh(8);
  const FemSystem sys{mesh};
  const auto ones = project_interpolant(Eigen::VectorXd::Ones(9), sys);
  const auto direct = l2_project([](double) { return 1.0; }, sys);
  EXPECT_LT((ones.values - direct.values).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(project_interpolant(Eigen::VectorXd::Ones(8), sys), DomainError);
}

TEST(DiscreteTrig, IdentityAtZeroAndEigenvectorRotation) {
  const Mesh mesh(16);
  const FemSystem sys{mesh};
  FemPair u{FemFunction{sys.eig_vectors().col(2)}, FemFunction::zero(mesh)};
  const auto same = apply_discrete_trig(u, 0.0, sys);
  EXPECT_LT((same.re.values - u.re.values).norm(), 1e-13);
  const double t = 0.37;
  const auto r = apply_discrete_trig(u, t, sys);
  const double l = sys.eig_values()[2];
  EXPECT_LT((r.re.values - std::cos(t * l) * u.re.values).norm(), 1e-11);
  EXPECT_LT((r.im.values - std::sin(t * l) * u.re.values).norm(), 1e-11);
}

TEST(DiscreteTrig, NormPreservingAndGroup) {
  const Mesh mesh(32);
  const FemSystem sys{mesh};
  FemPair u{l2_project([](double x) { return std::sin(2 * pi * x); }, sys),
            l2_project([](double x) { return x * (1 - x); }, sys)};
  const double n0 = combined_mass_norm(u, sys);
  const auto a = apply_discrete_trig(apply_discrete_trig(u, 0.21, sys), 0.34, sys);
  const auto b = apply_discrete_trig(u, 0.55, sys);
  EXPECT_NEAR(combined_mass_norm(a, sys), n0, 1e-11 * n0);
  EXPECT_LT((a.re.values - b.re.values).norm(), 1e-10 * u.re.values.norm());
  // Needs modes shared by both parts; the fixture above has disjoint parity.
  const FemPair mixed{u.re, l2_project([](double x) { return std::sin(2 * pi * x) + x; }, sys)};
  const double m0 = combined_mass_norm(mixed, sys);
  const auto faulty = apply_discrete_trig(mixed, 0.3, sys, RotationFault::flip_sine_sign);
  EXPECT_GT(std::abs(combined_mass_norm(faulty, sys) - m0), 1e-3 * m0);
}

TEST(DiscreteNorm, Identities) {
  const Mesh mesh(16);
  const FemSystem sys{mesh};
  FemFunction v{Eigen::VectorXd::LinSpaced(15, -1.0, 2.0)};
  EXPECT_NEAR(discrete_fractional_norm(v, 0.0, sys), mass_norm(v, sys), 1e-12);
  EXPECT_NEAR(discrete_fractional_norm(v, 1.0, sys), std::sqrt(v.values.dot(sys.stiffness().multiply(v.values))),
              1e-10);
  FemFunction e1{sys.eig_vectors().col(0)};
  EXPECT_NEAR(discrete_fractional_norm(e1, 2.0, sys), sys.eig_values()[0], 1e-10);
}

TEST(NormRelation, GammaZeroContracts) {
  const FemSystem sys{Mesh(16)};
  const spectral::SpectralBasis basis(40);
  for (int j = 1; j <= 40; ++j)
    EXPECT_LE(norm_relation_check(spectral::SpectralField::unit(basis, j), 0.0, sys), 1.0 + 1e-12);
  EXPECT_EQ(norm_relation_check(spectral::SpectralField::zero(basis), 1.0, sys), 0.0);
  EXPECT_THROW(norm_relation_check(spectral::SpectralField::unit(basis, 1), 1.5, sys), DomainError);
  EXPECT_THROW(norm_relation_check(spectral::SpectralField::unit(basis, 1), -0.6, sys), DomainError);
}

// For v = phi_1, P_h v is a multiple of the first discrete eigenvector, so
// ||A_h P_h A^{-1} v|| = (lambda_h1 / pi^2) sinc^2(pi h / 2) sqrt(6 / (4 + 2 cos(pi h))).
TEST(NormRelation, FirstModeClosedForm) {
  for (const int N : {16, 32, 64}) {
    const double h = 1.0 / N;
    const double sinc = std::sin(pi * h / 2) / (pi * h / 2);
    const double expected =
        closed_form_eigenvalue(1, N) / (pi * pi) * sinc * sinc * std::sqrt(6.0 / (4.0 + 2.0 * std::cos(pi * h)));
    const FemSystem sys{Mesh(N)};
    const spectral::SpectralBasis basis(1);
    EXPECT_NEAR(norm_relation_check(spectral::SpectralField::unit(basis, 1), 1.0, sys), expected, 1e-12);
  }
}

TEST(NormRelation, GammaOneFirstModeN32) {
  const FemSystem sys{Mesh(32)};
  const spectral::SpectralBasis basis(1);
  EXPECT_LE(norm_relation_check(spectral::SpectralField::unit(basis, 1), 1.0, sys), 1.0 + 1e-6);
}

TEST(Restrict, NodalSubsetOnNestedMeshes) {
  const Mesh fine(16), coarse(4);
  FemFunction v{Eigen::VectorXd::LinSpaced(15, 1.0, 15.0)};
  const auto r = restrict_to_coarse(v, fine, coarse);
  ASSERT_EQ(r.values.size(), 3);
  EXPECT_EQ(r.values[0], 4.0);
  EXPECT_EQ(r.values[1], 8.0);
  EXPECT_EQ(r.values[2], 12.0);
  EXPECT_THROW(restrict_to_coarse(v, fine, Mesh(6)), DomainError);
}

TEST(Evaluate, InterpolatesBetweenNodes) {
  const Mesh mesh(4);
  FemFunction v{Eigen::Vector3d(1.0, 2.0, 3.0)};
  EXPECT_DOUBLE_EQ(evaluate(v, mesh, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(v, mesh, 0.125), 0.5);
  EXPECT_DOUBLE_EQ(evaluate(v, mesh, 0.625), 2.5);
  EXPECT_DOUBLE_EQ(evaluate(v, mesh, 1.0), 0.0);
  EXPECT_THROW(evaluate(v, mesh, 1.5), DomainError);
}
