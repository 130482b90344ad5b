#pragma once

// Continuous P1 finite elements on a uniform mesh of (0,1) with homogeneous
// Dirichlet conditions. The discrete Laplacian A_h is never formed; it lives in
// the M-orthonormal generalized eigendecomposition S v = lambda M v.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "stochtrig/error.hpp"
#include "stochtrig/quadrature.hpp"
#include "stochtrig/spectral.hpp"

namespace stochtrig::fem {

class Mesh {
public:
  explicit Mesh(int num_cells) : num_cells_(num_cells) {
    detail::require(num_cells >= 2, "Mesh: need at least 2 cells");
  }

  /// Mesh with h = 2^{-level}.
  static Mesh dyadic(int level) {
    detail::require(level >= 1 && level <= 24, "Mesh::dyadic: level out of range");
    return Mesh(1 << level);
  }

  int num_cells() const { return num_cells_; }
  int num_interior() const { return num_cells_ - 1; }
  double h() const { return 1.0 / num_cells_; }
  /// Coordinate of node i in 0..N (boundary nodes are 0 and N).
  double node(int i) const { return static_cast<double>(i) / num_cells_; }

  bool operator==(const Mesh&) const = default;

private:
  int num_cells_;
};

/// Symmetric tridiagonal matrix stored by diagonal and off-diagonal.
struct Tridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;  // size n-1

  Eigen::Index size() const { return diag.size(); }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    const Eigen::Index n = size();
    Eigen::VectorXd y = diag.cwiseProduct(x);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      y[i] += off[i] * x[i + 1];
      y[i + 1] += off[i] * x[i];
    }
    return y;
  }

  /// Thomas algorithm; the mass and stiffness matrices are diagonally dominant.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const Eigen::Index n = size();
    Eigen::VectorXd c_prime(n), x(n);
    double denom = diag[0];
    c_prime[0] = n > 1 ? off[0] / denom : 0.0;
    x[0] = rhs[0] / denom;
    for (Eigen::Index i = 1; i < n; ++i) {
      denom = diag[i] - off[i - 1] * c_prime[i - 1];
      c_prime[i] = i + 1 < n ? off[i] / denom : 0.0;
      x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / denom;
    }
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= c_prime[i] * x[i + 1];
    return x;
  }

  Eigen::MatrixXd dense() const {
    const Eigen::Index n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.diagonal() = diag;
    for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = off[i];
    return m;
  }
};

/// Interior nodal values of a member of V_h; boundary values are implicitly zero.
struct FemFunction {
  Eigen::VectorXd values;

  static FemFunction zero(const Mesh& mesh) { return {Eigen::VectorXd::Zero(mesh.num_interior())}; }
};

struct FemPair {
  FemFunction re;
  FemFunction im;

  static FemPair zero(const Mesh& mesh) { return {FemFunction::zero(mesh), FemFunction::zero(mesh)}; }
};

/// Mesh, mass and stiffness matrices, and the M-orthonormal eigenpairs of A_h.
/// Immutable after construction.
class FemSystem {
public:
  explicit FemSystem(const Mesh& mesh) : mesh_(mesh) {
    const int n = mesh.num_interior();
    const double h = mesh.h();
    mass_.diag = Eigen::VectorXd::Constant(n, 4.0 * h / 6.0);
    mass_.off = Eigen::VectorXd::Constant(n - 1, h / 6.0);
    stiffness_.diag = Eigen::VectorXd::Constant(n, 2.0 / h);
    stiffness_.off = Eigen::VectorXd::Constant(n - 1, -1.0 / h);

    // Cholesky-symmetrized pencil: M = L L^T, eig(L^{-1} S L^{-T}), vectors mapped back.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(stiffness_.dense(), mass_.dense());
    if (solver.info() != Eigen::Success) throw NumericalError("FemSystem: generalized eigensolve failed");
    eig_values_ = solver.eigenvalues();
    eig_vectors_ = solver.eigenvectors();
    for (Eigen::Index j = 0; j < eig_vectors_.cols(); ++j) {
      // Sign convention: positive slope at the left boundary, like sin(j pi x).
      if (eig_vectors_(0, j) < 0.0) eig_vectors_.col(j) *= -1.0;
    }
    to_modal_ = eig_vectors_.transpose() * mass_.dense();
  }

  const Mesh& mesh() const { return mesh_; }
  int dim() const { return mesh_.num_interior(); }
  const Tridiagonal& mass() const { return mass_; }
  const Tridiagonal& stiffness() const { return stiffness_; }
  /// lambda_{h,j}, ascending.
  const Eigen::VectorXd& eig_values() const { return eig_values_; }
  /// Columns are M-orthonormal eigenvectors.
  const Eigen::MatrixXd& eig_vectors() const { return eig_vectors_; }
  /// V^T M: nodal values -> discrete eigen-coordinates.
  const Eigen::MatrixXd& to_modal() const { return to_modal_; }

  Eigen::VectorXd modal(const FemFunction& v) const { return to_modal_ * v.values; }
  FemFunction nodal(const Eigen::VectorXd& modal_coeffs) const { return {eig_vectors_ * modal_coeffs}; }

private:
  Mesh mesh_;
  Tridiagonal mass_;
  Tridiagonal stiffness_;
  Eigen::VectorXd eig_values_;
  Eigen::MatrixXd eig_vectors_;
  Eigen::MatrixXd to_modal_;
};

inline FemSystem assemble(const Mesh& mesh) { return FemSystem(mesh); }

/// lambda_{h,j} on a uniform mesh: 6 (1 - cos(j pi h)) / (h^2 (2 + cos(j pi h))).
inline double uniform_mesh_eigenvalue(int j, double h) {
  const double c = std::cos(j * std::numbers::pi * h);
  return 6.0 * (1.0 - c) / (h * h * (2.0 + c));
}

namespace detail {

inline void check_function(const FemSystem& system, const FemFunction& v, const char* where) {
  stochtrig::detail::require(v.values.size() == system.dim(),
                             std::string(where) + ": nodal vector does not match the mesh");
}

inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace detail

/// ||v||_M = sqrt(v^T M v), the L2 norm of the finite element function.
inline double mass_norm(const FemFunction& v, const FemSystem& system) {
  detail::check_function(system, v, "mass_norm");
  return std::sqrt(v.values.dot(system.mass().multiply(v.values)));
}

inline double combined_mass_norm(const FemPair& pair, const FemSystem& system) {
  const double a = mass_norm(pair.re, system);
  const double b = mass_norm(pair.im, system);
  return std::sqrt(a * a + b * b);
}

/// Evaluate a finite element function at x in [0,1].
inline double evaluate(const FemFunction& v, const Mesh& mesh, double x) {
  stochtrig::detail::require(x >= 0.0 && x <= 1.0, "evaluate: x must lie in [0,1]");
  const int n = mesh.num_cells();
  const int cell = std::min(static_cast<int>(x * n), n - 1);
  const double local = x * n - cell;
  const auto nodal = [&](int node) { return node <= 0 || node >= n ? 0.0 : v.values[node - 1]; };
  return (1.0 - local) * nodal(cell) + local * nodal(cell + 1);
}

/// L2 projection P_h f: solves M u = (f, psi_i) with 5-point Gauss quadrature per cell.
inline FemFunction l2_project(const std::function<double(double)>& f, const FemSystem& system) {
  const Mesh& mesh = system.mesh();
  const int n = mesh.num_cells();
  const double h = mesh.h();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(system.dim());
  for (int cell = 0; cell < n; ++cell) {
    const double left = mesh.node(cell);
    double to_left = 0.0;
    double to_right = 0.0;
    for (std::size_t q = 0; q < quadrature::kGaussNodes.size(); ++q) {
      const double xi = 0.5 * (quadrature::kGaussNodes[q] + 1.0);
      const double value = f(left + xi * h) * quadrature::kGaussWeights[q] * 0.5 * h;
      to_left += value * (1.0 - xi);
      to_right += value * xi;
    }
    if (!std::isfinite(to_left) || !std::isfinite(to_right))
      throw NumericalError("l2_project: non-finite quadrature value in cell " + std::to_string(cell));
    if (cell >= 1) load[cell - 1] += to_left;
    if (cell + 1 <= n - 1) load[cell] += to_right;
  }
  return {system.mass().solve(load)};
}

/// (sqrt(2) sin(j pi x), psi_i) in closed form: sqrt(2) sin(j pi x_i) h sinc^2(j pi h / 2).
inline double sine_load(int j, int node, const Mesh& mesh) {
  const double h = mesh.h();
  const double w = j * std::numbers::pi;
  const double s = detail::sinc(0.5 * w * h);
  return std::numbers::sqrt2 * std::sin(w * mesh.node(node)) * h * s * s;
}

/// P_h of a truncated eigen-expansion, using exact load integrals.
inline FemFunction project_spectral(const spectral::SpectralField& v, const FemSystem& system) {
  const Mesh& mesh = system.mesh();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(system.dim());
  for (Eigen::Index j = 0; j < v.coeffs.size(); ++j) {
    if (v.coeffs[j] == 0.0) continue;
    for (int i = 1; i <= mesh.num_interior(); ++i)
      load[i - 1] += v.coeffs[j] * sine_load(static_cast<int>(j) + 1, i, mesh);
  }
  return {system.mass().solve(load)};
}

/// P_h of the P1 interpolant through all N+1 nodal values (boundary values may be nonzero).
inline FemFunction project_interpolant(const Eigen::VectorXd& all_nodes, const FemSystem& system) {
  const int n = system.mesh().num_cells();
  stochtrig::detail::require(all_nodes.size() == n + 1, "project_interpolant: expected N+1 nodal values");
  const double h = system.mesh().h();
  Eigen::VectorXd load(system.dim());
  for (int i = 1; i < n; ++i) load[i - 1] = h / 6.0 * (all_nodes[i - 1] + 4.0 * all_nodes[i] + all_nodes[i + 1]);
  return {system.mass().solve(load)};
}

/// Precomputed linear maps from spectral coefficients (first J modes) into V_h.
class SpectralProjector {
public:
  SpectralProjector(const FemSystem& system, int num_modes) : num_modes_(num_modes) {
    stochtrig::detail::require(num_modes >= 1, "SpectralProjector: need at least one mode");
    const Mesh& mesh = system.mesh();
    const int n = system.dim();
    Eigen::MatrixXd loads(n, num_modes);
    nodal_eval_.resize(n, num_modes);
    for (int j = 1; j <= num_modes; ++j) {
      for (int i = 1; i <= n; ++i) {
        loads(i - 1, j - 1) = sine_load(j, i, mesh);
        nodal_eval_(i - 1, j - 1) = std::numbers::sqrt2 * std::sin(j * std::numbers::pi * mesh.node(i));
      }
    }
    projection_.resize(n, num_modes);
    for (int j = 0; j < num_modes; ++j) projection_.col(j) = system.mass().solve(loads.col(j));
    // V^T M M^{-1} G = V^T G.
    modal_projection_ = system.eig_vectors().transpose() * loads;
  }

  int num_modes() const { return num_modes_; }
  /// Nodal values of P_h phi_j in column j-1.
  const Eigen::MatrixXd& projection() const { return projection_; }
  /// Discrete eigen-coordinates of P_h phi_j in column j-1.
  const Eigen::MatrixXd& modal_projection() const { return modal_projection_; }
  /// phi_j at interior nodes in column j-1.
  const Eigen::MatrixXd& nodal_eval() const { return nodal_eval_; }

  FemFunction project(const Eigen::VectorXd& coeffs) const {
    stochtrig::detail::require(coeffs.size() == num_modes_, "SpectralProjector: coefficient count mismatch");
    return {projection_ * coeffs};
  }

private:
  int num_modes_;
  Eigen::MatrixXd projection_;
  Eigen::MatrixXd modal_projection_;
  Eigen::MatrixXd nodal_eval_;
};

/// Test hook for the diagnostics fault-injection harness.
enum class RotationFault { none, flip_sine_sign };

/// e^{t A_h}: rotate each discrete eigen-coordinate pair by t lambda_{h,j}.
inline FemPair apply_discrete_trig(const FemPair& state, double t, const FemSystem& system,
                                   RotationFault fault = RotationFault::none) {
  detail::check_function(system, state.re, "apply_discrete_trig");
  detail::check_function(system, state.im, "apply_discrete_trig");
  const Eigen::VectorXd a = system.modal(state.re);
  const Eigen::VectorXd b = system.modal(state.im);
  Eigen::VectorXd ra(a.size()), rb(b.size());
  const double lower_sign = fault == RotationFault::flip_sine_sign ? -1.0 : 1.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double angle = t * system.eig_values()[j];
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    ra[j] = c * a[j] - s * b[j];
    rb[j] = lower_sign * s * a[j] + c * b[j];
  }
  return {system.nodal(ra), system.nodal(rb)};
}

/// ||A_h^{s/2} v||.
inline double discrete_fractional_norm(const FemFunction& v, double s, const FemSystem& system) {
  detail::check_function(system, v, "discrete_fractional_norm");
  const Eigen::VectorXd c = system.modal(v);
  double sum = 0.0;
  for (Eigen::Index j = c.size() - 1; j >= 0; --j) sum += std::pow(system.eig_values()[j], s) * c[j] * c[j];
  return std::sqrt(sum);
}

/// ||A_h^gamma P_h A^{-gamma} v||, gamma in [-1/2, 1]. The known bound is <= ||v||.
inline double norm_relation_check(const spectral::SpectralField& v, double gamma, const FemSystem& system) {
  stochtrig::detail::require(gamma >= -0.5 && gamma <= 1.0, "norm_relation_check: gamma must lie in [-1/2, 1]");
  spectral::SpectralField scaled = v;
  for (Eigen::Index j = 0; j < scaled.coeffs.size(); ++j)
    scaled.coeffs[j] *= std::pow(spectral::eigenvalue(static_cast<int>(j) + 1), -gamma);
  return discrete_fractional_norm(project_spectral(scaled, system), 2.0 * gamma, system);
}

/// Nodal restriction of a fine-mesh function to a nested coarse mesh.
inline FemFunction restrict_to_coarse(const FemFunction& fine, const Mesh& fine_mesh, const Mesh& coarse_mesh) {
  stochtrig::detail::require(fine.values.size() == fine_mesh.num_interior(), "restrict_to_coarse: size mismatch");
  stochtrig::detail::require(fine_mesh.num_cells() % coarse_mesh.num_cells() == 0,
                             "restrict_to_coarse: meshes are not nested");
  const int ratio = fine_mesh.num_cells() / coarse_mesh.num_cells();
  FemFunction coarse = FemFunction::zero(coarse_mesh);
  for (int i = 1; i <= coarse_mesh.num_interior(); ++i) coarse.values[i - 1] = fine.values[i * ratio - 1];
  return coarse;
}

}  // namespace stochtrig::fem
