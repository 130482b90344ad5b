#pragma once

// Stochastic trigonometric time stepping on top of the P1 space discretization:
//
//   U^{n+1} = e^{k A_h} (U^n + k P_h G(U^n) + P_h F(U^n) dW^n)
//
// with G, F = 0, 1 for the additive linear problem, plus an exact sampler for the
// semi-discrete mild solution of the linear problem jointly with the scheme's
// increments.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochtrig/error.hpp"
#include "stochtrig/fem1d.hpp"
#include "stochtrig/noise.hpp"
#include "stochtrig/random.hpp"

namespace stochtrig::schemes {

/// Pointwise drift (g1, g2) and diffusion multipliers (f1, f2) with their declared
/// Lipschitz (K) and growth (L) constants.
struct Nonlinearity {
  using Map = std::function<double(double, double)>;

  Map g1, g2, f1, f2;
  double declared_Kg = 0.0;
  double declared_Kf = 0.0;
  double declared_Lg = 0.0;
  double declared_Lf = 0.0;
};

/// g1 = sqrt(u2^2 + 1), g2 = sqrt(u1^2 + 1), f1 = sqrt(u1^2 + 1), f2 = sqrt(u2^2 + 1).
inline Nonlinearity sqrt_nonlinearity() {
  Nonlinearity nl;
  nl.g1 = [](double, double b) { return std::sqrt(b * b + 1.0); };
  nl.g2 = [](double a, double) { return std::sqrt(a * a + 1.0); };
  nl.f1 = [](double a, double) { return std::sqrt(a * a + 1.0); };
  nl.f2 = [](double, double b) { return std::sqrt(b * b + 1.0); };
  nl.declared_Kg = nl.declared_Kf = 1.0;
  nl.declared_Lg = nl.declared_Lf = std::numbers::sqrt2;
  return nl;
}

/// g = 0, f = 1: the linear additive problem written as a semilinear one.
inline Nonlinearity additive_nonlinearity() {
  Nonlinearity nl;
  nl.g1 = nl.g2 = [](double, double) { return 0.0; };
  nl.f1 = nl.f2 = [](double, double) { return 1.0; };
  return nl;
}

struct LipschitzReport {
  double max_quotient_g = 0.0;
  double max_quotient_f = 0.0;
  bool ok = false;
};

/// Largest observed (|dg1| + |dg2|) / (|da| + |db|) (same for f) over random pairs
/// in [-10, 10]^2; ok when neither exceeds its declared constant by more than 1e-9.
inline LipschitzReport validate_lipschitz(const Nonlinearity& nl, int n_pairs = 10000, std::uint64_t seed = 7) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  LipschitzReport report;
  for (int i = 0; i < n_pairs; ++i) {
    const double a = dist(gen), b = dist(gen), c = dist(gen), d = dist(gen);
    const double gap = std::abs(a - c) + std::abs(b - d);
    if (gap == 0.0) continue;
    const double dg = std::abs(nl.g1(a, b) - nl.g1(c, d)) + std::abs(nl.g2(a, b) - nl.g2(c, d));
    const double df = std::abs(nl.f1(a, b) - nl.f1(c, d)) + std::abs(nl.f2(a, b) - nl.f2(c, d));
    report.max_quotient_g = std::max(report.max_quotient_g, dg / gap);
    report.max_quotient_f = std::max(report.max_quotient_f, df / gap);
  }
  report.ok = report.max_quotient_g <= nl.declared_Kg + 1e-9 && report.max_quotient_f <= nl.declared_Kf + 1e-9;
  return report;
}

/// How P_h F(U) dW is realized in V_h.
enum class OperatorOrdering {
  project_then_multiply,  // f(U_i) * (P_h dW)_i at interior nodes
  multiply_then_project,  // P_h of the interpolant of f(U(x_i)) dW(x_i)
};

using InitialCondition = std::function<double(double)>;

struct ModelProblem {
  std::optional<Nonlinearity> nonlinearity;  // absent: linear additive problem
  noise::NoiseSpec noise;
  InitialCondition initial_re;
  InitialCondition initial_im;
  double T = 1.0;
  OperatorOrdering ordering = OperatorOrdering::project_then_multiply;

  bool is_linear() const { return !nonlinearity.has_value(); }
};

/// u0 = sin(2 pi x) + i x (1 - x).
inline InitialCondition default_initial_re() {
  return [](double x) { return std::sin(2.0 * std::numbers::pi * x); };
}
inline InitialCondition default_initial_im() {
  return [](double x) { return x * (1.0 - x); };
}

inline ModelProblem semilinear_model(const noise::NoiseSpec& noise, double T = 1.0) {
  return {sqrt_nonlinearity(), noise, default_initial_re(), default_initial_im(), T,
          OperatorOrdering::project_then_multiply};
}

inline ModelProblem linear_problem(const noise::NoiseSpec& noise, double T = 1.0) {
  return {std::nullopt, noise, default_initial_re(), default_initial_im(), T,
          OperatorOrdering::project_then_multiply};
}

/// A mesh together with the spectral-to-V_h maps for a given mode count.
/// Shared read-only between trajectories.
class Discretization {
public:
  Discretization(const fem::Mesh& mesh, int num_modes) : system_(mesh), projector_(system_, num_modes) {}

  const fem::FemSystem& system() const { return system_; }
  const fem::SpectralProjector& projector() const { return projector_; }
  const fem::Mesh& mesh() const { return system_.mesh(); }

private:
  fem::FemSystem system_;
  fem::SpectralProjector projector_;
};

struct SchemeState {
  int step_index = 0;
  fem::FemPair pair;
};

namespace detail {

inline void check_dt(const noise::WienerIncrement& inc, double k) {
  stochtrig::detail::require(std::abs(inc.dt - k) <= 1e-12 * std::max(1.0, k),
                             "step: increment spans dt = " + std::to_string(inc.dt) + " but k = " +
                                 std::to_string(k));
}

inline void check_finite(const fem::FemPair& pair, int step) {
  if (!pair.re.values.allFinite() || !pair.im.values.allFinite())
    throw BlowupError(step, "non-finite nodal value");
}

/// Nodal values of g(U) at all N+1 nodes; boundary nodes carry g(0, 0).
inline Eigen::VectorXd nodal_composition(const Nonlinearity::Map& map, const fem::FemPair& u) {
  const Eigen::Index n = u.re.values.size();
  Eigen::VectorXd out(n + 2);
  out[0] = out[n + 1] = map(0.0, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) out[i + 1] = map(u.re.values[i], u.im.values[i]);
  return out;
}

inline fem::FemPair advance(const fem::FemPair& pre, double k, const fem::FemSystem& system, int next_step) {
  fem::FemPair next = fem::apply_discrete_trig(pre, k, system);
  check_finite(next, next_step);
  return next;
}

}  // namespace detail

/// U^{n+1} = e^{k A_h}(U^n + P_h dW^n).
inline SchemeState step_linear_additive(const SchemeState& state, const noise::WienerIncrement& inc, double k,
                                        const Discretization& disc) {
  detail::check_dt(inc, k);
  const fem::FemPair dw = noise::increment_to_fem(inc, disc.projector());
  fem::FemPair pre{{state.pair.re.values + dw.re.values}, {state.pair.im.values + dw.im.values}};
  return {state.step_index + 1, detail::advance(pre, k, disc.system(), state.step_index + 1)};
}

inline SchemeState step_linear_additive(const SchemeState& state, const noise::WienerIncrement& inc, double k,
                                        const fem::FemSystem& system) {
  return step_linear_additive(state, inc, k, Discretization(system.mesh(), static_cast<int>(inc.dw1.size())));
}

/// U^{n+1} = e^{k A_h}(U^n + k P_h G(U^n) + P_h F(U^n) dW^n), G and F evaluated at nodes.
inline SchemeState step_semilinear(const SchemeState& state, const noise::WienerIncrement& inc, double k,
                                   const Discretization& disc, const Nonlinearity& nl,
                                   OperatorOrdering ordering = OperatorOrdering::project_then_multiply) {
  detail::check_dt(inc, k);
  const fem::FemSystem& system = disc.system();
  const fem::FemPair& u = state.pair;

  const fem::FemFunction drift_re = fem::project_interpolant(detail::nodal_composition(nl.g1, u), system);
  const fem::FemFunction drift_im = fem::project_interpolant(detail::nodal_composition(nl.g2, u), system);
  const Eigen::VectorXd f1 = detail::nodal_composition(nl.f1, u);
  const Eigen::VectorXd f2 = detail::nodal_composition(nl.f2, u);
  const Eigen::Index n = u.re.values.size();

  Eigen::VectorXd noise_re, noise_im;
  if (ordering == OperatorOrdering::project_then_multiply) {
    const fem::FemPair dw = noise::increment_to_fem(inc, disc.projector());
    noise_re = f1.segment(1, n).cwiseProduct(dw.re.values);
    noise_im = f2.segment(1, n).cwiseProduct(dw.im.values);
  } else {
    // dW vanishes on the boundary, so the boundary entries of the product are zero.
    const auto& eval = disc.projector().nodal_eval();
    Eigen::VectorXd w1 = Eigen::VectorXd::Zero(n + 2), w2 = Eigen::VectorXd::Zero(n + 2);
    w1.segment(1, n) = f1.segment(1, n).cwiseProduct(eval * inc.dw1);
    w2.segment(1, n) = f2.segment(1, n).cwiseProduct(eval * inc.dw2);
    noise_re = fem::project_interpolant(w1, system).values;
    noise_im = fem::project_interpolant(w2, system).values;
  }

  fem::FemPair pre{{(u.re.values + k * drift_re.values) + noise_re}, {(u.im.values + k * drift_im.values) + noise_im}};
  return {state.step_index + 1, detail::advance(pre, k, system, state.step_index + 1)};
}

inline SchemeState step_semilinear(const SchemeState& state, const noise::WienerIncrement& inc, double k,
                                   const fem::FemSystem& system, const Nonlinearity& nl,
                                   OperatorOrdering ordering = OperatorOrdering::project_then_multiply) {
  return step_semilinear(state, inc, k, Discretization(system.mesh(), static_cast<int>(inc.dw1.size())), nl,
                         ordering);
}

/// U^0 = (P_h u01, P_h u02).
inline SchemeState initial_state(const ModelProblem& problem, const fem::FemSystem& system) {
  return {0, {fem::l2_project(problem.initial_re, system), fem::l2_project(problem.initial_im, system)}};
}

enum class TrajectoryOutput { all_states, final_only };

/// Iterates the scheme over every increment of `path`. Step errors propagate as
/// BlowupError carrying the failing step index.
inline std::vector<SchemeState> run_trajectory(const ModelProblem& problem, const Discretization& disc,
                                               const noise::PathTable& path,
                                               TrajectoryOutput output = TrajectoryOutput::all_states) {
  stochtrig::detail::require(path.n_steps() >= 1, "run_trajectory: empty path");
  stochtrig::detail::require(std::abs(path.final_time() - problem.T) <= 1e-9 * problem.T,
                             "run_trajectory: path does not span [0, T]");
  const double k = path.dt();
  std::vector<SchemeState> states;
  states.reserve(output == TrajectoryOutput::all_states ? path.increments.size() + 1 : 1);
  SchemeState state = initial_state(problem, disc.system());
  if (output == TrajectoryOutput::all_states) states.push_back(state);
  for (const auto& inc : path.increments) {
    state = problem.is_linear() ? step_linear_additive(state, inc, k, disc)
                                : step_semilinear(state, inc, k, disc, *problem.nonlinearity, problem.ordering);
    if (output == TrajectoryOutput::all_states) states.push_back(state);
  }
  if (output == TrajectoryOutput::final_only) states.push_back(std::move(state));
  return states;
}

inline std::vector<SchemeState> run_trajectory(const ModelProblem& problem, const fem::FemSystem& system,
                                               const noise::PathTable& path,
                                               TrajectoryOutput output = TrajectoryOutput::all_states) {
  stochtrig::detail::require(!path.increments.empty(), "run_trajectory: empty path");
  return run_trajectory(problem, Discretization(system.mesh(), static_cast<int>(path.increments[0].dw1.size())),
                        path, output);
}

// ---------------------------------------------------------------------------
// Exact semi-discrete mild solution of the linear problem.
// ---------------------------------------------------------------------------

namespace convolution {

/// int_0^k cos(a s) ds = k sinc(a k).
inline double cos_integral(double a, double k) { return k * fem::detail::sinc(a * k); }

/// int_0^k sin(a s) ds = (1 - cos(a k)) / a = 2 sin^2(a k / 2) / a.
inline double sin_integral(double a, double k) {
  const double s = fem::detail::sinc(0.5 * a * k);
  return 0.5 * a * k * k * s * s;
}

inline double cos_cos(double a, double b, double k) {
  return 0.5 * (cos_integral(a - b, k) + cos_integral(a + b, k));
}
inline double sin_sin(double a, double b, double k) {
  return 0.5 * (cos_integral(a - b, k) - cos_integral(a + b, k));
}
/// int_0^k sin(a s) cos(b s) ds.
inline double sin_cos(double a, double b, double k) {
  return 0.5 * (sin_integral(a + b, k) + sin_integral(a - b, k));
}

/// Covariance of (dbeta, int cos(lambda_m s) dbeta, ..., int sin(lambda_m s) dbeta, ...)
/// over one step of length k, s = t_{n+1} - tau; size 1 + 2 n.
inline Eigen::MatrixXd step_covariance(const Eigen::VectorXd& lambdas, double k) {
  const Eigen::Index n = lambdas.size();
  Eigen::MatrixXd c(1 + 2 * n, 1 + 2 * n);
  c(0, 0) = k;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double lm = lambdas[m];
    c(0, 1 + m) = c(1 + m, 0) = cos_integral(lm, k);
    c(0, 1 + n + m) = c(1 + n + m, 0) = sin_integral(lm, k);
    for (Eigen::Index q = 0; q <= m; ++q) {
      const double lq = lambdas[q];
      c(1 + m, 1 + q) = c(1 + q, 1 + m) = cos_cos(lm, lq, k);
      c(1 + n + m, 1 + n + q) = c(1 + n + q, 1 + n + m) = sin_sin(lm, lq, k);
    }
    for (Eigen::Index q = 0; q < n; ++q) c(1 + n + m, 1 + q) = c(1 + q, 1 + n + m) = sin_cos(lm, lambdas[q], k);
  }
  return c;
}

struct Factorization {
  Eigen::MatrixXd factor;  // factor * factor^T == covariance (after clamping)
  bool clamped = false;    // an eigenvalue below -1e-12 * scale was set to zero
  double min_eigenvalue = 0.0;
};

/// Square-root factor F (F F^T = C) whose first row is (sqrt(c00), 0, ..., 0), so
/// the first variate reproduces the path increment exactly. The remaining block is
/// the Schur complement given the first variable, factored by a symmetric
/// eigendecomposition; negative eigenvalues from rounding are clamped to zero and
/// significant ones reported on `warn`.
inline Factorization factor_covariance(const Eigen::MatrixXd& c, std::ostream* warn = &std::cerr) {
  const Eigen::Index n = c.rows();
  stochtrig::detail::require(n >= 1 && c.cols() == n && c(0, 0) > 0.0, "factor_covariance: bad covariance");
  Factorization out;
  out.factor = Eigen::MatrixXd::Zero(n, n);
  const double root = std::sqrt(c(0, 0));
  out.factor(0, 0) = root;
  if (n == 1) return out;

  const Eigen::VectorXd cross = c.col(0).tail(n - 1);
  out.factor.col(0).tail(n - 1) = cross / root;
  Eigen::MatrixXd schur = c.bottomRightCorner(n - 1, n - 1) - cross * cross.transpose() / c(0, 0);
  schur = 0.5 * (schur + schur.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur);
  if (eig.info() != Eigen::Success) throw NumericalError("factor_covariance: eigendecomposition failed");
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double scale = c.diagonal().maxCoeff();
  if (out.min_eigenvalue < -1e-12 * scale) {
    out.clamped = true;
    if (warn)
      *warn << "warning: step covariance not positive semidefinite (min eigenvalue " << out.min_eigenvalue
            << "); clamped to 0\n";
  }
  out.factor.bottomRightCorner(n - 1, n - 1) =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return out;
}

}  // namespace convolution

/// Samples X_h(T) of the linear additive problem from the exact law of the
/// semi-discrete mild solution, coupled to the scheme's Brownian increments.
/// Per step, spectral mode j and process, the draws (dbeta_j, int cos(lambda_{h,m}
/// (t_{n+1}-tau)) dbeta_j, int sin(...) dbeta_j) for all discrete modes m are
/// jointly Gaussian; the first coordinate reuses the path's own normal variate.
class ExactLinearSampler {
public:
  struct Sample {
    noise::PathTable path;  // increments consumed by the scheme, identical to noise::sample_path
    fem::FemPair final_state;
  };

  ExactLinearSampler(const Discretization& disc, const noise::NoiseSpec& noise, double T, int n_steps)
      : disc_(disc), noise_(noise), T_(T), n_steps_(n_steps), k_(T / n_steps) {
    stochtrig::detail::require(n_steps >= 1 && T > 0.0, "ExactLinearSampler: bad time grid");
    stochtrig::detail::require(noise.num_modes == disc.projector().num_modes(),
                               "ExactLinearSampler: noise and projector mode counts differ");
    factor_ = convolution::factor_covariance(convolution::step_covariance(disc.system().eig_values(), k_)).factor;
    weights_ = disc.projector().modal_projection();
    for (int j = 0; j < noise.num_modes; ++j) weights_.col(j) *= noise.amplitude * std::sqrt(noise.variance(j + 1));
  }

  const Eigen::MatrixXd& factor() const { return factor_; }
  double step() const { return k_; }

  Sample sample(const fem::FemPair& initial, std::uint64_t seed, std::uint64_t sample_index) const {
    const fem::FemSystem& system = disc_.system();
    const Eigen::Index n = system.dim();
    const Eigen::Index dim = 1 + 2 * n;
    const int J = noise_.num_modes;
    const rng::GaussianStream stream(seed);

    Sample out{noise::sample_path(noise_, T_, n_steps_, seed, sample_index), {}};
    Eigen::VectorXd a = system.modal(initial.re);
    Eigen::VectorXd b = system.modal(initial.im);
    Eigen::VectorXd cos_step(n), sin_step(n);
    for (Eigen::Index m = 0; m < n; ++m) {
      cos_step[m] = std::cos(k_ * system.eig_values()[m]);
      sin_step[m] = std::sin(k_ * system.eig_values()[m]);
    }

    Eigen::MatrixXd z(dim, J);
    // conv[p] = (cos-convolution, sin-convolution) of process p in every discrete mode.
    const auto convolve = [&](std::uint32_t process, std::uint32_t step) {
      for (int j = 0; j < J; ++j)
        for (Eigen::Index r = 0; r < dim; ++r)
          z(r, j) = stream({sample_index, process, static_cast<std::uint32_t>(r), step, static_cast<std::uint32_t>(j)});
      const Eigen::MatrixXd y = z * weights_.transpose();  // dim x n
      Eigen::VectorXd c(n), s(n);
      for (Eigen::Index m = 0; m < n; ++m) {
        c[m] = factor_.row(1 + m).dot(y.col(m));
        s[m] = factor_.row(1 + n + m).dot(y.col(m));
      }
      return std::pair{c, s};
    };

    const std::uint32_t p2 = noise::second_process(noise_);
    for (int step = 0; step < n_steps_; ++step) {
      const auto s32 = static_cast<std::uint32_t>(step);
      const auto [c1, s1] = convolve(1u, s32);
      const auto [c2, s2] = p2 == 1u ? std::pair{c1, s1} : convolve(p2, s32);
      const Eigen::VectorXd ra = cos_step.cwiseProduct(a) - sin_step.cwiseProduct(b) + (c1 - s2);
      const Eigen::VectorXd rb = sin_step.cwiseProduct(a) + cos_step.cwiseProduct(b) + (s1 + c2);
      a = ra;
      b = rb;
    }
    out.final_state = {system.nodal(a), system.nodal(b)};
    return out;
  }

private:
  const Discretization& disc_;
  noise::NoiseSpec noise_;
  double T_;
  int n_steps_;
  double k_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd weights_;  // modal projection scaled by sqrt(gamma_j)
};

/// One sample of X_h(T) for the linear problem together with its coupled path.
inline ExactLinearSampler::Sample exact_linear_mild(const ModelProblem& problem, const Discretization& disc,
                                                    int n_steps, std::uint64_t seed, std::uint64_t sample_index) {
  stochtrig::detail::require(problem.is_linear(), "exact_linear_mild: only defined for the linear problem");
  const ExactLinearSampler sampler(disc, problem.noise, problem.T, n_steps);
  return sampler.sample(initial_state(problem, disc.system()).pair, seed, sample_index);
}

}  // namespace stochtrig::schemes
