#pragma once

// Q-Wiener increments with Q = A^{-s}, sampled through a truncated
// Karhunen-Loeve expansion W(t) = sum_j sqrt(gamma_j) beta_j(t) phi_j.
// Fine paths are the unit of randomness; coarser time grids are obtained by
// summing fine increments, so every resolution sees the same Brownian path.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochtrig/error.hpp"
#include "stochtrig/fem1d.hpp"
#include "stochtrig/quadrature.hpp"
#include "stochtrig/random.hpp"
#include "stochtrig/spectral.hpp"

namespace stochtrig::noise {

struct NoiseSpec {
  double s = 0.0;         // Q = A^{-s}
  int num_modes = 1;      // J
  bool correlated = false;  // W1 and W2 share their Brownian drivers
  double amplitude = 1.0;   // 0 switches the noise off

  /// gamma_j = lambda_j^{-s}, 1-based mode index.
  double variance(int j) const { return std::pow(spectral::eigenvalue(j), -s); }

  void validate() const {
    detail::require(num_modes >= 1, "NoiseSpec: num_modes must be >= 1");
    detail::require(std::isfinite(s), "NoiseSpec: s must be finite");
    detail::require(amplitude >= 0.0, "NoiseSpec: amplitude must be >= 0");
  }
};

/// Spectral coefficients of (W1(t+dt) - W1(t), W2(t+dt) - W2(t)).
struct WienerIncrement {
  Eigen::VectorXd dw1;
  Eigen::VectorXd dw2;
  double dt = 0.0;
};

struct PathTable {
  std::vector<WienerIncrement> increments;
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;

  int n_steps() const { return static_cast<int>(increments.size()); }
  double dt() const { return increments.empty() ? 0.0 : increments.front().dt; }
  double final_time() const { return dt() * n_steps(); }
};

/// Stream process id used for W2; W1 always draws from process 1.
inline std::uint32_t second_process(const NoiseSpec& spec) { return spec.correlated ? 1u : 2u; }

/// n_fine increments of step T/n_fine. Entry (n, j) of process p is
/// sqrt(k gamma_j) xi with xi keyed by (seed, sample_index, p, n, j).
inline PathTable sample_path(const NoiseSpec& spec, double T, int n_fine, std::uint64_t seed,
                             std::uint64_t sample_index) {
  spec.validate();
  detail::require(T > 0.0, "sample_path: T must be positive");
  detail::require(n_fine >= 1, "sample_path: n_fine must be >= 1");
  const double k = T / n_fine;
  const int J = spec.num_modes;
  Eigen::VectorXd scale(J);
  for (int j = 0; j < J; ++j) scale[j] = spec.amplitude * std::sqrt(k * spec.variance(j + 1));

  const rng::GaussianStream stream(seed);
  const std::uint32_t p2 = second_process(spec);
  PathTable path{{}, seed, sample_index};
  path.increments.reserve(static_cast<std::size_t>(n_fine));
  for (int n = 0; n < n_fine; ++n) {
    WienerIncrement inc{Eigen::VectorXd(J), Eigen::VectorXd(J), k};
    for (int j = 0; j < J; ++j) {
      const auto step = static_cast<std::uint32_t>(n);
      const auto mode = static_cast<std::uint32_t>(j);
      inc.dw1[j] = scale[j] * stream({sample_index, 1u, 0u, step, mode});
      inc.dw2[j] = p2 == 1u ? inc.dw1[j] : scale[j] * stream({sample_index, p2, 0u, step, mode});
    }
    path.increments.push_back(std::move(inc));
  }
  return path;
}

namespace detail {

inline PathTable halve(const PathTable& path) {
  PathTable out{{}, path.seed, path.sample_index};
  out.increments.reserve(path.increments.size() / 2);
  for (std::size_t m = 0; m + 1 < path.increments.size(); m += 2) {
    const auto& a = path.increments[m];
    const auto& b = path.increments[m + 1];
    out.increments.push_back({a.dw1 + b.dw1, a.dw2 + b.dw2, a.dt + b.dt});
  }
  return out;
}

}  // namespace detail

/// Merge blocks of `factor` consecutive increments. Power-of-two factors sum
/// pairwise, so coarsen(p, a*b) == coarsen(coarsen(p, a), b) bitwise for dyadic a, b.
inline PathTable coarsen(const PathTable& path, int factor) {
  stochtrig::detail::require(factor >= 1, "coarsen: factor must be >= 1");
  stochtrig::detail::require(path.n_steps() % factor == 0, "coarsen: factor " + std::to_string(factor) +
                                                               " does not divide " +
                                                               std::to_string(path.n_steps()));
  if (factor == 1) return path;
  if (std::has_single_bit(static_cast<unsigned>(factor))) {
    PathTable out = detail::halve(path);
    for (int f = factor / 2; f > 1; f /= 2) out = detail::halve(out);
    return out;
  }
  PathTable out{{}, path.seed, path.sample_index};
  for (int m = 0; m < path.n_steps() / factor; ++m) {
    WienerIncrement acc = path.increments[static_cast<std::size_t>(m * factor)];
    for (int i = 1; i < factor; ++i) {
      const auto& next = path.increments[static_cast<std::size_t>(m * factor + i)];
      acc.dw1 += next.dw1;
      acc.dw2 += next.dw2;
      acc.dt += next.dt;
    }
    out.increments.push_back(std::move(acc));
  }
  return out;
}

/// (P_h dW1, P_h dW2) through a precomputed projector.
inline fem::FemPair increment_to_fem(const WienerIncrement& inc, const fem::SpectralProjector& projector) {
  return {projector.project(inc.dw1), projector.project(inc.dw2)};
}

inline fem::FemPair increment_to_fem(const WienerIncrement& inc, const fem::FemSystem& system) {
  return {fem::project_spectral({inc.dw1}, system), fem::project_spectral({inc.dw2}, system)};
}

struct TraceDiagnostic {
  double truncated_trace = 0.0;  // sum_{j<=J} gamma_j
  double tail_bound = 0.0;       // lambda_J^{-s} J, an upper bound on the omitted tail for s > 1/2
  bool trace_class = false;      // s > 1/2 in one dimension
  std::string warning;
};

inline TraceDiagnostic trace_diagnostic(const NoiseSpec& spec) {
  spec.validate();
  TraceDiagnostic out;
  for (int j = spec.num_modes; j >= 1; --j) out.truncated_trace += spec.variance(j);
  out.tail_bound = spec.variance(spec.num_modes) * spec.num_modes;
  out.trace_class = spec.s > 0.5;
  if (!out.trace_class)
    out.warning = "Tr(Q) diverges for s <= 1/2; reported trace is truncated at J = " +
                  std::to_string(spec.num_modes);
  return out;
}

struct IsometryReport {
  double monte_carlo = 0.0;
  double analytic = 0.0;
  double stderr_mc = 0.0;
  double z_score = 0.0;
  int n_samples = 0;
};

/// Per-mode deterministic integrand phi_j(tau), 1-based j.
using ModeWeight = std::function<double(int, double)>;

/// Monte Carlo check of E||int_0^T Phi dW||^2 = sum_j gamma_j int_0^T phi_j^2 for a
/// diagonal Phi. On each path step the integral is split into the part driven by
/// the path increment (step mean of phi times dbeta) and an independent Gaussian
/// remainder carrying the variance of phi about its step mean, so the sampled
/// integral has the exact law for any step count.
inline IsometryReport ito_isometry_check(const NoiseSpec& spec, const ModeWeight& phi, double T, int n_samples,
                                         std::uint64_t seed, int n_steps = 16) {
  spec.validate();
  stochtrig::detail::require(n_samples >= 1000, "ito_isometry_check: need at least 1000 samples");
  stochtrig::detail::require(T > 0.0 && n_steps >= 1, "ito_isometry_check: bad time grid");
  const int J = spec.num_modes;
  const double k = T / n_steps;
  constexpr int kSubcells = 64;

  Eigen::MatrixXd mean(J, n_steps), remainder_sd(J, n_steps);
  double analytic = 0.0;
  for (int j = 1; j <= J; ++j) {
    double mode_total = 0.0;
    for (int n = 0; n < n_steps; ++n) {
      const double a = n * k;
      const double integral = quadrature::integrate([&](double tau) { return phi(j, tau); }, a, a + k, kSubcells);
      const double integral_sq = quadrature::integrate(
          [&](double tau) {
            const double v = phi(j, tau);
            return v * v;
          },
          a, a + k, kSubcells);
      mean(j - 1, n) = integral / k;
      remainder_sd(j - 1, n) = std::sqrt(std::max(0.0, integral_sq - integral * integral / k));
      mode_total += integral_sq;
    }
    analytic += spec.amplitude * spec.amplitude * spec.variance(j) * mode_total;
  }

  const rng::GaussianStream stream(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (int sample = 0; sample < n_samples; ++sample) {
    const PathTable path = sample_path(spec, T, n_steps, seed, static_cast<std::uint64_t>(sample));
    double norm_sq = 0.0;
    for (int j = 0; j < J; ++j) {
      const double sd = spec.amplitude * std::sqrt(spec.variance(j + 1));
      double x = 0.0;
      for (int n = 0; n < n_steps; ++n) {
        const double eta = stream({static_cast<std::uint64_t>(sample), 1u, 1u, static_cast<std::uint32_t>(n),
                                   static_cast<std::uint32_t>(j)});
        x += mean(j, n) * path.increments[static_cast<std::size_t>(n)].dw1[j] + sd * remainder_sd(j, n) * eta;
      }
      norm_sq += x * x;
    }
    sum += norm_sq;
    sum_sq += norm_sq * norm_sq;
  }
  IsometryReport report;
  report.n_samples = n_samples;
  report.analytic = analytic;
  report.monte_carlo = sum / n_samples;
  const double var = std::max(0.0, (sum_sq - sum * sum / n_samples) / (n_samples - 1));
  report.stderr_mc = std::sqrt(var / n_samples);
  report.z_score = report.stderr_mc > 0.0 ? (report.monte_carlo - report.analytic) / report.stderr_mc : 0.0;
  return report;
}

/// Debug dump: little-endian [J:u32][n_fine:u32][dt:f64][dw1 row-major f64...][dw2 ...].
inline void write_path_dump(const PathTable& path, std::ostream& out) {
  const auto put_u32 = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.put(static_cast<char>((v >> (8 * b)) & 0xFFu));
  };
  const auto put_f64 = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  };
  const auto J = path.increments.empty() ? 0u : static_cast<std::uint32_t>(path.increments.front().dw1.size());
  put_u32(J);
  put_u32(static_cast<std::uint32_t>(path.n_steps()));
  put_f64(path.dt());
  for (const auto& inc : path.increments)
    for (Eigen::Index j = 0; j < inc.dw1.size(); ++j) put_f64(inc.dw1[j]);
  for (const auto& inc : path.increments)
    for (Eigen::Index j = 0; j < inc.dw2.size(); ++j) put_f64(inc.dw2[j]);
}

}  // namespace stochtrig::noise
