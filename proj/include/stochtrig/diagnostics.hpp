#pragma once

// Property battery behind `stochtrig diagnostics`: unitarity of the discrete
// group, FEM eigenvalue accuracy, Hilbert-Schmidt sum, Hoelder slopes of the
// trig operators, noise statistics, Ito isometry, the A_h / P_h / A norm
// relation and the declared Lipschitz constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "stochtrig/analysis.hpp"
#include "stochtrig/fem1d.hpp"
#include "stochtrig/noise.hpp"
#include "stochtrig/random.hpp"
#include "stochtrig/schemes.hpp"
#include "stochtrig/spectral.hpp"

namespace stochtrig::diagnostics {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // the measured quantity
  double threshold = 0.0;  // what it was compared against
  std::string detail;
};

struct Options {
  fem::RotationFault fault = fem::RotationFault::none;
  std::uint64_t seed = 20240917;
  int noise_samples = 100000;
  int isometry_samples = 20000;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Slope of log2(y) against log2(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  return analysis::rate_regression(x, y).slope;
}

}  // namespace detail

/// Relative drift of the combined M-norm over 1000 zero-noise steps, N = 64, k = 2^-6.
inline CheckResult unitarity(fem::RotationFault fault = fem::RotationFault::none) {
  const fem::FemSystem system(fem::Mesh(64));
  const double k = 1.0 / 64;
  fem::FemPair u{fem::l2_project(schemes::default_initial_re(), system),
                 fem::l2_project(schemes::default_initial_im(), system)};
  const double start = fem::combined_mass_norm(u, system);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    u = fem::apply_discrete_trig(u, k, system, fault);
    worst = std::max(worst, std::abs(fem::combined_mass_norm(u, system) - start) / start);
  }
  return {"unitarity", worst <= 1e-9, worst, 1e-9, "max relative norm drift over 1000 steps"};
}

/// Eigensolver against the closed form for N = 8..256 (dyadic), and the h^2 rate of lambda_{h,1}.
inline std::vector<CheckResult> eigenvalues() {
  double worst = 0.0;
  std::vector<double> hs, gaps;
  for (int N = 8; N <= 256; N *= 2) {
    const fem::FemSystem system{fem::Mesh(N)};
    const double h = 1.0 / N;
    for (int j = 1; j < N; ++j) {
      const double exact = fem::uniform_mesh_eigenvalue(j, h);
      worst = std::max(worst, std::abs(system.eig_values()[j - 1] - exact) / exact);
    }
    hs.push_back(h);
    gaps.push_back(std::abs(system.eig_values()[0] - std::numbers::pi * std::numbers::pi));
  }
  const double slope = detail::loglog_slope(hs, gaps);
  return {{"eigenvalue closed form", worst <= 1e-8, worst, 1e-8, "max relative deviation, N = 8..256"},
          {"eigenvalue rate", std::abs(slope - 2.0) <= 0.1, slope, 2.0, "slope of |lambda_h1 - pi^2| vs h (+-0.1)"}};
}

inline CheckResult hilbert_schmidt() {
  const double v = spectral::hs_norm(0.0, 2.0, 10000);
  const double err = std::abs(v * v - 1.0 / 90.0);
  return {"hs_norm(0,2,1e4)^2 = 1/90", err <= 1e-6, err, 1e-6, "absolute deviation"};
}

/// Slope of holder_deviation(delta, 0) over delta = 2^-4..2^-12, J = 1e4.
inline std::vector<CheckResult> holder() {
  std::vector<CheckResult> out;
  const spectral::SpectralBasis basis(10000);
  for (const double theta : {0.5, 1.0, 2.0}) {
    for (const auto kind : {spectral::TrigKind::sine, spectral::TrigKind::cosine}) {
      std::vector<double> gaps, devs;
      for (int m = 4; m <= 12; ++m) {
        const double delta = std::ldexp(1.0, -m);
        gaps.push_back(delta);
        devs.push_back(spectral::holder_deviation(basis.lambdas(), delta, 0.0, theta, kind));
      }
      const double slope = detail::loglog_slope(gaps, devs);
      out.push_back({std::string("hoelder ") + (kind == spectral::TrigKind::sine ? "sine" : "cosine") +
                         " theta=" + detail::fmt(theta),
                     slope >= theta / 2.0 - 0.1, slope, theta / 2.0 - 0.1, "log-log slope >= theta/2 - 0.1"});
    }
  }
  return out;
}

/// Sample variance of every mode of a single-step increment (k = 2^-6, s = 2.501, J = 100)
/// within 3 standard errors of k lambda_j^{-s}.
inline CheckResult noise_variance(std::uint64_t seed, int n_samples) {
  const noise::NoiseSpec spec{2.501, 100, false, 1.0};
  const double k = 1.0 / 64;
  std::vector<double> sum_sq(static_cast<std::size_t>(spec.num_modes), 0.0);
  for (int i = 0; i < n_samples; ++i) {
    const auto path = noise::sample_path(spec, k, 1, seed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < spec.num_modes; ++j) sum_sq[static_cast<std::size_t>(j)] += path.increments[0].dw1[j] * path.increments[0].dw1[j];
  }
  double worst = 0.0;
  int worst_mode = 1;
  for (int j = 1; j <= spec.num_modes; ++j) {
    const double expected = k * spec.variance(j);
    const double observed = sum_sq[static_cast<std::size_t>(j - 1)] / n_samples;
    const double z = std::abs(observed - expected) / (expected * std::sqrt(2.0 / n_samples));
    if (z > worst) worst = z, worst_mode = j;
  }
  return {"noise variance", worst <= 3.0, worst, 3.0,
          "max |z| over modes 1..100 (worst mode " + std::to_string(worst_mode) + ")"};
}

/// phi_j(tau) = cos(tau lambda_j), T = 1, s = 2.501, J = 100.
inline CheckResult isometry(std::uint64_t seed, int n_samples) {
  const noise::NoiseSpec spec{2.501, 100, false, 1.0};
  const auto phi = [](int j, double tau) { return std::cos(tau * spectral::eigenvalue(j)); };
  const auto report = noise::ito_isometry_check(spec, phi, 1.0, n_samples, seed);
  return {"ito isometry", std::abs(report.z_score) <= 3.0, report.z_score, 3.0,
          "MC " + detail::fmt(report.monte_carlo) + " vs analytic " + detail::fmt(report.analytic)};
}

/// ||A_h^gamma P_h A^-gamma phi_j|| <= 1 + 1e-6 for j = 1..2N, gamma in {-1/2, 0, 1/2, 1}, N in {16, 64}.
inline CheckResult norm_relation() {
  double worst = 0.0;
  std::string where;
  for (const int N : {16, 64}) {
    const fem::FemSystem system{fem::Mesh(N)};
    const spectral::SpectralBasis basis(2 * N);
    for (const double gamma : {-0.5, 0.0, 0.5, 1.0})
      for (int j = 1; j <= 2 * N; ++j) {
        const double v = fem::norm_relation_check(spectral::SpectralField::unit(basis, j), gamma, system);
        if (v > worst) {
          worst = v;
          where = "N=" + std::to_string(N) + " gamma=" + detail::fmt(gamma) + " j=" + std::to_string(j);
        }
      }
  }
  return {"norm relation", worst <= 1.0 + 1e-6, worst, 1.0 + 1e-6, "max over basis vectors at " + where};
}

inline CheckResult lipschitz() {
  const auto report = schemes::validate_lipschitz(schemes::sqrt_nonlinearity());
  return {"lipschitz constants", report.ok, std::max(report.max_quotient_g, report.max_quotient_f), 1.0,
          "largest observed difference quotient vs declared K = 1"};
}

inline std::vector<CheckResult> run_all(const Options& options = {}) {
  std::vector<CheckResult> out;
  out.push_back(unitarity(options.fault));
  for (auto& r : eigenvalues()) out.push_back(std::move(r));
  out.push_back(hilbert_schmidt());
  for (auto& r : holder()) out.push_back(std::move(r));
  out.push_back(noise_variance(options.seed, options.noise_samples));
  out.push_back(isometry(options.seed, options.isometry_samples));
  out.push_back(norm_relation());
  out.push_back(lipschitz());
  return out;
}

}  // namespace stochtrig::diagnostics
