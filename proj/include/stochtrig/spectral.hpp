#pragma once

// Closed-form spectral calculus for the Dirichlet Laplacian A = -d^2/dx^2 on (0,1):
// eigenpairs, fractional Sobolev norms, the unitary group generated by
// [[0,-A],[A,0]], Hilbert-Schmidt norms of A^{theta/2} Q^{1/2} with Q = A^{-s},
// and truncated operator norms of trig-operator increments.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stochtrig/error.hpp"

namespace stochtrig::spectral {

/// lambda_j = (j pi)^2, j >= 1.
inline double eigenvalue(int j) {
  detail::require(j >= 1, "eigenvalue: mode index must be >= 1");
  const double w = j * std::numbers::pi;
  return w * w;
}

/// phi_j(x) = sqrt(2) sin(j pi x), normalized in L2(0,1).
inline double eigenfunction_eval(int j, double x) {
  detail::require(j >= 1, "eigenfunction_eval: mode index must be >= 1");
  detail::require(x >= 0.0 && x <= 1.0, "eigenfunction_eval: x must lie in [0,1]");
  return std::numbers::sqrt2 * std::sin(j * std::numbers::pi * x);
}

/// Truncated eigen-system of A on the unit interval.
class SpectralBasis {
public:
  explicit SpectralBasis(int num_modes) {
    detail::require(num_modes >= 1, "SpectralBasis: need at least one mode");
    lambdas_.resize(static_cast<std::size_t>(num_modes));
    for (int j = 0; j < num_modes; ++j) lambdas_[static_cast<std::size_t>(j)] = eigenvalue(j + 1);
  }

  int num_modes() const { return static_cast<int>(lambdas_.size()); }
  double domain_length() const { return 1.0; }
  /// 0-based: lambda(0) = pi^2.
  double lambda(int index) const { return lambdas_.at(static_cast<std::size_t>(index)); }
  std::span<const double> lambdas() const { return lambdas_; }

private:
  std::vector<double> lambdas_;
};

/// Coefficients (v, phi_j) of a truncated expansion.
struct SpectralField {
  Eigen::VectorXd coeffs;

  static SpectralField zero(const SpectralBasis& basis) {
    return {Eigen::VectorXd::Zero(basis.num_modes())};
  }
  static SpectralField unit(const SpectralBasis& basis, int mode) {
    detail::require(mode >= 1 && mode <= basis.num_modes(), "SpectralField::unit: mode out of range");
    SpectralField v = zero(basis);
    v.coeffs[mode - 1] = 1.0;
    return v;
  }
};

/// (u1, u2) in the product space; both components share one basis.
struct SpectralPair {
  SpectralField re;
  SpectralField im;

  double combined_norm() const {
    return std::sqrt(re.coeffs.squaredNorm() + im.coeffs.squaredNorm());
  }
};

namespace detail {

inline void check_field(const SpectralBasis& basis, const SpectralField& v, const char* where) {
  stochtrig::detail::require(v.coeffs.size() == basis.num_modes(),
                             std::string(where) + ": coefficient count differs from basis size");
}

}  // namespace detail

/// ||A^{gamma/2} v|| over the truncated basis.
inline double fractional_norm(const SpectralBasis& basis, const SpectralField& v, double gamma) {
  detail::check_field(basis, v, "fractional_norm");
  double sum = 0.0;
  for (int j = basis.num_modes() - 1; j >= 0; --j) {
    const double c = v.coeffs[j];
    sum += std::pow(basis.lambda(j), gamma) * c * c;
  }
  return std::sqrt(sum);
}

/// Action of e^{tA} where A = [[0,-A],[A,0]]: a rotation by t lambda_j per mode.
inline SpectralPair apply_trig_group(const SpectralBasis& basis, const SpectralPair& state, double t) {
  detail::check_field(basis, state.re, "apply_trig_group");
  detail::check_field(basis, state.im, "apply_trig_group");
  SpectralPair out = state;
  for (int j = 0; j < basis.num_modes(); ++j) {
    const double angle = t * basis.lambda(j);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double a = state.re.coeffs[j];
    const double b = state.im.coeffs[j];
    out.re.coeffs[j] = c * a - s * b;
    out.im.coeffs[j] = s * a + c * b;
  }
  return out;
}

/// ||A^{theta/2} Q^{1/2}||_HS with Q = A^{-s}, truncated after J modes.
/// Summed from the smallest term upward.
inline double hs_norm(double theta, double s, int J) {
  stochtrig::detail::require(J >= 1, "hs_norm: J must be >= 1");
  double sum = 0.0;
  for (int j = J; j >= 1; --j) sum += std::pow(eigenvalue(j), theta - s);
  return std::sqrt(sum);
}

enum class TrigKind { sine, cosine };

/// max_j |trig(t lambda_j) - trig(s lambda_j)| lambda_j^{-theta/2} over the supplied
/// eigenvalues: the operator norm of (S(t)-S(s)) A^{-theta/2} (resp. C) restricted
/// to their span. Works for the continuous eigenvalues and for the discrete ones.
inline double holder_deviation(std::span<const double> eigenvalues, double t, double s, double theta,
                               TrigKind kind) {
  stochtrig::detail::require(s >= 0.0, "holder_deviation: earlier time must be >= 0");
  stochtrig::detail::require(t >= s, "holder_deviation: requires s <= t");
  double worst = 0.0;
  for (const double lambda : eigenvalues) {
    // Difference formulas avoid cancellation for small |t - s|.
    const double half_gap = 0.5 * (t - s) * lambda;
    const double mid = 0.5 * (t + s) * lambda;
    const double diff = kind == TrigKind::sine ? 2.0 * std::cos(mid) * std::sin(half_gap)
                                               : -2.0 * std::sin(mid) * std::sin(half_gap);
    worst = std::max(worst, std::abs(diff) * std::pow(lambda, -0.5 * theta));
  }
  return worst;
}

inline double holder_deviation(double t, double s, double theta, TrigKind kind, int J) {
  return holder_deviation(SpectralBasis(J).lambdas(), t, s, theta, kind);
}

}  // namespace stochtrig::spectral
