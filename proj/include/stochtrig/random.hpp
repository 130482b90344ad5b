#pragma once

// Counter-based Gaussian streams. Every normal variate is a pure function of
// (seed, sample, process, component, step, mode), so paths can be generated in
// any order or on any number of threads and still agree bitwise.

#include <array>
#include <cmath>
#include <cstdint>

namespace stochtrig::rng {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

constexpr Philox4x32Counter philox_round(const Philox4x32Counter& ctr, const Philox4x32Key& key) {
  std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
  mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
  mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// Philox4x32-10 block function (Salmon et al., Random123).
constexpr Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    ctr = detail::philox_round(ctr, key);
  }
  return ctr;
}

/// Uniform in the open interval (0, 1) built from the top 52 bits; the largest
/// value is 1 - 2^-53, which is still representable below 1.
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Inverse standard normal CDF (Acklam's rational approximation, relative error < 1.2e-9).
inline double inverse_normal_cdf(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

/// Address of one Gaussian draw.
struct StreamKey {
  std::uint64_t sample = 0;
  std::uint32_t process = 0;    // 1 for W1, 2 for W2 (< 16)
  std::uint32_t component = 0;  // 0 for the increment itself, >0 for auxiliary draws (< 65536)
  std::uint32_t step = 0;
  std::uint32_t mode = 0;
};

/// Stateless standard-normal generator keyed by a 64-bit seed.
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  double operator()(const StreamKey& at) const {
    // The 128-bit counter holds mode, step, low sample bits, and
    // (process:4 | component:16 | high sample bits:12).
    const Philox4x32Counter ctr{
        at.mode, at.step, static_cast<std::uint32_t>(at.sample),
        ((at.process & 0xFu) << 28) | ((at.component & 0xFFFFu) << 12) |
            static_cast<std::uint32_t>((at.sample >> 32) & 0xFFFu)};
    const auto out = philox4x32_10(ctr, key_);
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return inverse_normal_cdf(uniform_open(bits));
  }

private:
  Philox4x32Key key_;
};

}  // namespace stochtrig::rng
