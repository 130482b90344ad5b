#pragma once

#include <array>

namespace stochtrig::quadrature {

/// 5-point Gauss-Legendre on [-1, 1], exact for polynomials of degree 9.
inline constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                      0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                        0.5688888888888889, 0.4786286704993665,
                                                        0.2369268850561891};

/// Composite 5-point Gauss rule on [a, b] with `cells` equal subintervals.
template <class F>
double integrate(F&& f, double a, double b, int cells = 1) {
  const double width = (b - a) / cells;
  double sum = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double left = a + c * width;
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q)
      sum += kGaussWeights[q] * f(left + 0.5 * (kGaussNodes[q] + 1.0) * width);
  }
  return 0.5 * width * sum;
}

}  // namespace stochtrig::quadrature
