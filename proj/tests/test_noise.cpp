#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/zeta.hpp>
#include <gtest/gtest.h>

#include "stochtrig/noise.hpp"

using namespace stochtrig;
using namespace stochtrig::noise;
constexpr double pi = std::numbers::pi;

namespace {

bool bitwise_equal(const PathTable& a, const PathTable& b) {
  if (a.n_steps() != b.n_steps()) return false;
  for (int n = 0; n < a.n_steps(); ++n) {
    const auto& x = a.increments[static_cast<std::size_t>(n)];
    const auto& y = b.increments[static_cast<std::size_t>(n)];
    if (x.dt != y.dt || x.dw1.size() != y.dw1.size()) return false;
    if (std::memcmp(x.dw1.data(), y.dw1.data(), sizeof(double) * x.dw1.size()) != 0) return false;
    if (std::memcmp(x.dw2.data(), y.dw2.data(), sizeof(double) * x.dw2.size()) != 0) return false;
  }
  return true;
}

}  // namespace

TEST(NoiseSpec, VarianceIsInversePower) {
  const NoiseSpec spec{2.501, 10, false, 1.0};
  EXPECT_NEAR(spec.variance(1), std::pow(pi, -5.002), 1e-15);
  EXPECT_NEAR(spec.variance(3), std::pow(3 * pi, -5.002), 1e-18);
  EXPECT_EQ(NoiseSpec({0.0, 4, false, 1.0}).variance(4), 1.0);
  EXPECT_THROW(NoiseSpec({1.0, 0, false, 1.0}).validate(), DomainError);
  EXPECT_THROW(NoiseSpec({1.0, 3, false, -1.0}).validate(), DomainError);
}

TEST(SamplePath, ShapeScaleAndDeterminism) {
  const NoiseSpec spec{1.001, 8, false, 1.0};
  const auto a = sample_path(spec, 1.0, 16, 99, 3);
  const auto b = sample_path(spec, 1.0, 16, 99, 3);
  EXPECT_TRUE(bitwise_equal(a, b));
  EXPECT_EQ(a.n_steps(), 16);
  EXPECT_EQ(a.dt(), 1.0 / 16);
  EXPECT_EQ(a.final_time(), 1.0);
  EXPECT_EQ(a.increments[0].dw1.size(), 8);
  const auto c = sample_path(spec, 1.0, 16, 99, 4);
  EXPECT_FALSE(bitwise_equal(a, c));
  EXPECT_NE(a.increments[5].dw1[2], a.increments[5].dw2[2]);

  // Entry = sqrt(k gamma_j) * stream draw.
  const rng::GaussianStream stream(99);
  const double expected = std::sqrt(spec.variance(3) / 16) * stream({3, 2, 0, 5, 2});
  EXPECT_DOUBLE_EQ(a.increments[5].dw2[2], expected);
  EXPECT_THROW(sample_path(spec, 0.0, 4, 1, 0), DomainError);
  EXPECT_THROW(sample_path(spec, 1.0, 0, 1, 0), DomainError);
}

TEST(SamplePath, CorrelatedAndSilent) {
  const auto corr = sample_path({1.5, 6, true, 1.0}, 0.5, 4, 7, 0);
  for (const auto& inc : corr.increments) EXPECT_EQ((inc.dw1 - inc.dw2).norm(), 0.0);
  const auto off = sample_path({1.5, 6, false, 0.0}, 0.5, 4, 7, 0);
  for (const auto& inc : off.increments) EXPECT_EQ(inc.dw1.norm() + inc.dw2.norm(), 0.0);
}

TEST(SamplePath, ModeVarianceWithinThreeSigma) {
  const NoiseSpec spec{2.501, 20, false, 1.0};
  const int n = 20000;
  const double k = 1.0 / 64;
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(20);
  for (int i = 0; i < n; ++i) {
    const auto p = sample_path(spec, k, 1, 5, static_cast<std::uint64_t>(i));
    sum_sq += p.increments[0].dw2.cwiseAbs2();
  }
  for (const int j : {1, 2, 5, 10, 20}) {
    const double expected = k * std::pow(j * pi, -5.002);
    EXPECT_LT(std::abs(sum_sq[j - 1] / n - expected), 3.0 * expected * std::sqrt(2.0 / n)) << "mode " << j;
  }
}

TEST(Coarsen, SumsBlocksAndComposesBitwise) {
  const NoiseSpec spec{1.001, 5, false, 1.0};
  const auto fine = sample_path(spec, 1.0, 64, 11, 2);
  const auto c8 = coarsen(fine, 8);
  EXPECT_EQ(c8.n_steps(), 8);
  EXPECT_DOUBLE_EQ(c8.dt(), 1.0 / 8);
  EXPECT_TRUE(bitwise_equal(c8, coarsen(coarsen(fine, 2), 4)));
  EXPECT_TRUE(bitwise_equal(c8, coarsen(coarsen(fine, 4), 2)));
  EXPECT_TRUE(bitwise_equal(coarsen(fine, 1), fine));
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(5);
  for (int n = 8; n < 16; ++n) direct += fine.increments[static_cast<std::size_t>(n)].dw1;
  EXPECT_LT((c8.increments[1].dw1 - direct).norm(), 1e-15);
}

TEST(Coarsen, NonDyadicAndInvalidFactors) {
  const auto fine = sample_path({1.001, 3, false, 1.0}, 1.0, 12, 11, 0);
  const auto c3 = coarsen(fine, 3);
  EXPECT_EQ(c3.n_steps(), 4);
  EXPECT_NEAR(c3.increments[0].dw1[0],
              fine.increments[0].dw1[0] + fine.increments[1].dw1[0] + fine.increments[2].dw1[0], 1e-15);
  EXPECT_THROW(coarsen(fine, 5), DomainError);
  EXPECT_THROW(coarsen(fine, 0), DomainError);
}

TEST(IncrementToFem, ProjectorAndSystemAgree) {
  const fem::FemSystem sys{fem::Mesh(16)};
  const fem::SpectralProjector proj(sys, 10);
  const auto path = sample_path({1.001, 10, false, 1.0}, 1.0, 2, 3, 0);
  const auto a = increment_to_fem(path.increments[0], proj);
  const auto b = increment_to_fem(path.increments[0], sys);
  EXPECT_LT((a.re.values - b.re.values).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((a.im.values - b.im.values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TraceDiagnostic, TruncatedTraceAgainstZeta) {
  const auto d = trace_diagnostic({2.501, 100, false, 1.0});
  const double full = boost::math::zeta(5.002) / std::pow(pi, 5.002);
  EXPECT_TRUE(d.trace_class);
  EXPECT_TRUE(d.warning.empty());
  EXPECT_LE(d.truncated_trace, full);
  EXPECT_GE(d.truncated_trace + d.tail_bound, full);
  const auto rough = trace_diagnostic({0.5, 50, false, 1.0});
  EXPECT_FALSE(rough.trace_class);
  EXPECT_FALSE(rough.warning.empty());
}

TEST(Isometry, ConstantIntegrandIsExact) {
  const NoiseSpec spec{1.5, 5, false, 1.0};
  const auto r = ito_isometry_check(spec, [](int, double) { return 1.0; }, 2.0, 4000, 17, 8);
  double analytic = 0.0;
  for (int j = 1; j <= 5; ++j) analytic += 2.0 * std::pow(j * pi, -3.0);
  EXPECT_NEAR(r.analytic, analytic, 1e-14);
  EXPECT_LT(std::abs(r.z_score), 3.0);
  EXPECT_EQ(r.n_samples, 4000);
}

TEST(Isometry, OscillatingIntegrand) {
  const NoiseSpec spec{2.501, 30, false, 1.0};
  const auto phi = [](int j, double tau) { return std::cos(tau * std::pow(j * pi, 2)); };
  const auto r = ito_isometry_check(spec, phi, 1.0, 5000, 23);
  // int_0^1 cos^2(a t) dt = 1/2 + sin(2a)/(4a).
  double analytic = 0.0;
  for (int j = 1; j <= 30; ++j) {
    const double a = std::pow(j * pi, 2);
    analytic += std::pow(j * pi, -5.002) * (0.5 + std::sin(2 * a) / (4 * a));
  }
  EXPECT_NEAR(r.analytic, analytic, 1e-9 * analytic);
  EXPECT_LT(std::abs(r.z_score), 3.0);
  EXPECT_THROW(ito_isometry_check(spec, phi, 1.0, 999, 23), DomainError);
}

TEST(PathDump, LittleEndianLayout) {
  const auto path = sample_path({1.001, 3, false, 1.0}, 1.0, 2, 3, 0);
  std::ostringstream out;
  write_path_dump(path, out);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 8u + 2u * 2u * 3u * 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 3u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2u);
  double dt = 0.0, first = 0.0, last = 0.0;
  std::memcpy(&dt, bytes.data() + 8, 8);
  std::memcpy(&first, bytes.data() + 16, 8);
  std::memcpy(&last, bytes.data() + bytes.size() - 8, 8);
  EXPECT_EQ(dt, 0.5);
  EXPECT_EQ(first, path.increments[0].dw1[0]);
  EXPECT_EQ(last, path.increments[1].dw2[2]);
}
