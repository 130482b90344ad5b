#pragma once

// Coupled-path Monte Carlo estimation of strong (mean-square) errors and log-log
// rate regression. Every sample draws one fine Brownian path; the reference and
// all coarse solutions consume that same path (coarse time grids through summed
// increments, coarse meshes through their own P_h of the same spectral increments).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "stochtrig/error.hpp"
#include "stochtrig/fem1d.hpp"
#include "stochtrig/noise.hpp"
#include "stochtrig/schemes.hpp"

namespace stochtrig::analysis {

/// A space-time resolution: mesh width h = 2^-a and time step k = 2^-b.
struct Resolution {
  double h = 0.0;
  double k = 0.0;
};

enum class StudyKind { spatial, temporal };
enum class ReferenceKind { numerical, exact };

/// True when x == 2^{-m} for some integer m >= 0.
inline bool is_dyadic(double x) {
  if (!(x > 0.0) || x > 1.0) return false;
  int exponent = 0;
  return std::frexp(x, &exponent) == 0.5;
}

inline int cells_for(double h) { return static_cast<int>(std::lround(1.0 / h)); }

inline int steps_for(double k, double T) { return static_cast<int>(std::lround(T / k)); }

struct ExperimentConfig {
  StudyKind kind = StudyKind::spatial;
  bool semilinear = true;
  ReferenceKind reference = ReferenceKind::numerical;
  double theta = 2.0;
  double s = 2.501;
  std::vector<double> levels;  // varied h (spatial) or k (temporal)
  double ref_level = 0.0;
  double fixed_other = 0.0;  // k for spatial studies, h for temporal ones
  int n_samples = 0;
  std::uint64_t seed = 0;
  int J = 0;
  double T = 1.0;
  bool correlated_noise = false;
  schemes::OperatorOrdering ordering = schemes::OperatorOrdering::project_then_multiply;
  double noise_amplitude = 1.0;

  /// Throws DomainError naming the first violated constraint.
  void validate() const {
    const auto require = [](bool ok, const std::string& msg) { detail::require(ok, "config: " + msg); };
    require(theta >= 0.0 && theta <= 2.0, "theta must lie in [0, 2]");
    require(s > theta + 0.5, "finiteness criterion violated: need theta < s - 1/2 (d = 1), got theta = " +
                                 std::to_string(theta) + ", s = " + std::to_string(s));
    require(n_samples >= 1, "n_samples must be >= 1");
    require(J >= 1, "J must be >= 1");
    require(T > 0.0, "T must be positive");
    require(levels.size() >= 3, "need at least 3 levels for a rate fit");
    require(noise_amplitude >= 0.0, "noise amplitude must be >= 0");
    for (double level : levels) require(is_dyadic(level), "levels must be powers of two <= 1");
    require(is_dyadic(ref_level), "ref_level must be a power of two <= 1");
    require(is_dyadic(fixed_other), (kind == StudyKind::spatial ? "fixed_k" : "fixed_h") +
                                        std::string(" must be a power of two <= 1"));
    for (double level : levels) require(ref_level < level, "ref_level must be strictly finer than every level");
    if (kind == StudyKind::spatial) {
      for (double level : levels) require(level <= 0.5, "mesh widths must be <= 1/2");
    } else {
      require(fixed_other <= 0.5, "fixed_h must be <= 1/2");
    }
    const auto on_grid = [&](double k) {
      const double n = T / k;
      return std::abs(n - std::round(n)) <= 1e-9 * n;
    };
    if (kind == StudyKind::temporal) {
      for (double level : levels) require(on_grid(level), "T must be a multiple of every time step");
      require(on_grid(ref_level), "T must be a multiple of ref_level");
    } else {
      require(on_grid(fixed_other), "T must be a multiple of fixed_k");
    }
    if (reference == ReferenceKind::exact)
      require(!semilinear && kind == StudyKind::temporal,
              "exact reference exists only for the linear problem in a temporal study");
  }

  noise::NoiseSpec noise() const { return {s, J, correlated_noise, noise_amplitude}; }

  schemes::ModelProblem problem() const {
    schemes::ModelProblem p = semilinear ? schemes::semilinear_model(noise(), T) : schemes::linear_problem(noise(), T);
    p.ordering = ordering;
    return p;
  }

  Resolution reference_resolution() const {
    return kind == StudyKind::spatial ? Resolution{ref_level, fixed_other} : Resolution{fixed_other, ref_level};
  }

  Resolution level_resolution(double level) const {
    return kind == StudyKind::spatial ? Resolution{level, fixed_other} : Resolution{fixed_other, level};
  }
};

struct StrongError {
  double rms_re = 0.0;
  double rms_im = 0.0;
  double stderr_mc = 0.0;  // standard error of the combined rms (delta method)
  int n_used = 0;
  int n_excluded = 0;

  double rms_combined() const { return std::hypot(rms_re, rms_im); }
};

struct ErrorRow {
  double level = 0.0;
  double rms_re = 0.0;
  double rms_im = 0.0;
  double stderr_mc = 0.0;
  int n_samples = 0;
  int n_excluded = 0;
};

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double ci = 0.0;  // half-width of the 95% interval for the slope
};

struct ErrorTable {
  std::vector<ErrorRow> rows;  // ascending level
  RegressionResult fit_re;
  RegressionResult fit_im;
  RegressionResult fit_combined;

  double slope_re() const { return fit_re.slope; }
  double slope_im() const { return fit_im.slope; }
};

/// Least squares fit of log2(error) against log2(level), with a t-based 95% interval.
inline RegressionResult rate_regression(std::span<const double> levels, std::span<const double> errors) {
  detail::require(levels.size() == errors.size(), "rate_regression: size mismatch");
  detail::require(levels.size() >= 3, "rate_regression: need at least 3 rows");
  const std::size_t n = levels.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(levels[i] > 0.0 && errors[i] > 0.0, "rate_regression: levels and errors must be positive");
    x[i] = std::log2(levels[i]);
    y[i] = std::log2(errors[i]);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  detail::require(sxx > 0.0, "rate_regression: levels must not all coincide");
  RegressionResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  const double dof = static_cast<double>(n) - 2.0;
  const boost::math::students_t dist(dof);
  fit.ci = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(ssr / dof / sxx);
  return fit;
}

namespace detail {

/// Pairwise sum: the result depends only on the order of `values`.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Run body(i) for i in [0, count) on `threads` workers with contiguous blocks.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const int begin = static_cast<int>(static_cast<long long>(count) * t / threads);
      const int end = static_cast<int>(static_cast<long long>(count) * (t + 1) / threads);
      try {
        for (int i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& worker : pool) worker.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct SampleError {
  double re = 0.0;  // squared M-norm of the real-part error
  double im = 0.0;
  bool excluded = false;
};

inline StrongError reduce(const std::vector<SampleError>& samples) {
  std::vector<double> re, im, total;
  int excluded = 0;
  for (const auto& s : samples) {
    if (s.excluded) {
      ++excluded;
      continue;
    }
    re.push_back(s.re);
    im.push_back(s.im);
    total.push_back(s.re + s.im);
  }
  StrongError out;
  out.n_used = static_cast<int>(total.size());
  out.n_excluded = excluded;
  if (samples.size() > 0 && excluded > 0.01 * static_cast<double>(samples.size()))
    throw NumericalError("strong_error: " + std::to_string(excluded) + " of " + std::to_string(samples.size()) +
                         " samples blew up (limit 1%)");
  if (out.n_used == 0) return out;
  const double n = out.n_used;
  const double mean_re = pairwise_sum(re) / n;
  const double mean_im = pairwise_sum(im) / n;
  const double mean = pairwise_sum(total) / n;
  out.rms_re = std::sqrt(mean_re);
  out.rms_im = std::sqrt(mean_im);
  if (out.n_used > 1 && mean > 0.0) {
    // Shifted by the first sample, so identical totals give exactly zero.
    std::vector<double> d(total.size()), d2(total.size());
    for (std::size_t i = 0; i < total.size(); ++i) {
      d[i] = total[i] - total[0];
      d2[i] = d[i] * d[i];
    }
    const double sum_d = pairwise_sum(d);
    const double var = std::max(0.0, (pairwise_sum(d2) - sum_d * sum_d / n) / (n - 1.0));
    out.stderr_mc = std::sqrt(var / n) / (2.0 * std::sqrt(mean));
  }
  return out;
}

inline SampleError squared_error(const fem::FemPair& reference, const fem::FemPair& coarse,
                                 const fem::FemSystem& coarse_system) {
  const fem::FemFunction dre{reference.re.values - coarse.re.values};
  const fem::FemFunction dim{reference.im.values - coarse.im.values};
  const double a = fem::mass_norm(dre, coarse_system);
  const double b = fem::mass_norm(dim, coarse_system);
  return {a * a, b * b, false};
}

}  // namespace detail

/// Strong errors of several coarse resolutions against one reference, all driven
/// by the same per-sample Brownian path. Results are independent of `threads`.
inline std::vector<StrongError> coupled_strong_errors(const schemes::ModelProblem& problem,
                                                      std::span<const Resolution> coarse, const Resolution& reference,
                                                      int n_samples, std::uint64_t seed, int threads = 1,
                                                      ReferenceKind reference_kind = ReferenceKind::numerical) {
  stochtrig::detail::require(n_samples >= 1, "strong_error: n_samples must be >= 1");
  const int ref_cells = cells_for(reference.h);
  const int ref_steps = steps_for(reference.k, problem.T);
  for (const auto& c : coarse) {
    stochtrig::detail::require(c.h >= reference.h && c.k >= reference.k,
                               "strong_error: reference must not be coarser than the compared resolution");
    stochtrig::detail::require(ref_cells % cells_for(c.h) == 0 && ref_steps % steps_for(c.k, problem.T) == 0,
                               "strong_error: resolutions must be nested (dyadic ratios)");
  }
  if (reference_kind == ReferenceKind::exact) {
    stochtrig::detail::require(problem.is_linear(), "strong_error: exact reference requires the linear problem");
    for (const auto& c : coarse)
      stochtrig::detail::require(c.h == reference.h, "strong_error: exact reference compares at a fixed mesh");
  }

  const int J = problem.noise.num_modes;
  const schemes::Discretization ref_disc(fem::Mesh(ref_cells), J);
  std::vector<std::unique_ptr<schemes::Discretization>> coarse_disc;
  for (const auto& c : coarse) coarse_disc.push_back(std::make_unique<schemes::Discretization>(fem::Mesh(cells_for(c.h)), J));
  std::optional<schemes::ExactLinearSampler> exact;
  if (reference_kind == ReferenceKind::exact) exact.emplace(ref_disc, problem.noise, problem.T, ref_steps);
  const fem::FemPair exact_initial = schemes::initial_state(problem, ref_disc.system()).pair;

  std::vector<std::vector<detail::SampleError>> errors(coarse.size(),
                                                       std::vector<detail::SampleError>(static_cast<std::size_t>(n_samples)));
  detail::parallel_for(n_samples, threads, [&](int sample) {
    const auto index = static_cast<std::uint64_t>(sample);
    const auto slot = static_cast<std::size_t>(sample);
    noise::PathTable path;
    fem::FemPair ref_final;
    try {
      if (exact) {
        auto drawn = exact->sample(exact_initial, seed, index);
        if (!drawn.final_state.re.values.allFinite() || !drawn.final_state.im.values.allFinite())
          throw BlowupError(ref_steps, "non-finite exact sample");
        path = std::move(drawn.path);
        ref_final = std::move(drawn.final_state);
      } else {
        path = noise::sample_path(problem.noise, problem.T, ref_steps, seed, index);
        ref_final = schemes::run_trajectory(problem, ref_disc, path, schemes::TrajectoryOutput::final_only).back().pair;
      }
    } catch (const NumericalError&) {
      for (auto& level : errors) level[slot].excluded = true;
      return;
    }
    for (std::size_t c = 0; c < coarse.size(); ++c) {
      const auto& disc = *coarse_disc[c];
      const noise::PathTable coarse_path = noise::coarsen(path, ref_steps / steps_for(coarse[c].k, problem.T));
      try {
        const fem::FemPair u =
            schemes::run_trajectory(problem, disc, coarse_path, schemes::TrajectoryOutput::final_only).back().pair;
        const fem::FemPair restricted{fem::restrict_to_coarse(ref_final.re, ref_disc.mesh(), disc.mesh()),
                                      fem::restrict_to_coarse(ref_final.im, ref_disc.mesh(), disc.mesh())};
        errors[c][slot] = detail::squared_error(restricted, u, disc.system());
      } catch (const NumericalError&) {
        errors[c][slot].excluded = true;
      }
    }
  });

  std::vector<StrongError> out;
  for (const auto& level : errors) out.push_back(detail::reduce(level));
  return out;
}

/// (rms_re, rms_im, stderr) of one coarse resolution against a reference.
inline StrongError strong_error(const schemes::ModelProblem& problem, const Resolution& coarse,
                                const Resolution& reference, int n_samples, std::uint64_t seed, int threads = 1,
                                ReferenceKind reference_kind = ReferenceKind::numerical) {
  const Resolution levels[] = {coarse};
  return coupled_strong_errors(problem, levels, reference, n_samples, seed, threads, reference_kind).front();
}

namespace detail {

inline ErrorTable run_study(const ExperimentConfig& config, int threads) {
  config.validate();
  std::vector<double> levels = config.levels;
  std::sort(levels.begin(), levels.end());
  std::vector<Resolution> coarse;
  for (double level : levels) coarse.push_back(config.level_resolution(level));
  const auto results = coupled_strong_errors(config.problem(), coarse, config.reference_resolution(),
                                             config.n_samples, config.seed, threads, config.reference);
  ErrorTable table;
  std::vector<double> re, im, combined;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& r = results[i];
    table.rows.push_back({levels[i], r.rms_re, r.rms_im, r.stderr_mc, r.n_used, r.n_excluded});
    re.push_back(r.rms_re);
    im.push_back(r.rms_im);
    combined.push_back(r.rms_combined());
  }
  table.fit_re = rate_regression(levels, re);
  table.fit_im = rate_regression(levels, im);
  table.fit_combined = rate_regression(levels, combined);
  return table;
}

}  // namespace detail

/// Error vs mesh width at fixed k; the expected slope is theta.
inline ErrorTable spatial_study(const ExperimentConfig& config, int threads = 1) {
  stochtrig::detail::require(config.kind == StudyKind::spatial, "spatial_study: config is not a spatial study");
  return detail::run_study(config, threads);
}

/// Error vs time step at fixed h; the expected slope is min(theta/2, 1/2)
/// (theta/2 for the linear additive problem).
inline ErrorTable temporal_study(const ExperimentConfig& config, int threads = 1) {
  stochtrig::detail::require(config.kind == StudyKind::temporal, "temporal_study: config is not a temporal study");
  return detail::run_study(config, threads);
}

/// CSV with header `level,rms_re,rms_im,stderr,n_samples`; shortest round-trip number formatting.
inline void write_csv(const ErrorTable& table, std::ostream& out) {
  out << "level,rms_re,rms_im,stderr,n_samples\n";
  const auto fmt = [](double v) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, result.ptr);
  };
  for (const auto& row : table.rows)
    out << fmt(row.level) << ',' << fmt(row.rms_re) << ',' << fmt(row.rms_im) << ',' << fmt(row.stderr_mc) << ','
        << row.n_samples << '\n';
}

}  // namespace stochtrig::analysis
