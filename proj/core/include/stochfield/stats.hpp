#pragma once

#include <cstdint>
#include <span>

namespace stochfield {

/// One-pass mean/variance accumulator (Welford), mergeable pairwise (Chan et al.).
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x);
  void merge(const Moments& other);

  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  /// sqrt(variance / count).
  double stderr_mean() const;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
};

/// Least-squares line through (x, y). With `sigma` (per-point standard
/// errors) the fit is weighted and the slope error is sqrt(S/Δ); otherwise
/// the error comes from the residual scatter. Needs at least three points and
/// a non-degenerate abscissa (std::invalid_argument otherwise).
SlopeFit fit_linear(std::span<const double> x, std::span<const double> y, std::span<const double> sigma = {});

}  // namespace stochfield
