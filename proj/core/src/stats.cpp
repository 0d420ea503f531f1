#include "stochfield/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace stochfield {

void Moments::push(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

void Moments::merge(const Moments& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double n = na + nb;
  const double delta = other.mean - mean;
  mean += delta * nb / n;
  m2 += other.m2 + delta * delta * na * nb / n;
  count += other.count;
}

double Moments::variance() const {
  if (count < 2) return 0.0;
  return std::max(0.0, m2 / static_cast<double>(count - 1));
}

double Moments::stderr_mean() const {
  if (count == 0) return 0.0;
  return std::sqrt(variance() / static_cast<double>(count));
}

SlopeFit fit_linear(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("fit_linear: x and y differ in length");
  if (n < 3) throw std::invalid_argument("fit_linear: need at least 3 points");
  if (!sigma.empty() && sigma.size() != n) throw std::invalid_argument("fit_linear: sigma length mismatch");

  SlopeFit fit;
  if (!sigma.empty()) {
    double s = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(sigma[i] > 0.0)) throw std::invalid_argument("fit_linear: sigma must be > 0");
      const double w = 1.0 / (sigma[i] * sigma[i]);
      s += w;
      sx += w * x[i];
      sy += w * y[i];
    }
    const double xm = sx / s;
    double sxx_c = 0, sxy_c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 1.0 / (sigma[i] * sigma[i]);
      sxx_c += w * (x[i] - xm) * (x[i] - xm);
      sxy_c += w * (x[i] - xm) * y[i];
    }
    if (!(sxx_c > 0.0)) throw std::invalid_argument("fit_linear: degenerate abscissa");
    fit.slope = sxy_c / sxx_c;
    fit.intercept = (sy - fit.slope * sx) / s;
    fit.slope_stderr = std::sqrt(1.0 / sxx_c);
  } else {
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < n; ++i) {
      xm += x[i];
      ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx_c = 0, sxy_c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx_c += (x[i] - xm) * (x[i] - xm);
      sxy_c += (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx_c > 0.0)) throw std::invalid_argument("fit_linear: degenerate abscissa");
    fit.slope = sxy_c / sxx_c;
    fit.intercept = ym - fit.slope * xm;
  }

  double ybar = 0;
  for (std::size_t i = 0; i < n; ++i) ybar += y[i];
  ybar /= static_cast<double>(n);
  double ssr = 0, sst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
    sst += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : (ssr == 0.0 ? 1.0 : 0.0);
  if (sigma.empty()) {
    double xm = 0;
    for (double v : x) xm += v;
    xm /= static_cast<double>(n);
    double sxx_c = 0;
    for (double v : x) sxx_c += (v - xm) * (v - xm);
    fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx_c);
  }
  return fit;
}

}  // namespace stochfield
