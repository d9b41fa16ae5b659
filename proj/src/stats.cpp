#include "inchworm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "inchworm/rng.hpp"

namespace inchworm {

double MatrixMoments::variance() const {
  if (count < 2) throw std::invalid_argument("variance: need at least two samples");
  const double n = static_cast<double>(count);
  return n / (n - 1.0) * (sum_sq / n - squared_norm(sum * (1.0 / n)));
}

double variance_estimator(std::span<const ComplexMat2> samples) {
  MatrixMoments m;
  for (const auto& g : samples) m.add(g);
  return m.variance();
}

std::vector<std::optional<double>> order_of_accuracy(std::span<const double> errors,
                                                     std::span<const double> params,
                                                     OrderKind kind) {
  if (errors.size() != params.size())
    throw std::invalid_argument("order_of_accuracy: errors and parameters differ in length");
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t k = 1; k < errors.size(); ++k) {
    if (!(errors[k - 1] > 0.0) || !(errors[k] > 0.0)) continue;
    const double ratio = kind == OrderKind::StepSize ? params[k - 1] / params[k]
                                                     : params[k] / params[k - 1];
    if (!(ratio > 0.0) || ratio == 1.0) continue;
    out[k] = std::log(errors[k - 1] / errors[k]) / std::log(ratio);
  }
  return out;
}

QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_quadratic: need at least three (x, y) pairs");
  // Centre and scale x for conditioning, then map the coefficients back.
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v - mean));
  if (scale == 0.0) throw std::invalid_argument("fit_quadratic: x values are all equal");

  double s[5] = {};
  double r[3] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (x[i] - mean) / scale;
    double p = 1.0;
    for (int k = 0; k < 5; ++k) {
      s[k] += p;
      if (k < 3) r[k] += p * y[i];
      p *= u;
    }
  }
  // Normal equations [s0 s1 s2; s1 s2 s3; s2 s3 s4] b = r by Cramer's rule.
  auto det3 = [](double a, double b, double c, double d, double e, double f, double g, double h,
                 double i) { return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g); };
  const double d = det3(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
  if (d == 0.0) throw std::invalid_argument("fit_quadratic: fewer than three distinct x values");
  const double b0 = det3(r[0], s[1], s[2], r[1], s[2], s[3], r[2], s[3], s[4]) / d;
  const double b1 = det3(s[0], r[0], s[2], s[1], r[1], s[3], s[2], r[2], s[4]) / d;
  const double b2 = det3(s[0], s[1], r[0], s[1], s[2], r[1], s[2], s[3], r[2]) / d;
  // y = b0 + b1 u + b2 u^2 with u = (x - mean) / scale.
  QuadraticFit f;
  f.c2 = b2 / (scale * scale);
  f.c1 = b1 / scale - 2.0 * mean * f.c2;
  f.c0 = b0 - b1 * mean / scale + b2 * mean * mean / (scale * scale);
  return f;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need at least two (x, y) pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: x values are all equal");
  return sxy / sxx;
}

Interval bootstrap_interval(std::size_t n, int resamples, double level, std::uint64_t seed,
                            const std::function<double(std::span<const std::size_t>)>& statistic) {
  if (n == 0 || resamples < 2 || !(level > 0.0 && level < 1.0))
    throw std::invalid_argument("bootstrap_interval: bad sample size, resample count or level");
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  std::vector<std::size_t> idx(n);
  for (int r = 0; r < resamples; ++r) {
    Rng rng = derive_stream(seed, {static_cast<std::uint64_t>(r)});
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n));
    stats[static_cast<std::size_t>(r)] = statistic(idx);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(k);
    return k + 1 < stats.size() ? stats[k] * (1.0 - f) + stats[k + 1] * f : stats[k];
  };
  return {pick(tail), pick(1.0 - tail)};
}

}  // namespace inchworm
