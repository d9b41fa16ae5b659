#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "inchworm/algebra.hpp"

namespace inchworm {

// Running sums for the unbiased matrix variance estimator.
struct MatrixMoments {
  ComplexMat2 sum;
  double sum_sq = 0.0;  // sum of squared Frobenius norms
  std::size_t count = 0;

  void add(const ComplexMat2& g) {
    sum += g;
    sum_sq += squared_norm(g);
    ++count;
  }
  void merge(const MatrixMoments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  // n/(n-1) (mean ||G||^2 - ||mean G||^2), not clamped. Throws
  // std::invalid_argument for fewer than two samples.
  double variance() const;
};

// n/(n-1) (mean ||G_k||^2 - ||mean G_k||^2) over the samples.
double variance_estimator(std::span<const ComplexMat2> samples);

// What the parameter column of an order table measures.
enum class OrderKind {
  StepSize,     // order_k = log(e_{k-1}/e_k) / log(p_{k-1}/p_k)
  SampleCount,  // order_k = log(e_{k-1}/e_k) / log(p_k/p_{k-1})
};

// One entry per input point; the first entry, and any entry touching a
// nonpositive error or equal parameters, is std::nullopt.
std::vector<std::optional<double>> order_of_accuracy(std::span<const double> errors,
                                                     std::span<const double> params,
                                                     OrderKind kind);

// Least-squares y ~ c0 + c1 x + c2 x^2.
struct QuadraticFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};
QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y);

// Least-squares slope of y ~ a + b x.
double fit_slope(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Percentile bootstrap. `statistic(indices)` evaluates the statistic on a
/// resample given as replication indices drawn with replacement from
/// [0, n). Resample r uses derive_stream(seed, {r}).
Interval bootstrap_interval(std::size_t n, int resamples, double level, std::uint64_t seed,
                            const std::function<double(std::span<const std::size_t>)>& statistic);

}  // namespace inchworm
