#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace gbsde {

/// Pairwise summation. The reduction tree depends only on the array length,
/// never on thread count, which keeps Monte-Carlo reductions deterministic.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Sample mean and standard error of the mean.
inline MeanSe mean_se(std::span<const double> x) {
  MeanSe out;
  out.n = x.size();
  if (x.empty()) return out;
  out.mean = pairwise_sum(x) / static_cast<double>(x.size());
  if (x.size() < 2) return out;
  double ss = 0.0;
  // pairwise over squared deviations, same fixed tree
  struct Sq {
    static double sum(std::span<const double> v, double mu) {
      if (v.size() <= 16) {
        double s = 0.0;
        for (double t : v) s += (t - mu) * (t - mu);
        return s;
      }
      const std::size_t half = v.size() / 2;
      return sum(v.first(half), mu) + sum(v.subspan(half), mu);
    }
  };
  ss = Sq::sum(x, out.mean);
  const double var = ss / static_cast<double>(x.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(x.size()));
  return out;
}

}  // namespace gbsde
