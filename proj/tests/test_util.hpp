#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "levydyn/dataset.hpp"
#include "levydyn/model.hpp"

namespace testutil {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  std::size_t n = 0;
  double mean_se() const { return std::sqrt(var / static_cast<double>(n)); }
};

// Sample moments plus the standard error of the variance estimate via the
// fourth central moment.
struct MomentsWithSe : Moments {
  double var_se = 0.0;
};

template <class F>
MomentsWithSe draw_moments(std::size_t n, F&& draw) {
  std::vector<double> xs(n);
  double s = 0.0;
  for (auto& x : xs) {
    x = draw();
    s += x;
  }
  MomentsWithSe m;
  m.n = n;
  m.mean = s / static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    double d = x - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  m.var = m2 * static_cast<double>(n) / static_cast<double>(n - 1);
  m.var_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / static_cast<double>(n));
  return m;
}

inline double ig_mean(double a, double b) { return b / (a - 1.0); }
inline double ig_var(double a, double b) { return b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0)); }

// n locations on a line (p = 1) or a small grid, integer times 1..m.
inline levydyn::SpaceTimeDataset tiny_dataset(std::size_t n, std::size_t m, std::size_t p,
                                              unsigned seed = 7) {
  levydyn::SpaceTimeDataset d;
  d.locations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < p; ++l)
      d.locations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
          0.3 * static_cast<double>(i) + 0.17 * static_cast<double>(l) +
          0.05 * static_cast<double>((i * 7 + l * 3 + seed) % 5);
  for (std::size_t k = 0; k < m; ++k) d.times.push_back(static_cast<double>(k + 1));
  d.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < m; ++k)
      d.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          std::sin(1.3 * static_cast<double>(i) + 0.7 * static_cast<double>(k) + seed);
  return d;
}

}  // namespace testutil
