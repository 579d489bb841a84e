/* Copyright 2026 The rsdebias Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RSDEBIAS_METRICS_HPP_
#define RSDEBIAS_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rsdebias/dataio.hpp"

namespace rsdebias {

// 4x4 confusion counts, true class by predicted class.
struct ConfusionCounts {
  std::array<std::array<std::int64_t, 4>, 4> m = {};

  void add(CycleLabel truth, int predicted) {
    if (predicted < 0 || predicted >= 4) {
      throw std::invalid_argument("predicted class out of range");
    }
    ++m[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
  }

  std::int64_t row_sum(std::size_t t) const {
    std::int64_t s = 0;
    for (std::int64_t v : m[t]) s += v;
    return s;
  }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (std::size_t t = 0; t < 4; ++t) s += row_sum(t);
    return s;
  }

  bool operator==(const ConfusionCounts& rhs) const { return m == rhs.m; }
};

// Specificity, sensitivity, and their arithmetic mean, all in percent.
struct MetricsTriple {
  double sp = 0.0;
  double se = 0.0;
  double score = 0.0;
};

// sp = correct normal / total normal; se = exact-match correct abnormal /
// total abnormal; score = (sp + se) / 2.
inline MetricsTriple compute_metrics(const ConfusionCounts& counts) {
  const std::int64_t normal_total = counts.row_sum(0);
  const std::int64_t abnormal_total =
      counts.row_sum(1) + counts.row_sum(2) + counts.row_sum(3);
  if (normal_total == 0 || abnormal_total == 0) {
    throw std::runtime_error(
        "metrics undefined: need at least one normal-true and one "
        "abnormal-true example");
  }
  const std::int64_t normal_correct = counts.m[0][0];
  const std::int64_t abnormal_correct =
      counts.m[1][1] + counts.m[2][2] + counts.m[3][3];
  MetricsTriple t;
  t.sp = 100.0 * static_cast<double>(normal_correct) /
         static_cast<double>(normal_total);
  t.se = 100.0 * static_cast<double>(abnormal_correct) /
         static_cast<double>(abnormal_total);
  t.score = (t.sp + t.se) / 2.0;
  return t;
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased sample variance (n - 1 denominator).
inline double unbiased_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace rsdebias

#endif  // RSDEBIAS_METRICS_HPP_
