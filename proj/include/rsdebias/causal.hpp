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

#ifndef RSDEBIAS_CAUSAL_HPP_
#define RSDEBIAS_CAUSAL_HPP_

#include <span>
#include <stdexcept>
#include <vector>

#include "rsdebias/nn.hpp"

namespace rsdebias {

// Causal-effect decomposition of the fused outputs. tie = te - nde holds by
// construction.
struct CausalEffects {
  std::vector<double> te;
  std::vector<double> nde;
  std::vector<double> tie;
};

struct DebiasConfig {
  double alpha = 0.0;        // degree of direct-effect removal at inference
  double dummy_value = 1.0;  // constant counterfactual multimodal activation
};

namespace detail {
inline void check_same_length(std::span<const double> a,
                              std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}
}  // namespace detail

// Sigmoid-mask fusion: the multimodal scores are gated elementwise by the
// text-branch logits, y = z_m * sigmoid(z_t).
inline std::vector<double> fuse(std::span<const double> z_t,
                                std::span<const double> z_m) {
  detail::check_same_length(z_t, z_m, "fuse");
  std::vector<double> y(z_t.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = z_m[i] * sigmoid(z_t[i]);
  }
  return y;
}

// Gradient of fuse: given dL/dy, accumulates dL/dz_t and dL/dz_m.
inline void fuse_backward(std::span<const double> z_t,
                          std::span<const double> z_m,
                          std::span<const double> dy,
                          std::span<double> d_z_t, std::span<double> d_z_m) {
  for (std::size_t i = 0; i < z_t.size(); ++i) {
    const double s = sigmoid(z_t[i]);
    d_z_m[i] += dy[i] * s;
    d_z_t[i] += dy[i] * z_m[i] * s * (1.0 - s);
  }
}

// Counterfactual branch: the multimodal representation is replaced by a
// constant dummy vector, so the output depends on the text branch alone.
inline std::vector<double> counterfactual_branch(std::span<const double> z_t,
                                                 const DebiasConfig& cfg = {}) {
  std::vector<double> dummy(z_t.size(), cfg.dummy_value);
  return fuse(z_t, dummy);
}

// Reference (no-treatment) outcome used only for TE/NDE diagnostics; it
// cancels out of the TIE.
inline std::vector<double> reference_outcome(std::size_t n,
                                             const DebiasConfig& cfg = {}) {
  std::vector<double> zeros(n, 0.0);
  std::vector<double> dummy(n, cfg.dummy_value);
  return fuse(zeros, dummy);  // 0.5 * dummy_value per class
}

// te = y_tm - y_ref, nde = y_tmstar - y_ref, tie = y_tm - y_tmstar.
inline CausalEffects causal_effects(std::span<const double> y_tm,
                                    std::span<const double> y_tmstar,
                                    std::span<const double> y_ref) {
  detail::check_same_length(y_tm, y_tmstar, "causal_effects");
  detail::check_same_length(y_tm, y_ref, "causal_effects");
  CausalEffects fx;
  fx.te.resize(y_tm.size());
  fx.nde.resize(y_tm.size());
  fx.tie.resize(y_tm.size());
  for (std::size_t i = 0; i < y_tm.size(); ++i) {
    fx.te[i] = y_tm[i] - y_ref[i];
    fx.nde[i] = y_tmstar[i] - y_ref[i];
    fx.tie[i] = y_tm[i] - y_tmstar[i];
  }
  return fx;
}

struct InferenceResult {
  std::vector<double> scores;
  int predicted_class = 0;
};

inline int argmax_lowest_tie(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

// Debiased prediction: scores = y_tm - alpha * y_tmstar; ties broken toward
// the lowest class index.
inline InferenceResult debiased_inference(std::span<const double> y_tm,
                                          std::span<const double> y_tmstar,
                                          double alpha) {
  detail::check_same_length(y_tm, y_tmstar, "debiased_inference");
  if (!std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be finite");
  }
  InferenceResult r;
  r.scores.resize(y_tm.size());
  for (std::size_t i = 0; i < y_tm.size(); ++i) {
    r.scores[i] = y_tm[i] - alpha * y_tmstar[i];
  }
  r.predicted_class = argmax_lowest_tie(r.scores);
  return r;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_CAUSAL_HPP_
