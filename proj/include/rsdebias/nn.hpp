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

#ifndef RSDEBIAS_NN_HPP_
#define RSDEBIAS_NN_HPP_

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsdebias/rng.hpp"

namespace rsdebias {

// A named, flat parameter array with shape metadata and a matching gradient
// buffer. Checkpoints serialize these by name.
struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  ParamBlock() = default;
  ParamBlock(std::string n, std::vector<std::size_t> s)
      : name(std::move(n)), shape(std::move(s)) {
    std::size_t total = 1;
    for (std::size_t d : shape) total *= d;
    value.assign(total, 0.0);
    grad.assign(total, 0.0);
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

class Affine {
 public:
  Affine(std::string prefix, std::size_t in, std::size_t out)
      : in_(in), out_(out), w_(prefix + ".w", {out, in}),
        b_(prefix + ".b", {out}) {}

  void init_glorot(Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(in_ + out_));
    for (double& v : w_.value) v = rng.uniform(-a, a);
    std::fill(b_.value.begin(), b_.value.end(), 0.0);
  }

  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

  std::vector<double> forward(std::span<const double> x) const {
    if (x.size() != in_) {
      throw std::invalid_argument("affine " + w_.name + ": input dim " +
                                  std::to_string(x.size()) + " != " +
                                  std::to_string(in_));
    }
    std::vector<double> y(out_);
    for (std::size_t o = 0; o < out_; ++o) {
      const double* row = w_.value.data() + o * in_;
      double acc = b_.value[o];
      for (std::size_t i = 0; i < in_; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
    return y;
  }

  // Accumulates parameter gradients and returns dL/dx.
  std::vector<double> backward(std::span<const double> x,
                               std::span<const double> dy) {
    std::vector<double> dx(in_, 0.0);
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = dy[o];
      double* grow = w_.grad.data() + o * in_;
      const double* row = w_.value.data() + o * in_;
      b_.grad[o] += g;
      for (std::size_t i = 0; i < in_; ++i) {
        grow[i] += g * x[i];
        dx[i] += row[i] * g;
      }
    }
    return dx;
  }

  ParamBlock& weight() { return w_; }
  ParamBlock& bias() { return b_; }
  const ParamBlock& weight() const { return w_; }
  const ParamBlock& bias() const { return b_; }

  void collect(std::vector<ParamBlock*>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
  }

 private:
  std::size_t in_, out_;
  ParamBlock w_, b_;
};

// Affine stack with max(0, x) between layers (none after the last).
class Mlp {
 public:
  struct Ctx {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> post;  // post-activation per hidden layer
  };

  Mlp(const std::string& prefix, std::size_t in,
      const std::vector<std::size_t>& hidden, std::size_t out) {
    std::size_t d = in;
    for (std::size_t h = 0; h < hidden.size(); ++h) {
      layers_.emplace_back(prefix + ".l" + std::to_string(h), d, hidden[h]);
      d = hidden[h];
    }
    layers_.emplace_back(prefix + ".l" + std::to_string(hidden.size()), d, out);
  }

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }

  void init(Rng& rng) {
    for (Affine& l : layers_) l.init_glorot(rng);
  }

  std::vector<double> forward(std::span<const double> x,
                              Ctx* ctx = nullptr) const {
    std::vector<double> cur(x.begin(), x.end());
    if (ctx) {
      ctx->input = cur;
      ctx->pre.clear();
      ctx->post.clear();
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      std::vector<double> pre = layers_[l].forward(cur);
      if (ctx) ctx->pre.push_back(pre);
      if (l + 1 < layers_.size()) {
        for (double& v : pre) v = v > 0.0 ? v : 0.0;
        if (ctx) ctx->post.push_back(pre);
      }
      cur = std::move(pre);
    }
    return cur;
  }

  std::vector<double> backward(const Ctx& ctx, std::span<const double> dy) {
    std::vector<double> grad(dy.begin(), dy.end());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const std::vector<double>& input =
          l == 0 ? ctx.input : ctx.post[l - 1];
      grad = layers_[l].backward(input, grad);
      if (l > 0) {
        const std::vector<double>& pre = ctx.pre[l - 1];
        for (std::size_t i = 0; i < grad.size(); ++i) {
          if (pre[i] <= 0.0) grad[i] = 0.0;
        }
      }
    }
    return grad;
  }

  void collect(std::vector<ParamBlock*>& out) {
    for (Affine& l : layers_) l.collect(out);
  }

 private:
  std::vector<Affine> layers_;
};

// Learned token table with mean pooling over ids (bag-of-words semantics).
class EmbeddingBag {
 public:
  EmbeddingBag(std::string name, std::size_t vocab, std::size_t dim)
      : vocab_(vocab), dim_(dim), table_(std::move(name), {vocab, dim}) {}

  void init_normal(Rng& rng, double stddev = 0.01) {
    for (double& v : table_.value) v = stddev * rng.gaussian();
  }

  std::size_t dim() const { return dim_; }
  std::size_t vocab() const { return vocab_; }

  std::vector<double> forward(std::span<const int> ids) const {
    if (ids.empty()) {
      throw std::invalid_argument(table_.name + ": empty token sequence");
    }
    std::vector<double> out(dim_, 0.0);
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_) {
        throw std::invalid_argument(table_.name + ": token id out of range");
      }
      const double* row = table_.value.data() + static_cast<std::size_t>(id) * dim_;
      for (std::size_t j = 0; j < dim_; ++j) out[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (double& v : out) v *= inv;
    return out;
  }

  void backward(std::span<const int> ids, std::span<const double> dy) {
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (int id : ids) {
      double* grow = table_.grad.data() + static_cast<std::size_t>(id) * dim_;
      for (std::size_t j = 0; j < dim_; ++j) grow[j] += dy[j] * inv;
    }
  }

  ParamBlock& table() { return table_; }
  const ParamBlock& table() const { return table_; }
  void collect(std::vector<ParamBlock*>& out) { out.push_back(&table_); }

 private:
  std::size_t vocab_, dim_;
  ParamBlock table_;
};

// ---------------------------------------------------------------------------
// Softmax and cross entropy
// ---------------------------------------------------------------------------

inline std::vector<double> softmax(std::span<const double> logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

inline double log_sum_exp(std::span<const double> logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return m + std::log(z);
}

inline double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw std::invalid_argument("class label out of range");
  }
  return log_sum_exp(logits) - logits[label];
}

// dCE/dlogits = softmax(logits) - onehot(label)
inline std::vector<double> cross_entropy_grad(std::span<const double> logits,
                                              std::size_t label) {
  std::vector<double> g = softmax(logits);
  g[label] -= 1.0;
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer and schedule
// ---------------------------------------------------------------------------

// Adaptive-moment optimizer with decoupled weight decay. Biases and embedding
// tables are decayed like every other parameter; at desk scale the
// distinction is immaterial and one rule keeps the update auditable.
class AdamW {
 public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2),
        eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step(const std::vector<ParamBlock*>& blocks) {
    if (m_.empty()) {
      for (ParamBlock* b : blocks) {
        m_.emplace_back(b->size(), 0.0);
        v_.emplace_back(b->size(), 0.0);
      }
    }
    if (m_.size() != blocks.size()) {
      throw std::runtime_error("optimizer state does not match block list");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      ParamBlock& p = *blocks[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
        v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
        const double mhat = m_[k][i] / bc1;
        const double vhat = v_[k][i] / bc2;
        p.value[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) +
                             weight_decay_ * p.value[i]);
      }
    }
  }

 private:
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Half-period cosine decay from base_lr toward zero across epochs.
inline double cosine_lr(double base_lr, std::size_t epoch,
                        std::size_t total_epochs) {
  if (total_epochs == 0) throw std::invalid_argument("total_epochs must be > 0");
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

}  // namespace rsdebias

#endif  // RSDEBIAS_NN_HPP_
