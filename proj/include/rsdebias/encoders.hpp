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

#ifndef RSDEBIAS_ENCODERS_HPP_
#define RSDEBIAS_ENCODERS_HPP_

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsdebias/metadata.hpp"
#include "rsdebias/nn.hpp"
#include "rsdebias/rng.hpp"

namespace rsdebias {

enum class EncoderKind { kToyAudioMlp, kToyTextBag, kExternal };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kToyAudioMlp;
  std::size_t input_dim = 0;  // feature dim (audio) or vocabulary size (text)
  std::size_t embed_dim = 64;
  std::vector<std::size_t> hidden_dims = {128};
  std::uint64_t seed = 0;
  std::string external_adapter;  // opaque identifier for kExternal

  void validate() const {
    if (embed_dim < 1) throw std::runtime_error("embed_dim must be >= 1");
    if (input_dim < 1) throw std::runtime_error("input_dim must be >= 1");
    if (kind == EncoderKind::kExternal && external_adapter.empty()) {
      throw std::runtime_error("external encoder needs an adapter identifier");
    }
  }
};

// Extension point for pretrained backends: embed an input and expose
// parameters for the optimizer. No implementation ships with the library.
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;
  virtual std::vector<double> embed(std::span<const double> input) = 0;
  virtual void collect(std::vector<ParamBlock*>& out) = 0;
};

// Deterministic toy audio encoder: an MLP over a fixed-length feature (or
// waveform) vector.
class ToyAudioEncoder {
 public:
  using Ctx = Mlp::Ctx;

  explicit ToyAudioEncoder(const EncoderSpec& spec, const std::string& prefix)
      : spec_(spec),
        net_(prefix, spec.input_dim, spec.hidden_dims, spec.embed_dim) {
    spec_.validate();
    Rng rng = derive_rng(spec_.seed, "init." + prefix);
    net_.init(rng);
  }

  const EncoderSpec& spec() const { return spec_; }

  std::vector<double> encode(std::span<const double> input,
                             Ctx* ctx = nullptr) const {
    if (input.size() != spec_.input_dim) {
      throw std::invalid_argument(
          "audio encoder: input dim " + std::to_string(input.size()) +
          " != " + std::to_string(spec_.input_dim));
    }
    return net_.forward(input, ctx);
  }

  std::vector<double> backward(const Ctx& ctx, std::span<const double> dy) {
    return net_.backward(ctx, dy);
  }

  void collect(std::vector<ParamBlock*>& out) { net_.collect(out); }

 private:
  EncoderSpec spec_;
  Mlp net_;
};

// Deterministic toy text encoder: learned-table mean pool over token ids.
class ToyTextEncoder {
 public:
  explicit ToyTextEncoder(const EncoderSpec& spec, const std::string& prefix)
      : spec_(spec), table_(prefix + ".table", spec.input_dim, spec.embed_dim) {
    spec_.validate();
    Rng rng = derive_rng(spec_.seed, "init." + prefix);
    table_.init_normal(rng);
  }

  const EncoderSpec& spec() const { return spec_; }

  std::vector<double> encode(const TokenSequence& tokens) const {
    return table_.forward(tokens.ids);
  }

  void backward(const TokenSequence& tokens, std::span<const double> dy) {
    table_.backward(tokens.ids, dy);
  }

  void collect(std::vector<ParamBlock*>& out) { table_.collect(out); }
  const EmbeddingBag& bag() const { return table_; }

 private:
  EncoderSpec spec_;
  EmbeddingBag table_;
};

// Multimodal branch head: concatenated [audio_emb; text_emb] through a small
// affine stack to the 4 class logits.
class MultimodalHead {
 public:
  struct Ctx {
    std::vector<double> concat;
    Mlp::Ctx net;
  };

  MultimodalHead(std::size_t embed_dim, std::size_t hidden,
                 std::size_t n_classes, std::uint64_t seed,
                 const std::string& prefix = "fusion_head")
      : embed_dim_(embed_dim),
        net_(prefix, 2 * embed_dim, hidden ? std::vector<std::size_t>{hidden}
                                           : std::vector<std::size_t>{},
             n_classes) {
    Rng rng = derive_rng(seed, "init." + prefix);
    net_.init(rng);
  }

  std::vector<double> forward(std::span<const double> audio_emb,
                              std::span<const double> text_emb,
                              Ctx* ctx = nullptr) const {
    if (audio_emb.size() != embed_dim_ || text_emb.size() != embed_dim_) {
      throw std::invalid_argument("multimodal head: embedding dim mismatch");
    }
    std::vector<double> concat;
    concat.reserve(2 * embed_dim_);
    concat.insert(concat.end(), audio_emb.begin(), audio_emb.end());
    concat.insert(concat.end(), text_emb.begin(), text_emb.end());
    if (ctx) {
      ctx->concat = concat;
      return net_.forward(ctx->concat, &ctx->net);
    }
    return net_.forward(concat);
  }

  // Returns (d_audio_emb, d_text_emb).
  std::pair<std::vector<double>, std::vector<double>> backward(
      const Ctx& ctx, std::span<const double> dz) {
    std::vector<double> dconcat = net_.backward(ctx.net, dz);
    std::vector<double> da(dconcat.begin(),
                           dconcat.begin() + static_cast<long>(embed_dim_));
    std::vector<double> dt(dconcat.begin() + static_cast<long>(embed_dim_),
                           dconcat.end());
    return {std::move(da), std::move(dt)};
  }

  void collect(std::vector<ParamBlock*>& out) { net_.collect(out); }

 private:
  std::size_t embed_dim_;
  Mlp net_;
};

// Text-only branch head, independent from the fusion branch.
class TextHead {
 public:
  using Ctx = Mlp::Ctx;

  TextHead(std::size_t embed_dim, std::size_t n_classes, std::uint64_t seed,
           const std::string& prefix = "nde_head")
      : net_(prefix, embed_dim, {}, n_classes) {
    Rng rng = derive_rng(seed, "init." + prefix);
    net_.init(rng);
  }

  std::vector<double> forward(std::span<const double> text_emb,
                              Ctx* ctx = nullptr) const {
    return net_.forward(text_emb, ctx);
  }

  std::vector<double> backward(const Ctx& ctx, std::span<const double> dz) {
    return net_.backward(ctx, dz);
  }

  void collect(std::vector<ParamBlock*>& out) { net_.collect(out); }

 private:
  Mlp net_;
};

// Per-example score vectors of the three causal branches plus the fused
// factual output.
struct BranchOutputs {
  std::vector<double> z_t;       // text-only (NDE) branch logits
  std::vector<double> z_m;       // multimodal branch logits
  std::vector<double> y_tm;      // fused factual scores
  std::vector<double> y_tmstar;  // counterfactual scores (dummy multimodal)
};

}  // namespace rsdebias

#endif  // RSDEBIAS_ENCODERS_HPP_
