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

#ifndef RSDEBIAS_MODEL_HPP_
#define RSDEBIAS_MODEL_HPP_

#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdebias/adversarial.hpp"
#include "rsdebias/causal.hpp"
#include "rsdebias/encoders.hpp"
#include "rsdebias/metadata.hpp"
#include "rsdebias/util.hpp"
#include "rsdebias/version.hpp"

namespace rsdebias {

inline nlohmann::json adversary_config_to_json(const AdversaryConfig& cfg) {
  nlohmann::json j;
  j["grl_coefficient"] = cfg.grl_coefficient;
  j["adversary_hidden"] = cfg.adversary_hidden;
  nlohmann::json targets = nlohmann::json::array();
  nlohmann::json lambda, classes;
  for (Attribute a : cfg.targets) {
    targets.push_back(attribute_name(a));
    lambda[attribute_name(a)] = cfg.lambda_for(a);
    classes[attribute_name(a)] = cfg.classes_for(a);
  }
  j["targets"] = targets;
  j["lambda"] = lambda;
  j["n_classes_per_target"] = classes;
  return j;
}

inline AdversaryConfig adversary_config_from_json(const nlohmann::json& j) {
  AdversaryConfig cfg;
  cfg.grl_coefficient = j.at("grl_coefficient").get<double>();
  cfg.adversary_hidden = j.at("adversary_hidden").get<std::size_t>();
  cfg.targets.clear();
  cfg.lambda.clear();
  cfg.n_classes_per_target.clear();
  for (const auto& t : j.at("targets")) {
    const Attribute a = parse_attribute(t.get<std::string>());
    cfg.targets.push_back(a);
    cfg.lambda[a] = j.at("lambda").at(attribute_name(a)).get<double>();
    cfg.n_classes_per_target[a] =
        j.at("n_classes_per_target").at(attribute_name(a)).get<std::size_t>();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

struct ModelConfig {
  std::size_t feature_dim = 32;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;  // encoder hidden width
  std::size_t head_hidden = 64;  // fusion head hidden width
  std::size_t n_classes = 4;
  std::size_t vocab_size = 0;
  double dummy_value = 1.0;
  AdversaryConfig adversary;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_classes != 4) throw std::runtime_error("n_classes is fixed at 4");
    if (feature_dim == 0 || embed_dim == 0 || vocab_size == 0) {
      throw std::runtime_error("model dims must be positive");
    }
    adversary.validate();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["feature_dim"] = feature_dim;
    j["embed_dim"] = embed_dim;
    j["hidden_dim"] = hidden_dim;
    j["head_hidden"] = head_hidden;
    j["n_classes"] = n_classes;
    j["vocab_size"] = vocab_size;
    j["dummy_value"] = dummy_value;
    j["adversary"] = adversary_config_to_json(adversary);
    j["seed"] = seed;
    return j;
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
    cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
    cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    cfg.head_hidden = j.at("head_hidden").get<std::size_t>();
    cfg.n_classes = j.at("n_classes").get<std::size_t>();
    cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
    cfg.dummy_value = j.at("dummy_value").get<double>();
    cfg.adversary = adversary_config_from_json(j.at("adversary"));
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
  }
};

// The full debiasing model: audio encoder, fusion text encoder and fusion
// head producing the multimodal logits, an independent text branch producing
// the text-only logits, sigmoid-mask fusion, and the adversary over the
// text-branch logits.
class DebiasModel {
 public:
  struct Ctx {
    Mlp::Ctx audio;
    MultimodalHead::Ctx mm;
    TextHead::Ctx nde_head;
    Adversary::Ctx adv;
    TokenSequence fusion_tokens;
    TokenSequence nde_tokens;
    std::vector<double> fusion_emb;
    std::vector<double> nde_emb;
    BranchOutputs out;
    AdversaryOutputs adv_out;
    bool with_adversary = false;
  };

  explicit DebiasModel(const ModelConfig& cfg)
      : cfg_(cfg),
        audio_enc_(make_audio_spec(cfg), "audio_enc"),
        fusion_text_(make_text_spec(cfg, 1), "fusion_text"),
        fusion_head_(cfg.embed_dim, cfg.head_hidden, cfg.n_classes,
                     derived_seed(cfg.seed, 2), "fusion_head"),
        nde_text_(make_text_spec(cfg, 3), "nde_text"),
        nde_head_(cfg.embed_dim, cfg.n_classes, derived_seed(cfg.seed, 4),
                  "nde_head"),
        adversary_(cfg.adversary, cfg.n_classes, derived_seed(cfg.seed, 5)) {
    cfg_.validate();
  }

  const ModelConfig& config() const { return cfg_; }

  // Forward through all branches. The NDE-branch tokens may differ from the
  // fusion tokens (counterfactual augmentation applies to the NDE input
  // only).
  BranchOutputs forward(std::span<const double> features,
                        const TokenSequence& fusion_tokens,
                        const TokenSequence& nde_tokens, Ctx* ctx = nullptr,
                        bool with_adversary = false) const {
    Ctx local;
    Ctx& c = ctx ? *ctx : local;
    c.fusion_tokens = fusion_tokens;
    c.nde_tokens = nde_tokens;
    c.with_adversary = with_adversary;

    const std::vector<double> audio_emb = audio_enc_.encode(features, &c.audio);
    c.fusion_emb = fusion_text_.encode(fusion_tokens);
    c.out.z_m = fusion_head_.forward(audio_emb, c.fusion_emb, &c.mm);

    c.nde_emb = nde_text_.encode(nde_tokens);
    c.out.z_t = nde_head_.forward(c.nde_emb, &c.nde_head);

    c.out.y_tm = fuse(c.out.z_t, c.out.z_m);
    DebiasConfig dc;
    dc.dummy_value = cfg_.dummy_value;
    c.out.y_tmstar = counterfactual_branch(c.out.z_t, dc);

    if (with_adversary) {
      c.adv_out = adversary_.forward(c.out.z_t, &c.adv);
    }
    return c.out;
  }

  const AdversaryOutputs& adversary_outputs(const Ctx& ctx) const {
    if (!ctx.with_adversary) {
      throw std::runtime_error("forward pass did not run the adversary");
    }
    return ctx.adv_out;
  }

  const Adversary& adversary() const { return adversary_; }

  // Accumulates gradients for one example. d_z_t_direct carries the
  // text-branch classification gradient (the NDE CE term); adv_dlogits, when
  // present, carries the per-target discriminator gradients already scaled by
  // their weights.
  void backward(Ctx& ctx, std::span<const double> d_y_tm,
                std::span<const double> d_y_tmstar,
                std::span<const double> d_z_t_direct,
                const std::vector<std::vector<double>>* adv_dlogits = nullptr) {
    const std::size_t n = cfg_.n_classes;
    std::vector<double> d_z_t(n, 0.0);
    std::vector<double> d_z_m(n, 0.0);
    fuse_backward(ctx.out.z_t, ctx.out.z_m, d_y_tm, d_z_t, d_z_m);

    // Counterfactual branch: fuse against the constant dummy vector; the
    // dummy receives no gradient.
    std::vector<double> dummy(n, cfg_.dummy_value);
    std::vector<double> d_dummy(n, 0.0);
    fuse_backward(ctx.out.z_t, dummy, d_y_tmstar, d_z_t, d_dummy);

    for (std::size_t i = 0; i < n; ++i) d_z_t[i] += d_z_t_direct[i];

    if (adv_dlogits) {
      if (!ctx.with_adversary) {
        throw std::runtime_error("adversary gradients without adversary pass");
      }
      std::vector<double> reversed = adversary_.backward(ctx.adv, *adv_dlogits);
      for (std::size_t i = 0; i < n; ++i) d_z_t[i] += reversed[i];
    }

    const std::vector<double> d_nde_emb = nde_head_.backward(ctx.nde_head, d_z_t);
    nde_text_.backward(ctx.nde_tokens, d_nde_emb);

    auto [d_audio_emb, d_fusion_emb] = fusion_head_.backward(ctx.mm, d_z_m);
    audio_enc_.backward(ctx.audio, d_audio_emb);
    fusion_text_.backward(ctx.fusion_tokens, d_fusion_emb);
  }

  std::vector<ParamBlock*> blocks() {
    std::vector<ParamBlock*> out;
    audio_enc_.collect(out);
    fusion_text_.collect(out);
    fusion_head_.collect(out);
    nde_text_.collect(out);
    nde_head_.collect(out);
    adversary_.collect(out);
    return out;
  }

  void zero_grads() {
    for (ParamBlock* b : blocks()) b->zero_grad();
  }

  // -------------------------------------------------------------------------
  // Checkpointing: flat keyed arrays with shape metadata and a config echo.
  // -------------------------------------------------------------------------

  nlohmann::json to_checkpoint(const nlohmann::json& extra_echo = {}) {
    nlohmann::json ckpt;
    ckpt["format"] = "rsdebias.checkpoint";
    ckpt["version"] = 1;
    ckpt["tool_version"] = kVersion;
    ckpt["model_config"] = cfg_.to_json();
    if (!extra_echo.is_null() && !extra_echo.empty()) {
      ckpt["train_echo"] = extra_echo;
    }
    nlohmann::json arrays;
    for (ParamBlock* b : blocks()) {
      nlohmann::json entry;
      entry["shape"] = b->shape;
      entry["data"] = b->value;
      arrays[b->name] = std::move(entry);
    }
    ckpt["arrays"] = std::move(arrays);
    return ckpt;
  }

  void save(const std::filesystem::path& path,
            const nlohmann::json& extra_echo = {}) {
    write_text_file(path, to_checkpoint(extra_echo).dump(2) + "\n");
  }

  static DebiasModel from_checkpoint(const nlohmann::json& ckpt,
                                     nlohmann::json* train_echo = nullptr) {
    if (ckpt.at("format").get<std::string>() != "rsdebias.checkpoint") {
      throw std::runtime_error("not a model checkpoint document");
    }
    if (ckpt.at("version").get<int>() != 1) {
      throw std::runtime_error("unsupported checkpoint version");
    }
    DebiasModel model(ModelConfig::from_json(ckpt.at("model_config")));
    const nlohmann::json& arrays = ckpt.at("arrays");
    for (ParamBlock* b : model.blocks()) {
      if (!arrays.contains(b->name)) {
        throw std::runtime_error("checkpoint missing array '" + b->name + "'");
      }
      const nlohmann::json& entry = arrays.at(b->name);
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape != b->shape) {
        throw std::runtime_error(
            "checkpoint/model shape mismatch for '" + b->name + "': stored " +
            nlohmann::json(shape).dump() + ", model expects " +
            nlohmann::json(b->shape).dump());
      }
      entry.at("data").get_to(b->value);
      if (b->value.size() != b->grad.size()) {
        throw std::runtime_error("array size mismatch for '" + b->name + "'");
      }
    }
    if (train_echo && ckpt.contains("train_echo")) *train_echo = ckpt["train_echo"];
    return model;
  }

  static DebiasModel load(const std::filesystem::path& path,
                          nlohmann::json* train_echo = nullptr) {
    return from_checkpoint(nlohmann::json::parse(read_text_file(path)),
                           train_echo);
  }

 private:
  static std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) {
    return seed * 0x9e3779b97f4a7c15ULL + salt;
  }

  static EncoderSpec make_audio_spec(const ModelConfig& cfg) {
    EncoderSpec s;
    s.kind = EncoderKind::kToyAudioMlp;
    s.input_dim = cfg.feature_dim;
    s.embed_dim = cfg.embed_dim;
    s.hidden_dims = {cfg.hidden_dim};
    s.seed = derived_seed(cfg.seed, 0);
    return s;
  }

  static EncoderSpec make_text_spec(const ModelConfig& cfg, std::uint64_t salt) {
    EncoderSpec s;
    s.kind = EncoderKind::kToyTextBag;
    s.input_dim = cfg.vocab_size;
    s.embed_dim = cfg.embed_dim;
    s.seed = derived_seed(cfg.seed, salt);
    return s;
  }

  ModelConfig cfg_;
  ToyAudioEncoder audio_enc_;
  ToyTextEncoder fusion_text_;
  MultimodalHead fusion_head_;
  ToyTextEncoder nde_text_;
  TextHead nde_head_;
  Adversary adversary_;
};

}  // namespace rsdebias

#endif  // RSDEBIAS_MODEL_HPP_
