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

#include "rsdebias/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "testutil.hpp"

namespace rsdebias {
namespace {

using rsdebias::test::central_difference;
using rsdebias::test::rel_err;

TEST(ClassificationLoss, UniformLogitsGiveTwiceLogFour) {
  std::vector<double> uniform(4, 0.7);
  const double loss = classification_loss(uniform, uniform, 2);
  EXPECT_NEAR(loss, 2.0 * std::log(4.0), 1e-10);
  EXPECT_THROW(classification_loss(uniform, uniform, 4), std::invalid_argument);
}

TEST(ClassificationLoss, SaturatedFactualTermVanishes) {
  std::vector<double> dominant = {20.0, 0.0, 0.0, 0.0};
  std::vector<double> uniform(4, 0.0);
  const double factual_only = cross_entropy(dominant, 0);
  EXPECT_LT(factual_only, 1e-8);
  const double total = classification_loss(dominant, uniform, 0);
  EXPECT_NEAR(total, std::log(4.0), 1e-8);
}

// Independent scalar oracle: direct -log softmax computation.
TEST(ClassificationLoss, MatchesHandComputedSum) {
  std::vector<double> y_tm = {0.3, -1.2, 2.0, 0.4};
  std::vector<double> y_star = {1.0, 1.0, -0.5, 0.25};
  auto nll = [](const std::vector<double>& l, std::size_t y) {
    double z = 0.0;
    for (double v : l) z += std::exp(v);
    return -std::log(std::exp(l[y]) / z);
  };
  const double expected = nll(y_tm, 3) + nll(y_star, 3);
  EXPECT_NEAR(classification_loss(y_tm, y_star, 3), expected, 1e-10);
}

TEST(ConsistencyLoss, ZeroAtEqualDistributions) {
  std::vector<double> y = {0.1, -0.3, 0.7, 0.0};
  EXPECT_DOUBLE_EQ(consistency_loss(y, y), 0.0);
  // Shifting all logits by a constant leaves the distribution unchanged.
  std::vector<double> shifted = {1.1, 0.7, 1.7, 1.0};
  EXPECT_NEAR(consistency_loss(shifted, y), 0.0, 1e-12);
}

TEST(ConsistencyLoss, AnalyticNearOneHotVersusUniform) {
  const double eps = 1e-6;
  std::vector<double> y_star = {std::log(1.0 - 3.0 * eps), std::log(eps),
                                std::log(eps), std::log(eps)};
  std::vector<double> y_tm(4, 0.3);
  const double expected = (1.0 - 3.0 * eps) * std::log(4.0 * (1.0 - 3.0 * eps)) +
                          3.0 * eps * std::log(4.0 * eps);
  EXPECT_NEAR(consistency_loss(y_star, y_tm), expected, 1e-10);
  EXPECT_NEAR(consistency_loss(y_star, y_tm), std::log(4.0), 1e-4);
}

// Property: KL >= 0 over 1e5 random logit pairs.
TEST(ConsistencyLoss, NonNegativeOnRandomPairs) {
  Rng rng(808);
  double min_kl = 1.0;
  for (int trial = 0; trial < 100000; ++trial) {
    std::vector<double> a(4), b(4);
    for (double& v : a) v = rng.uniform(-6.0, 6.0);
    for (double& v : b) v = rng.uniform(-6.0, 6.0);
    const double kl = consistency_loss(a, b);
    min_kl = std::min(min_kl, kl);
  }
  EXPECT_GE(min_kl, 0.0);
  EXPECT_GT(min_kl, -1e-15);
}

// The factual side is a detached target: the gradient lives on the
// counterfactual logits only, and vanishes exactly at agreement.
TEST(ConsistencyLoss, GradientMatchesCentralDifferences) {
  Rng rng(809);
  std::vector<double> y_star(4), y_tm(4);
  for (double& v : y_star) v = rng.uniform(-2.0, 2.0);
  for (double& v : y_tm) v = rng.uniform(-2.0, 2.0);

  auto loss = [&]() { return consistency_loss(y_star, y_tm); };
  std::vector<double> g = consistency_loss_grad(y_star, y_tm);
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    worst = std::max(worst,
                     rel_err(central_difference(loss, &y_star[i], 1e-5), g[i]));
  }
  EXPECT_LT(worst, 1e-4);

  std::vector<double> at_match = consistency_loss_grad(y_tm, y_tm);
  for (double v : at_match) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(TotalLoss, WeightedSumAndDivergenceGuard) {
  TrainConfig cfg;
  EXPECT_NEAR(total_loss(1.0, 0.5, 0.25, cfg), 1.75, 1e-15);
  cfg.lambda_kl = 0.0;
  EXPECT_NEAR(total_loss(1.0, 123.0, 0.25, cfg), 1.25, 1e-15);
  cfg = TrainConfig{};
  EXPECT_THROW(
      total_loss(std::numeric_limits<double>::infinity(), 0.0, 0.0, cfg),
      DivergenceError);
  EXPECT_THROW(total_loss(0.0, std::nan(""), 0.0, cfg), DivergenceError);
}

TEST(CosineSchedule, ClosedFormAndMonotone) {
  EXPECT_NEAR(cosine_lr(5e-5, 15, 30), 2.5e-5, 1e-18);
  EXPECT_DOUBLE_EQ(cosine_lr(5e-5, 0, 30), 5e-5);
  double prev = cosine_lr(5e-5, 0, 30);
  for (std::size_t e = 1; e < 30; ++e) {
    const double cur = cosine_lr(5e-5, e, 30);
    EXPECT_LE(cur, prev);
    prev = cur;
  }
}

// The trainer's token-level augmentation fast path must make exactly the
// decisions of counterfactual_augment followed by tokenize.
TEST(AugmentTokens, EquivalentToPromptLevelAugmentation) {
  SynthConfig synth;
  synth.n_train = 30;
  synth.n_ood = 5;
  synth.seed = 21;
  SyntheticDataset data = generate_synthetic(synth);
  TrainConfig cfg;
  const TemplateTable& table = TemplateTable::builtin();
  const Vocabulary& vocab = Vocabulary::builtin();

  Rng rng_a(9090), rng_b(9090);
  for (const LabeledCycle& ex : data.train) {
    TokenizedExample cache = tokenize_example(ex, cfg, table, vocab);
    const PromptText prompt = build_prompt(ex.metadata, table);
    // Fusion branch stays unaugmented.
    EXPECT_EQ(cache.fusion_tokens.ids, tokenize(prompt, vocab, 64).ids);
    for (int rep = 0; rep < 5; ++rep) {
      PromptText aug = counterfactual_augment(prompt, 0.4, cfg.sensitive,
                                              rng_a, table);
      TokenSequence slow = tokenize(aug, vocab, cfg.max_tokens);
      TokenSequence fast = augment_tokens(cache, 0.4, rng_b, cfg.max_tokens);
      ASSERT_EQ(fast.ids, slow.ids);
    }
  }
}

SyntheticDataset small_data(std::size_t n_train, std::uint64_t seed,
                            double noise = 0.5) {
  SynthConfig synth;
  synth.n_train = n_train;
  synth.n_ood = 8;
  synth.noise_sigma = noise;
  synth.feature_dim = 16;
  synth.seed = seed;
  return generate_synthetic(synth);
}

ModelConfig small_model() {
  ModelConfig m;
  m.feature_dim = 16;
  m.embed_dim = 16;
  m.hidden_dim = 32;
  m.head_hidden = 16;
  m.vocab_size = Vocabulary::builtin().size();
  return m;
}

TEST(Train, SameSeedGivesIdenticalLossHistory) {
  SyntheticDataset data = small_data(24, 33);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 1e-3;
  cfg.seed = 5;
  cfg.valid_fraction = 0.2;
  TrainResult a = train(small_model(), cfg, data.train);
  TrainResult b = train(small_model(), cfg, data.train);
  ASSERT_EQ(a.state.loss_history.size(), b.state.loss_history.size());
  for (std::size_t i = 0; i < a.state.loss_history.size(); ++i) {
    EXPECT_EQ(a.state.loss_history[i].losses.total,
              b.state.loss_history[i].losses.total);
    EXPECT_EQ(a.state.loss_history[i].losses.kl,
              b.state.loss_history[i].losses.kl);
  }
}

// Per-term logs reassemble the logged total at every step.
TEST(Train, LossBreakdownSumsToTotal) {
  SyntheticDataset data = small_data(24, 34);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 1e-3;
  cfg.seed = 6;
  TrainResult r = train(small_model(), cfg, data.train);
  ASSERT_FALSE(r.state.loss_history.empty());
  for (const StepLog& log : r.state.loss_history) {
    const LossBreakdown& l = log.losses;
    double adv = l.ce_nde;
    for (const auto& [a, v] : l.adv_terms) adv += cfg.adversary.lambda_for(a) * v;
    const double expected =
        cfg.lambda_ce * (l.ce_factual + l.ce_counterfactual) +
        cfg.lambda_kl * l.kl + adv;
    EXPECT_NEAR(l.total, expected, 1e-8);
  }
}

TEST(Train, EpochLrFollowsCosine) {
  SyntheticDataset data = small_data(24, 35);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.lr = 8e-4;
  cfg.seed = 7;
  TrainResult r = train(small_model(), cfg, data.train);
  ASSERT_EQ(r.state.epoch_logs.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_DOUBLE_EQ(r.state.epoch_logs[e].lr, cosine_lr(8e-4, e, 4));
  }
}

// Overfitting oracle: a correct implementation memorizes a 32-example set.
TEST(Train, OverfitsTinyDatasetWithoutDebiasing) {
  SyntheticDataset data = small_data(32, 36);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 5e-3;
  cfg.seed = 8;
  cfg.valid_fraction = 0.0;
  cfg.counterfactual = false;
  cfg.adversary_enabled = false;
  cfg.augment_p = 0.0;
  TrainResult r = train(small_model(), cfg, data.train);
  ASSERT_FALSE(r.state.epoch_logs.empty());
  const LossBreakdown& last = r.state.epoch_logs.back().mean_losses;
  EXPECT_LT(last.ce_factual, 0.05);
  EXPECT_FALSE(r.state.diverged);
}

// Branch isolation: the audio signal never reaches the text-only branch.
TEST(Train, AudioPerturbationNeverChangesTextBranch) {
  SyntheticDataset data = small_data(8, 37);
  ModelConfig mc = small_model();
  mc.vocab_size = Vocabulary::builtin().size();
  DebiasModel model(mc);
  TrainConfig cfg;
  TokenizedExample ex =
      tokenize_example(data.train[0], cfg, TemplateTable::builtin(),
                       Vocabulary::builtin());
  TokenSequence nde = ex.fusion_tokens;
  BranchOutputs base =
      model.forward(data.train[0].signal, ex.fusion_tokens, nde);
  std::vector<double> other = data.train[0].signal;
  for (double& v : other) v += 1.7;
  BranchOutputs moved = model.forward(other, ex.fusion_tokens, nde);
  EXPECT_EQ(base.z_t, moved.z_t);        // exact
  EXPECT_NE(base.z_m, moved.z_m);
  EXPECT_EQ(base.y_tmstar, moved.y_tmstar);

  // Changing the metadata tokens moves both branches in general.
  TokenSequence shifted = nde;
  shifted.ids[0] = (shifted.ids[0] + 1) % static_cast<int>(mc.vocab_size);
  BranchOutputs text_moved =
      model.forward(data.train[0].signal, shifted, shifted);
  EXPECT_NE(text_moved.z_t, base.z_t);
  EXPECT_NE(text_moved.z_m, base.z_m);
}

// Composite gradient check of the conservative part of the objective through
// the whole model (fusion, both text branches, audio encoder, heads).
TEST(Train, ModelBackwardMatchesFiniteDifferences) {
  SyntheticDataset data = small_data(8, 38);
  ModelConfig mc;
  mc.feature_dim = 16;
  mc.embed_dim = 6;
  mc.hidden_dim = 8;
  mc.head_hidden = 6;
  mc.vocab_size = Vocabulary::builtin().size();
  DebiasModel model(mc);
  TrainConfig tcfg;
  TokenizedExample ex =
      tokenize_example(data.train[0], tcfg, TemplateTable::builtin(),
                       Vocabulary::builtin());
  Rng rng(40);
  std::vector<double> w1(4), w2(4), w3(4);
  for (double& v : w1) v = rng.uniform(-1.0, 1.0);
  for (double& v : w2) v = rng.uniform(-1.0, 1.0);
  for (double& v : w3) v = rng.uniform(-1.0, 1.0);

  auto loss = [&]() {
    BranchOutputs out =
        model.forward(data.train[0].signal, ex.fusion_tokens, ex.fusion_tokens);
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      acc += w1[i] * out.y_tm[i] + w2[i] * out.y_tmstar[i] + w3[i] * out.z_t[i];
    }
    return acc;
  };

  DebiasModel::Ctx ctx;
  model.forward(data.train[0].signal, ex.fusion_tokens, ex.fusion_tokens, &ctx);
  model.zero_grads();
  model.backward(ctx, w1, w2, w3);

  // Adversary parameters take no part in this loss; check the rest.
  std::vector<ParamBlock*> blocks;
  for (ParamBlock* b : model.blocks()) {
    if (b->name.rfind("adversary", 0) != 0) blocks.push_back(b);
  }
  rsdebias::test::expect_gradients_match(loss, blocks);
}

// With every debiasing component off, the pipeline degenerates to plain
// multimodal CE training: a reference single-branch loop written here from
// the model primitives must produce identical predictions.
TEST(Train, DegeneratesToPlainMultimodalTraining) {
  SyntheticDataset data = small_data(24, 39);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 2e-3;
  cfg.seed = 17;
  cfg.valid_fraction = 0.0;
  cfg.counterfactual = false;
  cfg.adversary_enabled = false;
  cfg.augment_p = 0.0;
  TrainResult pipeline = train(small_model(), cfg, data.train);

  // Reference: same initialization, same data order, CE(y_tm) only.
  ModelConfig mc = small_model();
  mc.seed = cfg.seed;
  mc.vocab_size = Vocabulary::builtin().size();
  mc.adversary = cfg.adversary;
  DebiasModel ref(mc);
  std::vector<TokenizedExample> cache;
  for (const LabeledCycle& ex : data.train) {
    cache.push_back(tokenize_example(ex, cfg, TemplateTable::builtin(),
                                     Vocabulary::builtin()));
  }
  const std::vector<ParamBlock*> blocks = ref.blocks();
  AdamW opt(cfg.lr, cfg.weight_decay);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(cosine_lr(cfg.lr, epoch, cfg.epochs));
    Rng order_rng = derive_rng(cfg.seed, "data.epoch" + std::to_string(epoch));
    std::vector<std::size_t> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      const double inv = 1.0 / static_cast<double>(end - start);
      for (ParamBlock* b : blocks) b->zero_grad();
      for (std::size_t bi = start; bi < end; ++bi) {
        const TokenizedExample& ex = cache[order[bi]];
        DebiasModel::Ctx ctx;
        BranchOutputs out = ref.forward(data.train[order[bi]].signal,
                                        ex.fusion_tokens, ex.fusion_tokens, &ctx);
        std::vector<double> d_y_tm = cross_entropy_grad(out.y_tm, ex.label);
        for (double& v : d_y_tm) v *= inv;
        std::vector<double> zero(4, 0.0);
        ref.backward(ctx, d_y_tm, zero, zero);
      }
      opt.step(blocks);
    }
  }

  for (const LabeledCycle& row : data.train) {
    TokenizedExample ex = tokenize_example(row, cfg, TemplateTable::builtin(),
                                           Vocabulary::builtin());
    BranchOutputs a = pipeline.model.forward(row.signal, ex.fusion_tokens,
                                             ex.fusion_tokens);
    BranchOutputs b = ref.forward(row.signal, ex.fusion_tokens,
                                  ex.fusion_tokens);
    EXPECT_EQ(debiased_inference(a.y_tm, a.y_tmstar, 0.0).predicted_class,
              debiased_inference(b.y_tm, b.y_tmstar, 0.0).predicted_class);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(a.y_tm[i], b.y_tm[i], 1e-9);
    }
  }
}

TEST(Train, DivergenceAbortsWithLastGoodParameters) {
  SyntheticDataset data = small_data(16, 41);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.lr = 1e18;  // guaranteed blow-up
  cfg.seed = 3;
  cfg.valid_fraction = 0.0;
  TrainResult r = train(small_model(), cfg, data.train);
  EXPECT_TRUE(r.state.diverged);
  // The surviving parameters are finite.
  for (ParamBlock* b : r.model.blocks()) {
    for (double v : b->value) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Checkpoint, RoundTripsAndValidatesShapes) {
  SyntheticDataset data = small_data(12, 42);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 1e-3;
  cfg.seed = 12;
  TrainResult r = train(small_model(), cfg, data.train);
  rsdebias::test::TempDir tmp("ckpt");
  const auto path = tmp.path() / "model.json";
  r.model.save(path, nlohmann::json{{"note", "test"}});

  nlohmann::json echo;
  DebiasModel loaded = DebiasModel::load(path, &echo);
  EXPECT_EQ(echo.at("note"), "test");
  TokenizedExample ex = tokenize_example(data.train[0], cfg,
                                         TemplateTable::builtin(),
                                         Vocabulary::builtin());
  BranchOutputs a =
      r.model.forward(data.train[0].signal, ex.fusion_tokens, ex.fusion_tokens);
  BranchOutputs b =
      loaded.forward(data.train[0].signal, ex.fusion_tokens, ex.fusion_tokens);
  EXPECT_EQ(a.y_tm, b.y_tm);
  EXPECT_EQ(a.y_tmstar, b.y_tmstar);

  // A checkpoint whose arrays disagree with the declared config must fail
  // with both shapes in the message.
  nlohmann::json ckpt = nlohmann::json::parse(read_text_file(path));
  ckpt["model_config"]["feature_dim"] = 20;
  try {
    DebiasModel::from_checkpoint(ckpt);
    FAIL() << "expected shape mismatch";
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("stored"), std::string::npos);
    EXPECT_NE(msg.find("expects"), std::string::npos);
  }
}

TEST(SplitTrainValid, DeterministicDisjointCover) {
  auto [train_idx, valid_idx] = split_train_valid(100, 0.15);
  EXPECT_EQ(train_idx.size() + valid_idx.size(), 100u);
  std::set<std::size_t> seen;
  for (std::size_t i : train_idx) seen.insert(i);
  for (std::size_t i : valid_idx) {
    EXPECT_EQ(seen.count(i), 0u);
    seen.insert(i);
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_NEAR(static_cast<double>(valid_idx.size()), 15.0, 1.0);

  auto [all_train, none] = split_train_valid(50, 0.0);
  EXPECT_EQ(all_train.size(), 50u);
  EXPECT_TRUE(none.empty());
}

}  // namespace
}  // namespace rsdebias
