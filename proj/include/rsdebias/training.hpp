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

#ifndef RSDEBIAS_TRAINING_HPP_
#define RSDEBIAS_TRAINING_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdebias/dataio.hpp"
#include "rsdebias/metrics.hpp"
#include "rsdebias/model.hpp"

namespace rsdebias {

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

enum class LrSchedule { kCosine, kConstant };

struct TrainConfig {
  double lambda_ce = 1.0;
  double lambda_kl = 1.0;
  double augment_p = 0.25;
  double lr = 5e-5;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  LrSchedule schedule = LrSchedule::kCosine;
  std::size_t max_tokens = 64;
  double valid_fraction = 0.15;  // ID holdout used for best-checkpoint choice

  // Component switches (full framework has all three enabled).
  bool counterfactual = true;      // counterfactual branch + KL term
  bool adversary_enabled = true;   // NDE CE + attribute discriminators
  AdversaryConfig adversary;
  std::set<Attribute> sensitive = {Attribute::kAge, Attribute::kSex,
                                   Attribute::kLocation, Attribute::kDevice,
                                   Attribute::kAnthropometrics};

  void validate() const {
    if (lr <= 0.0) throw std::runtime_error("lr must be > 0");
    if (epochs < 1) throw std::runtime_error("epochs must be >= 1");
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (augment_p < 0.0 || augment_p > 1.0) {
      throw std::runtime_error("augment_p must lie in [0, 1]");
    }
    if (valid_fraction < 0.0 || valid_fraction >= 1.0) {
      throw std::runtime_error("valid_fraction must lie in [0, 1)");
    }
    if (max_tokens < 1) throw std::runtime_error("max_tokens must be >= 1");
    if (adversary_enabled) adversary.validate();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["lambda_ce"] = lambda_ce;
    j["lambda_kl"] = lambda_kl;
    j["augment_p"] = augment_p;
    j["lr"] = lr;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["weight_decay"] = weight_decay;
    j["seed"] = seed;
    j["schedule"] = schedule == LrSchedule::kCosine ? "cosine" : "constant";
    j["max_tokens"] = max_tokens;
    j["valid_fraction"] = valid_fraction;
    j["counterfactual"] = counterfactual;
    j["adversary_enabled"] = adversary_enabled;
    j["adversary"] = adversary_config_to_json(adversary);
    nlohmann::json sens = nlohmann::json::array();
    for (Attribute a : sensitive) sens.push_back(attribute_name(a));
    j["sensitive"] = sens;
    return j;
  }
};

// ---------------------------------------------------------------------------
// Objective terms
// ---------------------------------------------------------------------------

// Factual plus counterfactual cross entropy.
inline double classification_loss(std::span<const double> y_tm,
                                  std::span<const double> y_tmstar,
                                  std::size_t label) {
  if (label >= y_tm.size()) {
    throw std::invalid_argument("class label out of range");
  }
  return cross_entropy(y_tm, label) + cross_entropy(y_tmstar, label);
}

// KL(softmax(y_tmstar) || softmax(y_tm)). The factual distribution is the
// alignment target: gradients flow into the counterfactual side only.
inline double consistency_loss(std::span<const double> y_tmstar,
                               std::span<const double> y_tm) {
  const std::vector<double> p_star = softmax(y_tmstar);
  const std::vector<double> p = softmax(y_tm);
  double kl = 0.0;
  for (std::size_t i = 0; i < p_star.size(); ++i) {
    kl += p_star[i] * (std::log(p_star[i]) - std::log(p[i]));
  }
  return kl;
}

// d consistency_loss / d y_tmstar (y_tm treated as a constant target):
// p*_k * ((ln p*_k - ln p_k) - KL).
inline std::vector<double> consistency_loss_grad(
    std::span<const double> y_tmstar, std::span<const double> y_tm) {
  const std::vector<double> p_star = softmax(y_tmstar);
  const std::vector<double> p = softmax(y_tm);
  double kl = 0.0;
  for (std::size_t i = 0; i < p_star.size(); ++i) {
    kl += p_star[i] * (std::log(p_star[i]) - std::log(p[i]));
  }
  std::vector<double> g(p_star.size());
  for (std::size_t k = 0; k < p_star.size(); ++k) {
    g[k] = p_star[k] * ((std::log(p_star[k]) - std::log(p[k])) - kl);
  }
  return g;
}

// Per-step objective terms, logged unweighted.
struct LossBreakdown {
  double ce_factual = 0.0;
  double ce_counterfactual = 0.0;
  double kl = 0.0;
  double ce_nde = 0.0;
  std::vector<std::pair<Attribute, double>> adv_terms;
  double total = 0.0;

  double adv_total(const AdversaryConfig& cfg) const {
    double s = ce_nde;
    for (const auto& [a, v] : adv_terms) s += cfg.lambda_for(a) * v;
    return s;
  }
};

// Raised when a loss component goes non-finite; the trainer aborts the run
// and keeps the last good parameters.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weighted sum of the three objective parts. Any non-finite component halts
// the step with diagnostics.
inline double total_loss(double l_ce, double l_kl, double l_adv,
                         const TrainConfig& cfg) {
  auto check = [](double v, const char* what) {
    if (!std::isfinite(v)) {
      throw DivergenceError(std::string("non-finite loss component ") + what +
                            " = " + std::to_string(v));
    }
  };
  check(l_ce, "L_CE");
  check(l_kl, "L_KL");
  check(l_adv, "L_adv");
  return cfg.lambda_ce * l_ce + cfg.lambda_kl * l_kl + l_adv;
}

// ---------------------------------------------------------------------------
// Tokenized example cache
// ---------------------------------------------------------------------------
//
// The fusion branch always sees the unaugmented prompt; the NDE branch prompt
// is re-drawn every step. Token ids per sentence variant are precomputed so
// the per-step augmentation is a cheap concatenation, consuming exactly the
// same uniform draws (one per sensitive sentence, in order) as
// counterfactual_augment.

struct SentenceTokens {
  Attribute attribute;
  std::vector<int> original;
  std::vector<int> neutral;
  bool sensitive = false;
};

struct TokenizedExample {
  TokenSequence fusion_tokens;
  std::vector<SentenceTokens> nde_sentences;
  std::size_t label = 0;
  std::map<Attribute, std::size_t> attr_labels;  // discriminator targets only
};

inline std::vector<int> sentence_ids(const std::string& text,
                                     const Vocabulary& vocab) {
  std::vector<int> ids;
  for (const std::string& w : word_tokens(text)) ids.push_back(vocab.id(w));
  return ids;
}

inline TokenizedExample tokenize_example(const LabeledCycle& ex,
                                         const TrainConfig& cfg,
                                         const TemplateTable& table,
                                         const Vocabulary& vocab) {
  TokenizedExample out;
  const PromptText prompt = build_prompt(ex.metadata, table);
  out.fusion_tokens = tokenize(prompt, vocab, cfg.max_tokens);
  for (const PromptSentence& s : prompt.sentences) {
    SentenceTokens st;
    st.attribute = s.attribute;
    st.original = sentence_ids(s.text, vocab);
    st.neutral = sentence_ids(table.neutral(s.attribute), vocab);
    st.sensitive = cfg.sensitive.count(s.attribute) > 0;
    out.nde_sentences.push_back(std::move(st));
  }
  out.label = static_cast<std::size_t>(ex.label);
  if (cfg.adversary_enabled) {
    for (Attribute a : cfg.adversary.targets) {
      out.attr_labels[a] = attr_class_index(a, ex.metadata);
    }
  }
  return out;
}

// Draws the NDE-branch token sequence for one step; equivalent to
// counterfactual_augment followed by tokenize (verified by test).
inline TokenSequence augment_tokens(const TokenizedExample& ex, double p,
                                    Rng& rng, std::size_t max_tokens) {
  TokenSequence seq;
  for (const SentenceTokens& s : ex.nde_sentences) {
    const bool replace = s.sensitive && rng.uniform() < p;
    const std::vector<int>& ids = replace ? s.neutral : s.original;
    for (int id : ids) {
      if (seq.ids.size() >= max_tokens) break;
      seq.ids.push_back(id);
    }
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Train state and loop
// ---------------------------------------------------------------------------

struct StepLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  LossBreakdown losses;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown mean_losses;
  double valid_sp = 0.0;
  double valid_se = 0.0;
  double valid_score = 0.0;
  bool valid_available = false;
  std::vector<std::pair<Attribute, double>> disc_accuracy;
};

struct TrainState {
  std::size_t epochs_run = 0;
  std::size_t steps_run = 0;
  std::vector<StepLog> loss_history;
  std::vector<EpochLog> epoch_logs;
  bool diverged = false;
  double best_valid_score = -1.0;
  std::size_t best_epoch = 0;
};

// Deterministic ID holdout: every k-th example (dataset order) forms the
// validation split, independent of the training seed.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_valid(std::size_t n, double valid_fraction) {
  std::vector<std::size_t> train_idx, valid_idx;
  if (valid_fraction <= 0.0) {
    for (std::size_t i = 0; i < n; ++i) train_idx.push_back(i);
    return {train_idx, valid_idx};
  }
  const std::size_t k = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(1.0 / valid_fraction)));
  for (std::size_t i = 0; i < n; ++i) {
    if (i % k == 0) valid_idx.push_back(i);
    else train_idx.push_back(i);
  }
  return {train_idx, valid_idx};
}

struct TrainResult {
  DebiasModel model;
  TrainState state;
};

// Runs the full optimization: per step, the NDE-branch prompt is re-drawn via
// counterfactual augmentation, all branches are forwarded, and the weighted
// objective plus the adversarial objective is backpropagated (the adversary
// trains its discriminators through the reversed path). The returned model
// carries the parameters of the best-validation-Score epoch.
inline TrainResult train(const ModelConfig& model_cfg_in, const TrainConfig& cfg,
                         std::span<const LabeledCycle> data,
                         const TemplateTable& table = TemplateTable::builtin(),
                         const Vocabulary& vocab = Vocabulary::builtin()) {
  cfg.validate();
  if (data.empty()) throw std::runtime_error("training dataset is empty");

  ModelConfig model_cfg = model_cfg_in;
  model_cfg.seed = cfg.seed;
  model_cfg.vocab_size = vocab.size();
  model_cfg.adversary = cfg.adversary;
  if (!data.front().signal.empty()) {
    model_cfg.feature_dim = data.front().signal.size();
  }
  model_cfg.validate();

  TrainResult result{DebiasModel(model_cfg), TrainState{}};
  DebiasModel& model = result.model;
  TrainState& state = result.state;

  std::vector<TokenizedExample> cache;
  cache.reserve(data.size());
  for (const LabeledCycle& ex : data) {
    if (ex.signal.size() != model_cfg.feature_dim) {
      throw std::runtime_error("inconsistent feature dimension in dataset");
    }
    cache.push_back(tokenize_example(ex, cfg, table, vocab));
  }

  auto [train_idx, valid_idx] = split_train_valid(data.size(), cfg.valid_fraction);
  if (train_idx.empty()) throw std::runtime_error("empty training split");

  const std::vector<ParamBlock*> blocks = model.blocks();
  AdamW optimizer(cfg.lr, cfg.weight_decay);
  Rng augment_rng = derive_rng(cfg.seed, "augment");

  std::vector<double> best_params;
  auto snapshot = [&]() {
    best_params.clear();
    for (ParamBlock* b : blocks) {
      best_params.insert(best_params.end(), b->value.begin(), b->value.end());
    }
  };
  auto restore = [&]() {
    if (best_params.empty()) return;
    std::size_t off = 0;
    for (ParamBlock* b : blocks) {
      std::copy(best_params.begin() + static_cast<long>(off),
                best_params.begin() + static_cast<long>(off + b->size()),
                b->value.begin());
      off += b->size();
    }
  };
  snapshot();  // fall back to the initial parameters if nothing improves

  const std::size_t n_classes = model_cfg.n_classes;

  for (std::size_t epoch = 0; epoch < cfg.epochs && !state.diverged; ++epoch) {
    const double lr = cfg.schedule == LrSchedule::kCosine
                          ? cosine_lr(cfg.lr, epoch, cfg.epochs)
                          : cfg.lr;
    optimizer.set_lr(lr);

    Rng order_rng = derive_rng(cfg.seed, "data.epoch" + std::to_string(epoch));
    std::vector<std::size_t> order = train_idx;
    order_rng.shuffle(order);

    LossBreakdown epoch_sum;
    std::size_t epoch_steps = 0;
    std::map<Attribute, std::pair<std::size_t, std::size_t>> disc_hits;

    for (std::size_t start = 0; start < order.size() && !state.diverged;
         start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (ParamBlock* b : blocks) b->zero_grad();
      LossBreakdown batch;

      try {
        for (std::size_t bi = start; bi < end; ++bi) {
          const TokenizedExample& ex = cache[order[bi]];
          const LabeledCycle& row = data[order[bi]];
          const TokenSequence nde_tokens =
              augment_tokens(ex, cfg.augment_p, augment_rng, cfg.max_tokens);

          DebiasModel::Ctx ctx;
          const BranchOutputs& out =
              model.forward(row.signal, ex.fusion_tokens, nde_tokens, &ctx,
                            cfg.adversary_enabled);

          // Objective terms.
          const double ce_f = cross_entropy(out.y_tm, ex.label);
          const double ce_cf =
              cfg.counterfactual ? cross_entropy(out.y_tmstar, ex.label) : 0.0;
          const double kl =
              cfg.counterfactual ? consistency_loss(out.y_tmstar, out.y_tm) : 0.0;

          std::vector<std::vector<double>> adv_dlogits;
          double adv_total = 0.0;
          LossBreakdown ex_terms;
          if (cfg.adversary_enabled) {
            const AdversaryOutputs& adv = model.adversary_outputs(ctx);
            AdversarialLossTerms terms = adversarial_loss(
                out.z_t, ex.label, adv, ex.attr_labels, cfg.adversary);
            adv_total = terms.total;
            ex_terms.ce_nde = terms.ce_nde;
            ex_terms.adv_terms = terms.per_target;
            for (const auto& [attr, logits] : adv.logits) {
              std::vector<double> g =
                  cross_entropy_grad(logits, ex.attr_labels.at(attr));
              const double w = cfg.adversary.lambda_for(attr) * inv_batch;
              for (double& v : g) v *= w;
              adv_dlogits.push_back(std::move(g));
              auto& [hit, cnt] = disc_hits[attr];
              if (argmax_lowest_tie(logits) ==
                  static_cast<int>(ex.attr_labels.at(attr))) {
                ++hit;
              }
              ++cnt;
            }
          }

          const double l_ce = cfg.counterfactual ? ce_f + ce_cf : ce_f;
          const double l_kl = kl;
          const double step_total = total_loss(l_ce, l_kl, adv_total, cfg);

          batch.ce_factual += ce_f * inv_batch;
          batch.ce_counterfactual += ce_cf * inv_batch;
          batch.kl += kl * inv_batch;
          batch.ce_nde += ex_terms.ce_nde * inv_batch;
          if (batch.adv_terms.empty()) {
            batch.adv_terms = ex_terms.adv_terms;
            for (auto& [a, v] : batch.adv_terms) v *= inv_batch;
          } else {
            for (std::size_t k = 0; k < batch.adv_terms.size(); ++k) {
              batch.adv_terms[k].second +=
                  ex_terms.adv_terms[k].second * inv_batch;
            }
          }
          batch.total += step_total * inv_batch;

          // Gradients.
          std::vector<double> d_y_tm = cross_entropy_grad(out.y_tm, ex.label);
          for (double& v : d_y_tm) v *= cfg.lambda_ce * inv_batch;

          std::vector<double> d_y_tmstar(n_classes, 0.0);
          if (cfg.counterfactual) {
            std::vector<double> g = cross_entropy_grad(out.y_tmstar, ex.label);
            std::vector<double> gkl = consistency_loss_grad(out.y_tmstar, out.y_tm);
            for (std::size_t i = 0; i < n_classes; ++i) {
              d_y_tmstar[i] = (cfg.lambda_ce * g[i] + cfg.lambda_kl * gkl[i]) *
                              inv_batch;
            }
          }

          std::vector<double> d_z_t_direct(n_classes, 0.0);
          if (cfg.adversary_enabled) {
            std::vector<double> g = cross_entropy_grad(out.z_t, ex.label);
            for (std::size_t i = 0; i < n_classes; ++i) {
              d_z_t_direct[i] = g[i] * inv_batch;
            }
          }

          model.backward(ctx, d_y_tm, d_y_tmstar, d_z_t_direct,
                         cfg.adversary_enabled ? &adv_dlogits : nullptr);
        }
      } catch (const DivergenceError&) {
        // Abort with the last good parameters; the bad step is never applied.
        state.diverged = true;
        break;
      }
      if (state.diverged) break;

      optimizer.step(blocks);
      ++state.steps_run;
      ++epoch_steps;

      StepLog log;
      log.epoch = epoch;
      log.step = state.steps_run;
      log.losses = batch;
      state.loss_history.push_back(log);

      epoch_sum.ce_factual += batch.ce_factual;
      epoch_sum.ce_counterfactual += batch.ce_counterfactual;
      epoch_sum.kl += batch.kl;
      epoch_sum.ce_nde += batch.ce_nde;
      epoch_sum.total += batch.total;
      if (epoch_sum.adv_terms.empty()) {
        epoch_sum.adv_terms = batch.adv_terms;
      } else {
        for (std::size_t k = 0; k < batch.adv_terms.size(); ++k) {
          epoch_sum.adv_terms[k].second += batch.adv_terms[k].second;
        }
      }
    }
    if (state.diverged) break;

    EpochLog elog;
    elog.epoch = epoch;
    elog.lr = lr;
    if (epoch_steps > 0) {
      const double inv = 1.0 / static_cast<double>(epoch_steps);
      elog.mean_losses = epoch_sum;
      elog.mean_losses.ce_factual *= inv;
      elog.mean_losses.ce_counterfactual *= inv;
      elog.mean_losses.kl *= inv;
      elog.mean_losses.ce_nde *= inv;
      elog.mean_losses.total *= inv;
      for (auto& [a, v] : elog.mean_losses.adv_terms) v *= inv;
    }
    for (const auto& [attr, hc] : disc_hits) {
      elog.disc_accuracy.emplace_back(
          attr, hc.second ? static_cast<double>(hc.first) /
                                static_cast<double>(hc.second)
                          : 0.0);
    }

    // Validation score at alpha = 0 drives best-checkpoint selection.
    if (!valid_idx.empty()) {
      ConfusionCounts counts;
      for (std::size_t vi : valid_idx) {
        const TokenizedExample& ex = cache[vi];
        TokenSequence plain;
        for (const SentenceTokens& s : ex.nde_sentences) {
          for (int id : s.original) {
            if (plain.ids.size() >= cfg.max_tokens) break;
            plain.ids.push_back(id);
          }
        }
        const BranchOutputs out =
            model.forward(data[vi].signal, ex.fusion_tokens, plain);
        const InferenceResult inf =
            debiased_inference(out.y_tm, out.y_tmstar, 0.0);
        counts.add(data[vi].label, inf.predicted_class);
      }
      try {
        const MetricsTriple m = compute_metrics(counts);
        elog.valid_sp = m.sp;
        elog.valid_se = m.se;
        elog.valid_score = m.score;
        elog.valid_available = true;
        if (m.score > state.best_valid_score) {
          state.best_valid_score = m.score;
          state.best_epoch = epoch;
          snapshot();
        }
      } catch (const std::runtime_error&) {
        elog.valid_available = false;  // degenerate holdout support
      }
    }
    state.epoch_logs.push_back(elog);
    ++state.epochs_run;
  }

  // Without a validation split the current parameters are already the last
  // good ones (the diverging step is never applied).
  if (!valid_idx.empty() && state.best_valid_score >= 0.0) {
    restore();
  }
  return result;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_TRAINING_HPP_
