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

#ifndef RSDEBIAS_EVALUATION_HPP_
#define RSDEBIAS_EVALUATION_HPP_

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdebias/metrics.hpp"
#include "rsdebias/training.hpp"

namespace rsdebias {

// ---------------------------------------------------------------------------
// Single-run evaluation
// ---------------------------------------------------------------------------

struct EvalResult {
  MetricsTriple metrics;
  ConfusionCounts counts;
};

// Precomputed branch scores for one example; alpha can then be varied for
// free.
struct ScoredExample {
  std::vector<double> y_tm;
  std::vector<double> y_tmstar;
  std::vector<double> z_t;
  std::vector<double> z_m;
  CycleLabel label = CycleLabel::kNormal;
};

inline std::vector<ScoredExample> score_dataset(
    const DebiasModel& model, std::span<const LabeledCycle> data,
    const TemplateTable& table = TemplateTable::builtin(),
    const Vocabulary& vocab = Vocabulary::builtin(),
    std::size_t max_tokens = 64) {
  std::vector<ScoredExample> out;
  out.reserve(data.size());
  for (const LabeledCycle& row : data) {
    const PromptText prompt = build_prompt(row.metadata, table);
    const TokenSequence tokens = tokenize(prompt, vocab, max_tokens);
    const BranchOutputs b = model.forward(row.signal, tokens, tokens);
    ScoredExample s;
    s.y_tm = b.y_tm;
    s.y_tmstar = b.y_tmstar;
    s.z_t = b.z_t;
    s.z_m = b.z_m;
    s.label = row.label;
    out.push_back(std::move(s));
  }
  return out;
}

inline EvalResult evaluate_scored(std::span<const ScoredExample> scored,
                                  double alpha) {
  ConfusionCounts counts;
  for (const ScoredExample& s : scored) {
    const InferenceResult inf = debiased_inference(s.y_tm, s.y_tmstar, alpha);
    counts.add(s.label, inf.predicted_class);
  }
  return {compute_metrics(counts), counts};
}

// Evaluates one trained bundle on one dataset at one alpha. Deterministic;
// the optional collector receives one diagnostic record per example.
inline EvalResult evaluate(const DebiasModel& model,
                           std::span<const LabeledCycle> data, double alpha,
                           const TemplateTable& table = TemplateTable::builtin(),
                           const Vocabulary& vocab = Vocabulary::builtin(),
                           std::vector<nlohmann::json>* diagnostics = nullptr) {
  if (data.empty()) throw std::runtime_error("evaluation dataset is empty");
  const std::vector<ScoredExample> scored =
      score_dataset(model, data, table, vocab);
  if (diagnostics) {
    DebiasConfig dc;
    dc.dummy_value = model.config().dummy_value;
    dc.alpha = alpha;
    const std::vector<double> y_ref =
        reference_outcome(model.config().n_classes, dc);
    for (const ScoredExample& s : scored) {
      const InferenceResult inf = debiased_inference(s.y_tm, s.y_tmstar, alpha);
      const CausalEffects fx = causal_effects(s.y_tm, s.y_tmstar, y_ref);
      nlohmann::json rec;
      rec["z_t"] = s.z_t;
      rec["z_m"] = s.z_m;
      rec["y_tm"] = s.y_tm;
      rec["y_tmstar"] = s.y_tmstar;
      rec["tie"] = fx.tie;
      rec["alpha"] = alpha;
      rec["predicted_class"] = inf.predicted_class;
      rec["label"] = label_name(s.label);
      diagnostics->push_back(std::move(rec));
    }
  }
  return evaluate_scored(scored, alpha);
}

// ---------------------------------------------------------------------------
// Multi-run statistics
// ---------------------------------------------------------------------------

struct MultiRunStats {
  std::vector<MetricsTriple> runs;
  MetricsTriple mean;
  MetricsTriple variance;  // unbiased sample variance per metric
};

inline MultiRunStats aggregate_runs(std::span<const MetricsTriple> runs) {
  MultiRunStats s;
  s.runs.assign(runs.begin(), runs.end());
  std::vector<double> sp, se, score;
  for (const MetricsTriple& r : runs) {
    sp.push_back(r.sp);
    se.push_back(r.se);
    score.push_back(r.score);
  }
  s.mean = {mean_of(sp), mean_of(se), mean_of(score)};
  s.variance = {unbiased_variance(sp), unbiased_variance(se),
                unbiased_variance(score)};
  return s;
}

inline nlohmann::json metrics_triple_json(const MetricsTriple& m) {
  return nlohmann::json{{"sp", m.sp}, {"se", m.se}, {"score", m.score}};
}

inline nlohmann::json multi_run_json(const MultiRunStats& s) {
  nlohmann::json j;
  j["mean"] = metrics_triple_json(s.mean);
  j["variance"] = metrics_triple_json(s.variance);
  nlohmann::json runs = nlohmann::json::array();
  for (const MetricsTriple& r : s.runs) runs.push_back(metrics_triple_json(r));
  j["runs"] = runs;
  return j;
}

// ---------------------------------------------------------------------------
// Alpha sweep
// ---------------------------------------------------------------------------

inline std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
  return grid;
}

struct SweepRow {
  std::string split;
  double alpha = 0.0;
  MetricsTriple metrics;
};

struct SweepTable {
  std::vector<SweepRow> rows;

  std::string to_tsv() const {
    std::string out = "split\talpha\tsp\tse\tscore\n";
    for (const SweepRow& r : rows) {
      out += r.split + "\t" + format_double(r.alpha) + "\t" +
             format_round2(r.metrics.sp) + "\t" + format_round2(r.metrics.se) +
             "\t" + format_round2(r.metrics.score) + "\n";
    }
    return out;
  }

  // (x, y, series) triples for external plotting.
  std::string plot_data() const {
    std::string out = "x\ty\tseries\n";
    for (const SweepRow& r : rows) {
      out += format_double(r.alpha) + "\t" + format_double(r.metrics.score) +
             "\t" + r.split + "\n";
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const SweepRow& r : rows) {
      nlohmann::json j;
      j["split"] = r.split;
      j["alpha"] = r.alpha;
      j["metrics"] = metrics_triple_json(r.metrics);
      rows_json.push_back(std::move(j));
    }
    return nlohmann::json{{"rows", rows_json}};
  }
};

// Score per (split, alpha) over the standard grid, alpha ascending per split.
inline SweepTable sweep_alpha(const DebiasModel& model,
                              std::span<const LabeledCycle> id_data,
                              std::span<const LabeledCycle> ood_data,
                              std::span<const double> alphas,
                              const TemplateTable& table = TemplateTable::builtin(),
                              const Vocabulary& vocab = Vocabulary::builtin()) {
  SweepTable out;
  const std::vector<ScoredExample> id_scored =
      score_dataset(model, id_data, table, vocab);
  const std::vector<ScoredExample> ood_scored =
      score_dataset(model, ood_data, table, vocab);
  for (const auto& [split, scored] :
       {std::pair<std::string, const std::vector<ScoredExample>*>{"id",
                                                                  &id_scored},
        {"ood", &ood_scored}}) {
    for (double a : alphas) {
      out.rows.push_back({split, a, evaluate_scored(*scored, a).metrics});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

enum class AblationVariant {
  kFull,
  kNoCounterfactual,  // w/o (a): no counterfactual branch, no KL, alpha = 0
  kNoAdversary,       // w/o (b): no discriminators, no NDE CE
  kNoAugment,         // w/o (c): augment_p = 0
  kNoDebias,          // all three disabled (plain multimodal baseline)
};

inline const char* ablation_variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoCounterfactual: return "wo_counterfactual";
    case AblationVariant::kNoAdversary: return "wo_adversarial";
    case AblationVariant::kNoAugment: return "wo_augmentation";
    case AblationVariant::kNoDebias: return "wo_all";
  }
  return "?";
}

inline TrainConfig ablation_config(const TrainConfig& base, AblationVariant v) {
  TrainConfig cfg = base;
  switch (v) {
    case AblationVariant::kFull:
      break;
    case AblationVariant::kNoCounterfactual:
      cfg.counterfactual = false;
      break;
    case AblationVariant::kNoAdversary:
      cfg.adversary_enabled = false;
      break;
    case AblationVariant::kNoAugment:
      cfg.augment_p = 0.0;
      break;
    case AblationVariant::kNoDebias:
      cfg.counterfactual = false;
      cfg.adversary_enabled = false;
      cfg.augment_p = 0.0;
      break;
  }
  return cfg;
}

// One trained variant evaluated under both alpha-selection policies.
struct VariantCell {
  std::uint64_t seed = 0;
  double id_best_alpha = 0.0;
  MetricsTriple id_best;
  double ood_best_alpha = 0.0;
  MetricsTriple ood_best;
  MetricsTriple ood_at_id_alpha;  // OOD metrics at the ID-selected alpha
};

inline VariantCell evaluate_over_grid(const DebiasModel& model,
                                      std::span<const LabeledCycle> id_data,
                                      std::span<const LabeledCycle> ood_data,
                                      std::span<const double> alphas,
                                      const TemplateTable& table,
                                      const Vocabulary& vocab) {
  VariantCell cell;
  const std::vector<ScoredExample> id_scored =
      score_dataset(model, id_data, table, vocab);
  const std::vector<ScoredExample> ood_scored =
      score_dataset(model, ood_data, table, vocab);
  bool first = true;
  for (double a : alphas) {
    const MetricsTriple id_m = evaluate_scored(id_scored, a).metrics;
    const MetricsTriple ood_m = evaluate_scored(ood_scored, a).metrics;
    if (first || id_m.score > cell.id_best.score) {
      cell.id_best = id_m;
      cell.id_best_alpha = a;
      cell.ood_at_id_alpha = ood_m;
    }
    if (first || ood_m.score > cell.ood_best.score) {
      cell.ood_best = ood_m;
      cell.ood_best_alpha = a;
    }
    first = false;
  }
  return cell;
}

struct HarnessRow {
  std::string name;
  nlohmann::json config_echo;
  std::vector<VariantCell> cells;  // one per seed
  MultiRunStats id_stats;          // best-per-split policy
  MultiRunStats ood_stats;
  MultiRunStats ood_at_id_stats;   // ID-selected alpha policy
};

inline void finalize_row(HarnessRow& row) {
  std::vector<MetricsTriple> id_runs, ood_runs, ood_at_id_runs;
  for (const VariantCell& c : row.cells) {
    id_runs.push_back(c.id_best);
    ood_runs.push_back(c.ood_best);
    ood_at_id_runs.push_back(c.ood_at_id_alpha);
  }
  row.id_stats = aggregate_runs(id_runs);
  row.ood_stats = aggregate_runs(ood_runs);
  row.ood_at_id_stats = aggregate_runs(ood_at_id_runs);
}

struct HarnessTable {
  std::string kind;  // "ablation" or "attribute_comparison"
  std::vector<HarnessRow> rows;

  std::string to_tsv() const {
    std::string out =
        "name\tid_sp\tid_se\tid_score\tid_score_var\tood_sp\tood_se\tood_"
        "score\tood_score_var\tbest_alpha_id\tbest_alpha_ood\tood_score_at_id_"
        "alpha\n";
    for (const HarnessRow& r : rows) {
      // Alphas reported as the per-seed mean of the selected values.
      double a_id = 0.0, a_ood = 0.0;
      for (const VariantCell& c : r.cells) {
        a_id += c.id_best_alpha;
        a_ood += c.ood_best_alpha;
      }
      a_id /= static_cast<double>(r.cells.size());
      a_ood /= static_cast<double>(r.cells.size());
      out += r.name + "\t" + format_round2(r.id_stats.mean.sp) + "\t" +
             format_round2(r.id_stats.mean.se) + "\t" +
             format_round2(r.id_stats.mean.score) + "\t" +
             format_round2(r.id_stats.variance.score) + "\t" +
             format_round2(r.ood_stats.mean.sp) + "\t" +
             format_round2(r.ood_stats.mean.se) + "\t" +
             format_round2(r.ood_stats.mean.score) + "\t" +
             format_round2(r.ood_stats.variance.score) + "\t" +
             format_double(a_id) + "\t" + format_double(a_ood) + "\t" +
             format_round2(r.ood_at_id_stats.mean.score) + "\n";
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const HarnessRow& r : rows) {
      nlohmann::json j;
      j["name"] = r.name;
      j["config"] = r.config_echo;
      j["id"] = multi_run_json(r.id_stats);
      j["ood"] = multi_run_json(r.ood_stats);
      j["ood_at_id_alpha"] = multi_run_json(r.ood_at_id_stats);
      nlohmann::json cells = nlohmann::json::array();
      for (const VariantCell& c : r.cells) {
        nlohmann::json cj;
        cj["seed"] = c.seed;
        cj["id_best_alpha"] = c.id_best_alpha;
        cj["id_best"] = metrics_triple_json(c.id_best);
        cj["ood_best_alpha"] = c.ood_best_alpha;
        cj["ood_best"] = metrics_triple_json(c.ood_best);
        cj["ood_at_id_alpha"] = metrics_triple_json(c.ood_at_id_alpha);
        cells.push_back(std::move(cj));
      }
      j["cells"] = cells;
      rows_json.push_back(std::move(j));
    }
    return nlohmann::json{{"kind", kind}, {"rows", rows_json}};
  }
};

// Trains one variant for one seed and evaluates it over the alpha grid (a
// single point {0} when the counterfactual branch is off).
inline VariantCell train_and_evaluate_cell(
    const ModelConfig& model_cfg, const TrainConfig& cfg, std::uint64_t seed,
    std::span<const LabeledCycle> train_data,
    std::span<const LabeledCycle> ood_data, std::span<const double> alphas,
    const TemplateTable& table, const Vocabulary& vocab) {
  TrainConfig run_cfg = cfg;
  run_cfg.seed = seed;
  TrainResult r = train(model_cfg, run_cfg, train_data, table, vocab);

  auto [train_idx, valid_idx] =
      split_train_valid(train_data.size(), run_cfg.valid_fraction);
  std::vector<LabeledCycle> id_eval;
  for (std::size_t i : valid_idx) id_eval.push_back(train_data[i]);
  if (id_eval.empty()) {
    throw std::runtime_error("harness needs a nonempty ID validation split");
  }

  const std::vector<double> alpha0 = {0.0};
  std::span<const double> grid =
      run_cfg.counterfactual ? alphas : std::span<const double>(alpha0);
  VariantCell cell =
      evaluate_over_grid(r.model, id_eval, ood_data, grid, table, vocab);
  cell.seed = seed;
  return cell;
}

// Table-3-shaped harness: Full, w/o (a), w/o (b), w/o (c), each trained per
// seed; variants with the counterfactual branch report the best Score across
// the alpha grid under both selection policies.
inline HarnessTable run_ablation(
    const ModelConfig& model_cfg, const TrainConfig& base,
    std::span<const LabeledCycle> train_data,
    std::span<const LabeledCycle> ood_data,
    std::span<const std::uint64_t> seeds, std::span<const double> alphas,
    const TemplateTable& table = TemplateTable::builtin(),
    const Vocabulary& vocab = Vocabulary::builtin()) {
  if (seeds.empty()) throw std::runtime_error("need at least one seed");
  HarnessTable out;
  out.kind = "ablation";
  for (AblationVariant v :
       {AblationVariant::kFull, AblationVariant::kNoCounterfactual,
        AblationVariant::kNoAdversary, AblationVariant::kNoAugment}) {
    const TrainConfig cfg = ablation_config(base, v);
    HarnessRow row;
    row.name = ablation_variant_name(v);
    row.config_echo = cfg.to_json();
    for (std::uint64_t seed : seeds) {
      row.cells.push_back(train_and_evaluate_cell(
          model_cfg, cfg, seed, train_data, ood_data, alphas, table, vocab));
    }
    finalize_row(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Table-4-shaped harness: one variant per adversary target set.
inline HarnessTable run_attribute_comparison(
    const ModelConfig& model_cfg, const TrainConfig& base,
    const std::vector<std::vector<Attribute>>& attribute_sets,
    std::span<const LabeledCycle> train_data,
    std::span<const LabeledCycle> ood_data,
    std::span<const std::uint64_t> seeds, std::span<const double> alphas,
    const TemplateTable& table = TemplateTable::builtin(),
    const Vocabulary& vocab = Vocabulary::builtin()) {
  if (seeds.empty()) throw std::runtime_error("need at least one seed");
  HarnessTable out;
  out.kind = "attribute_comparison";
  for (const std::vector<Attribute>& set : attribute_sets) {
    if (set.empty()) {
      throw std::runtime_error("attribute set must not be empty");
    }
    TrainConfig cfg = base;
    cfg.adversary_enabled = true;
    cfg.adversary = AdversaryConfig::for_targets(set);
    HarnessRow row;
    std::string name;
    for (Attribute a : set) {
      if (!name.empty()) name += "+";
      name += attribute_name(a);
    }
    row.name = name;
    row.config_echo = cfg.to_json();
    for (std::uint64_t seed : seeds) {
      row.cells.push_back(train_and_evaluate_cell(
          model_cfg, cfg, seed, train_data, ood_data, alphas, table, vocab));
    }
    finalize_row(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

// The seven target combinations of the attribute study.
inline std::vector<std::vector<Attribute>> default_attribute_sets() {
  using A = Attribute;
  return {{A::kAge},
          {A::kSex},
          {A::kLocation},
          {A::kDevice},
          {A::kAge, A::kSex},
          {A::kAge, A::kLocation, A::kDevice},
          {A::kLocation, A::kDevice}};
}

}  // namespace rsdebias

#endif  // RSDEBIAS_EVALUATION_HPP_
