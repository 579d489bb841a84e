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

#ifndef RSDEBIAS_CLI_HPP_
#define RSDEBIAS_CLI_HPP_

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsdebias/config.hpp"
#include "rsdebias/evaluation.hpp"
#include "rsdebias/manifest.hpp"
#include "rsdebias/prepare.hpp"
#include "rsdebias/version.hpp"

namespace rsdebias {
namespace cli {

namespace fs = std::filesystem;

struct GlobalOpts {
  std::string out;
  bool force = false;
  bool quiet = false;

  void say(const std::string& msg) const {
    if (!quiet) std::cout << msg << "\n";
  }
};

inline fs::path resolve_out(const GlobalOpts& g, const std::string& command) {
  if (!g.out.empty()) return g.out;
  const char* root = std::getenv("RSDEBIAS_OUT_ROOT");
  if (root && *root) {
    return fs::path(root) / (command + "-" + utc_timestamp());
  }
  throw std::runtime_error(
      "no output directory: pass --out or set RSDEBIAS_OUT_ROOT");
}

inline void claim_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw std::runtime_error("output directory " + dir.string() +
                             " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split(s, ',')) {
    const std::string t = trim(part);
    if (!t.empty()) {
      seeds.push_back(static_cast<std::uint64_t>(parse_int(t, "seed")));
    }
  }
  if (seeds.empty()) throw std::runtime_error("empty seed list");
  return seeds;
}

struct LoadedExperiment {
  ExperimentConfig cfg;
  TemplateTable table;
  Vocabulary vocab;
  std::string templates_doc;  // serialized, echoed into checkpoints
};

inline LoadedExperiment load_experiment(const std::string& config_path) {
  const KeyedDoc doc = KeyedDoc::load(config_path);
  ExperimentConfig cfg = parse_experiment_config(doc);
  std::string templates_doc;
  TemplateTable table = TemplateTable::builtin();
  if (cfg.templates_path) {
    templates_doc = read_text_file(*cfg.templates_path);
    table = TemplateTable::from_document(templates_doc);
  } else {
    templates_doc = TemplateTable::builtin_doc().serialize();
  }
  Vocabulary vocab = Vocabulary::from_templates(table);
  cfg.model.vocab_size = vocab.size();
  return {std::move(cfg), std::move(table), std::move(vocab),
          std::move(templates_doc)};
}

// Rebuilds the template table and vocabulary a checkpoint was trained with.
struct CheckpointBundle {
  DebiasModel model;
  nlohmann::json train_echo;
  TemplateTable table;
  Vocabulary vocab;
};

inline CheckpointBundle load_checkpoint_bundle(const std::string& path) {
  nlohmann::json echo;
  DebiasModel model = DebiasModel::load(path, &echo);
  TemplateTable table =
      echo.contains("templates")
          ? TemplateTable::from_document(echo["templates"].get<std::string>())
          : TemplateTable::builtin();
  Vocabulary vocab = Vocabulary::from_templates(table);
  if (vocab.size() != model.config().vocab_size) {
    throw std::runtime_error(
        "checkpoint/template incompatibility: vocabulary size " +
        std::to_string(vocab.size()) + ", checkpoint expects " +
        std::to_string(model.config().vocab_size));
  }
  return {std::move(model), std::move(echo), std::move(table),
          std::move(vocab)};
}

// ---------------------------------------------------------------------------
// Emission helpers
// ---------------------------------------------------------------------------

inline std::string loss_log_tsv(const TrainState& state) {
  std::string out =
      "step\tepoch\tce_factual\tce_counterfactual\tkl\tce_nde\tadv_location\t"
      "adv_device\ttotal\n";
  for (const StepLog& log : state.loss_history) {
    double loc = 0.0, dev = 0.0;
    for (const auto& [a, v] : log.losses.adv_terms) {
      if (a == Attribute::kLocation) loc = v;
      if (a == Attribute::kDevice) dev = v;
    }
    out += std::to_string(log.step) + "\t" + std::to_string(log.epoch) + "\t" +
           format_double(log.losses.ce_factual) + "\t" +
           format_double(log.losses.ce_counterfactual) + "\t" +
           format_double(log.losses.kl) + "\t" +
           format_double(log.losses.ce_nde) + "\t" + format_double(loc) + "\t" +
           format_double(dev) + "\t" + format_double(log.losses.total) + "\n";
  }
  return out;
}

inline std::string epochs_tsv(const TrainState& state) {
  std::string out =
      "epoch\tlr\tce_factual\tce_counterfactual\tkl\tce_nde\ttotal\tvalid_sp\t"
      "valid_se\tvalid_score\tdisc_acc\n";
  for (const EpochLog& e : state.epoch_logs) {
    std::string disc;
    for (const auto& [a, acc] : e.disc_accuracy) {
      if (!disc.empty()) disc += ",";
      disc += std::string(attribute_name(a)) + ":" + format_double(acc);
    }
    if (disc.empty()) disc = "-";
    out += std::to_string(e.epoch) + "\t" + format_double(e.lr) + "\t" +
           format_double(e.mean_losses.ce_factual) + "\t" +
           format_double(e.mean_losses.ce_counterfactual) + "\t" +
           format_double(e.mean_losses.kl) + "\t" +
           format_double(e.mean_losses.ce_nde) + "\t" +
           format_double(e.mean_losses.total) + "\t" +
           (e.valid_available ? format_double(e.valid_sp) : "-") + "\t" +
           (e.valid_available ? format_double(e.valid_se) : "-") + "\t" +
           (e.valid_available ? format_double(e.valid_score) : "-") + "\t" +
           disc + "\n";
  }
  return out;
}

inline nlohmann::json eval_json(const std::string& split, double alpha,
                                const EvalResult& r) {
  nlohmann::json j;
  j["split"] = split;
  j["alpha"] = alpha;
  j["sp"] = r.metrics.sp;
  j["se"] = r.metrics.se;
  j["score"] = r.metrics.score;
  j["sp_rounded"] = format_round2(r.metrics.sp);
  j["se_rounded"] = format_round2(r.metrics.se);
  j["score_rounded"] = format_round2(r.metrics.score);
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& row : r.counts.m) confusion.push_back(row);
  j["confusion"] = confusion;
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_synth_gen(const GlobalOpts& g, const std::string& config_path,
                         std::optional<std::uint64_t> seed_override) {
  SynthConfig cfg = parse_synth_config(KeyedDoc::load(config_path));
  if (seed_override) cfg.seed = *seed_override;
  const fs::path out = resolve_out(g, "synth-gen");
  claim_out_dir(out, g.force);
  const SyntheticDataset data = generate_synthetic(cfg);
  write_dataset_dir(out, data, synth_config_json(cfg));
  // The dataset manifest doubles as the run manifest; verify what was written.
  const DatasetDir check = load_dataset_dir(out);
  g.say("wrote " + std::to_string(check.train.size()) + " train + " +
        std::to_string(check.ood.size()) + " ood examples to " + out.string());
  return 0;
}

inline int cmd_prepare_data(const GlobalOpts& g, const std::string& corpus,
                            const std::string& in_dir, double duration_s,
                            double rate) {
  const fs::path out = resolve_out(g, "prepare-data");
  claim_out_dir(out, g.force);
  PrepareConfig cfg;
  cfg.duration_s = duration_s;
  cfg.sample_rate_out = rate;
  PrepareSummary summary;
  if (corpus == "icbhi") {
    summary = prepare_icbhi(in_dir, out, cfg);
  } else if (corpus == "sprsound") {
    summary = prepare_sprsound(in_dir, out, cfg);
  } else {
    throw std::runtime_error("corpus must be icbhi or sprsound");
  }
  if (!g.quiet) std::cout << summary.table();
  const nlohmann::json manifest =
      nlohmann::json::parse(read_text_file(out / "manifest.json"));
  for (const auto& [rel, hex] : manifest.at("checksums").items()) {
    if (file_checksum(out / rel) != hex.get<std::string>()) {
      throw std::runtime_error("checksum verification failed for " + rel);
    }
  }
  return 0;
}

inline int cmd_train(const GlobalOpts& g, const std::string& config_path,
                     const std::string& data_dir,
                     const std::string& seeds_flag,
                     std::optional<std::uint64_t> seed_override) {
  LoadedExperiment exp = load_experiment(config_path);
  if (seed_override) exp.cfg.train.seed = *seed_override;
  std::vector<std::uint64_t> seeds =
      seeds_flag.empty() ? std::vector<std::uint64_t>{exp.cfg.train.seed}
                         : parse_seed_list(seeds_flag);

  const fs::path out = resolve_out(g, "train");
  claim_out_dir(out, g.force);
  const DatasetDir data = load_dataset_dir(data_dir);

  RunManifest manifest;
  manifest.command = "train";
  manifest.seeds = seeds;
  manifest.add_input(config_path);
  manifest.add_input(fs::path(data_dir) / "manifest.json");

  auto [train_idx, valid_idx] =
      split_train_valid(data.train.size(), exp.cfg.train.valid_fraction);
  std::vector<LabeledCycle> id_valid;
  for (std::size_t i : valid_idx) id_valid.push_back(data.train[i]);

  std::vector<MetricsTriple> valid_runs, ood_runs;
  for (std::uint64_t seed : seeds) {
    TrainConfig run_cfg = exp.cfg.train;
    run_cfg.seed = seed;
    TrainResult r = train(exp.cfg.model, run_cfg, data.train, exp.table,
                          exp.vocab);

    const std::string sub = "seed_" + std::to_string(seed);
    fs::create_directories(out / sub);
    nlohmann::json echo;
    echo["train"] = run_cfg.to_json();
    echo["model"] = r.model.config().to_json();
    echo["templates"] = exp.templates_doc;
    write_text_file(out / sub / "config.json", echo.dump(2) + "\n");
    write_text_file(out / sub / "loss_log.tsv", loss_log_tsv(r.state));
    write_text_file(out / sub / "epochs.tsv", epochs_tsv(r.state));
    r.model.save(out / sub / "checkpoint.json", echo);

    nlohmann::json report;
    report["diverged"] = r.state.diverged;
    report["best_epoch"] = r.state.best_epoch;
    if (!id_valid.empty()) {
      const EvalResult v = evaluate(r.model, id_valid, 0.0, exp.table,
                                    exp.vocab);
      report["valid"] = eval_json("valid", 0.0, v);
      valid_runs.push_back(v.metrics);
    }
    if (!data.ood.empty()) {
      const EvalResult o = evaluate(r.model, data.ood, 0.0, exp.table,
                                    exp.vocab);
      report["ood"] = eval_json("ood", 0.0, o);
      ood_runs.push_back(o.metrics);
    }
    write_text_file(out / sub / "report.json", report.dump(2) + "\n");
    for (const char* rel :
         {"config.json", "loss_log.tsv", "epochs.tsv", "checkpoint.json",
          "report.json"}) {
      manifest.add_artifact(out, sub + "/" + rel);
    }
    g.say("seed " + std::to_string(seed) + " done (best epoch " +
          std::to_string(r.state.best_epoch) + ")");
  }

  nlohmann::json aggregate;
  aggregate["seeds"] = seeds;
  if (!valid_runs.empty()) {
    aggregate["valid"] = multi_run_json(aggregate_runs(valid_runs));
  }
  if (!ood_runs.empty()) {
    aggregate["ood"] = multi_run_json(aggregate_runs(ood_runs));
  }
  write_text_file(out / "aggregate_report.json", aggregate.dump(2) + "\n");
  manifest.add_artifact(out, "aggregate_report.json");
  manifest.config_echo = {{"config_path", config_path},
                          {"data_dir", data_dir}};
  write_run_manifest(out, manifest);
  if (!verify_run_manifest(out)) {
    throw std::runtime_error("artifact checksum verification failed");
  }
  g.say("run verified: " + out.string());
  return 0;
}

inline std::vector<LabeledCycle> select_split(const DatasetDir& data,
                                              const std::string& split,
                                              double valid_fraction) {
  auto [train_idx, valid_idx] =
      split_train_valid(data.train.size(), valid_fraction);
  std::vector<LabeledCycle> rows;
  if (split == "ood") {
    rows = data.ood;
  } else if (split == "valid") {
    for (std::size_t i : valid_idx) rows.push_back(data.train[i]);
  } else if (split == "train") {
    for (std::size_t i : train_idx) rows.push_back(data.train[i]);
  } else {
    throw std::runtime_error("split must be train, valid, or ood");
  }
  if (rows.empty()) throw std::runtime_error("selected split is empty");
  return rows;
}

inline double checkpoint_valid_fraction(const nlohmann::json& echo) {
  if (echo.contains("train") && echo["train"].contains("valid_fraction")) {
    return echo["train"]["valid_fraction"].get<double>();
  }
  return TrainConfig{}.valid_fraction;
}

inline int cmd_evaluate(const GlobalOpts& g, const std::string& ckpt_path,
                        const std::string& data_dir, const std::string& split,
                        double alpha, bool dump_diagnostics) {
  CheckpointBundle b = load_checkpoint_bundle(ckpt_path);
  const DatasetDir data = load_dataset_dir(data_dir);
  const std::vector<LabeledCycle> rows =
      select_split(data, split, checkpoint_valid_fraction(b.train_echo));

  const fs::path out = resolve_out(g, "evaluate");
  claim_out_dir(out, g.force);

  std::vector<nlohmann::json> diagnostics;
  const EvalResult r =
      evaluate(b.model, rows, alpha, b.table, b.vocab,
               dump_diagnostics ? &diagnostics : nullptr);
  write_text_file(out / "metrics.json",
                  eval_json(split, alpha, r).dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config_echo = {{"checkpoint", ckpt_path},
                          {"data_dir", data_dir},
                          {"split", split},
                          {"alpha", alpha}};
  manifest.add_input(ckpt_path);
  manifest.add_input(fs::path(data_dir) / "manifest.json");
  manifest.add_artifact(out, "metrics.json");
  if (dump_diagnostics) {
    std::string jsonl;
    for (const nlohmann::json& rec : diagnostics) jsonl += rec.dump() + "\n";
    write_text_file(out / "diagnostics.jsonl", jsonl);
    manifest.add_artifact(out, "diagnostics.jsonl");
  }
  write_run_manifest(out, manifest);
  if (!verify_run_manifest(out)) {
    throw std::runtime_error("artifact checksum verification failed");
  }
  g.say("Sp " + format_round2(r.metrics.sp) + "  Se " +
        format_round2(r.metrics.se) + "  Score " +
        format_round2(r.metrics.score));
  return 0;
}

inline int cmd_sweep_alpha(const GlobalOpts& g, const std::string& ckpt_path,
                           const std::string& data_dir) {
  CheckpointBundle b = load_checkpoint_bundle(ckpt_path);
  const DatasetDir data = load_dataset_dir(data_dir);
  const std::vector<LabeledCycle> id_rows =
      select_split(data, "valid", checkpoint_valid_fraction(b.train_echo));

  const fs::path out = resolve_out(g, "sweep-alpha");
  claim_out_dir(out, g.force);

  const std::vector<double> grid = default_alpha_grid();
  const SweepTable table =
      sweep_alpha(b.model, id_rows, data.ood, grid, b.table, b.vocab);
  write_text_file(out / "sweep.tsv", table.to_tsv());
  write_text_file(out / "sweep.json", table.to_json().dump(2) + "\n");
  write_text_file(out / "plot_data.tsv", table.plot_data());

  RunManifest manifest;
  manifest.command = "sweep-alpha";
  manifest.config_echo = {{"checkpoint", ckpt_path}, {"data_dir", data_dir}};
  manifest.add_input(ckpt_path);
  manifest.add_input(fs::path(data_dir) / "manifest.json");
  for (const char* rel : {"sweep.tsv", "sweep.json", "plot_data.tsv"}) {
    manifest.add_artifact(out, rel);
  }
  write_run_manifest(out, manifest);
  if (!verify_run_manifest(out)) {
    throw std::runtime_error("artifact checksum verification failed");
  }
  if (!g.quiet) std::cout << table.to_tsv();
  return 0;
}

inline std::vector<std::uint64_t> default_harness_seeds(std::uint64_t base) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 5; ++i) seeds.push_back(base + i);
  return seeds;
}

inline int cmd_ablate(const GlobalOpts& g, const std::string& config_path,
                      const std::string& data_dir,
                      const std::string& seeds_flag) {
  LoadedExperiment exp = load_experiment(config_path);
  const std::vector<std::uint64_t> seeds =
      seeds_flag.empty() ? default_harness_seeds(exp.cfg.train.seed)
                         : parse_seed_list(seeds_flag);
  const DatasetDir data = load_dataset_dir(data_dir);
  const fs::path out = resolve_out(g, "ablate");
  claim_out_dir(out, g.force);

  const std::vector<double> grid = default_alpha_grid();
  const HarnessTable table =
      run_ablation(exp.cfg.model, exp.cfg.train, data.train, data.ood, seeds,
                   grid, exp.table, exp.vocab);
  write_text_file(out / "ablation.tsv", table.to_tsv());
  write_text_file(out / "ablation.json", table.to_json().dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "ablate";
  manifest.seeds = seeds;
  manifest.config_echo = {{"config_path", config_path}, {"data_dir", data_dir}};
  manifest.add_input(config_path);
  manifest.add_input(fs::path(data_dir) / "manifest.json");
  manifest.add_artifact(out, "ablation.tsv");
  manifest.add_artifact(out, "ablation.json");
  write_run_manifest(out, manifest);
  if (!verify_run_manifest(out)) {
    throw std::runtime_error("artifact checksum verification failed");
  }
  if (!g.quiet) std::cout << table.to_tsv();
  return 0;
}

inline int cmd_compare_attrs(const GlobalOpts& g,
                             const std::string& config_path,
                             const std::string& data_dir,
                             const std::string& seeds_flag) {
  LoadedExperiment exp = load_experiment(config_path);
  const std::vector<std::uint64_t> seeds =
      seeds_flag.empty() ? default_harness_seeds(exp.cfg.train.seed)
                         : parse_seed_list(seeds_flag);
  const DatasetDir data = load_dataset_dir(data_dir);
  const fs::path out = resolve_out(g, "compare-attrs");
  claim_out_dir(out, g.force);

  const std::vector<double> grid = default_alpha_grid();
  const HarnessTable table = run_attribute_comparison(
      exp.cfg.model, exp.cfg.train, default_attribute_sets(), data.train,
      data.ood, seeds, grid, exp.table, exp.vocab);
  write_text_file(out / "compare_attrs.tsv", table.to_tsv());
  write_text_file(out / "compare_attrs.json", table.to_json().dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "compare-attrs";
  manifest.seeds = seeds;
  manifest.config_echo = {{"config_path", config_path}, {"data_dir", data_dir}};
  manifest.add_input(config_path);
  manifest.add_input(fs::path(data_dir) / "manifest.json");
  manifest.add_artifact(out, "compare_attrs.tsv");
  manifest.add_artifact(out, "compare_attrs.json");
  write_run_manifest(out, manifest);
  if (!verify_run_manifest(out)) {
    throw std::runtime_error("artifact checksum verification failed");
  }
  if (!g.quiet) std::cout << table.to_tsv();
  return 0;
}

}  // namespace cli

// Single-executable entry point with subcommands; flags override config keys.
inline int run_cli(int argc, char** argv) {
  CLI::App app{"counterfactual adversarial debiasing for multimodal "
               "respiratory sound classification"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
  app.require_subcommand(1);

  cli::GlobalOpts g;
  app.add_option("--out", g.out, "output directory (default: under RSDEBIAS_OUT_ROOT)");
  app.add_flag("--force", g.force, "allow writing into a non-empty directory");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  std::string config_path, data_dir, corpus, in_dir, ckpt_path;
  std::string split = "ood", seeds_flag;
  double alpha = 0.0, duration_s = 8.0, rate = 48000.0;
  bool dump_diagnostics = false;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_value = 0;

  CLI::App* synth = app.add_subcommand("synth-gen",
                                       "generate a synthetic confounded dataset");
  synth->add_option("--config", config_path, "synthetic config document")
      ->required();
  synth->add_option("--seed", seed_value, "override the config seed");

  CLI::App* prep = app.add_subcommand("prepare-data",
                                      "extract standardized cycles from a corpus");
  prep->add_option("--corpus", corpus, "icbhi or sprsound")->required();
  prep->add_option("--in", in_dir, "corpus directory")->required();
  prep->add_option("--duration", duration_s, "cycle duration in seconds");
  prep->add_option("--rate", rate, "output sample rate in Hz");

  CLI::App* tr = app.add_subcommand("train", "train the debiasing model");
  tr->add_option("--config", config_path, "training config document")->required();
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--seed", seed_value, "override the config seed");
  tr->add_option("--seeds", seeds_flag, "comma-separated seed list");

  CLI::App* ev = app.add_subcommand("evaluate", "evaluate a checkpoint");
  ev->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--split", split, "train, valid, or ood");
  ev->add_option("--alpha", alpha, "direct-effect removal coefficient");
  ev->add_flag("--dump-diagnostics", dump_diagnostics,
               "write per-example branch scores");

  CLI::App* sw = app.add_subcommand("sweep-alpha",
                                    "score both splits across the alpha grid");
  sw->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  sw->add_option("--data", data_dir, "dataset directory")->required();

  CLI::App* ab = app.add_subcommand("ablate", "component ablation study");
  ab->add_option("--config", config_path, "training config document")->required();
  ab->add_option("--data", data_dir, "dataset directory")->required();
  ab->add_option("--seeds", seeds_flag, "comma-separated seed list");

  CLI::App* ca = app.add_subcommand("compare-attrs",
                                    "adversary target attribute study");
  ca->add_option("--config", config_path, "training config document")->required();
  ca->add_option("--data", data_dir, "dataset directory")->required();
  ca->add_option("--seeds", seeds_flag, "comma-separated seed list");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) {
      if (synth->count("--seed")) seed_override = seed_value;
      return cli::cmd_synth_gen(g, config_path, seed_override);
    }
    if (prep->parsed()) {
      return cli::cmd_prepare_data(g, corpus, in_dir, duration_s, rate);
    }
    if (tr->parsed()) {
      if (tr->count("--seed")) seed_override = seed_value;
      return cli::cmd_train(g, config_path, data_dir, seeds_flag, seed_override);
    }
    if (ev->parsed()) {
      return cli::cmd_evaluate(g, ckpt_path, data_dir, split, alpha,
                               dump_diagnostics);
    }
    if (sw->parsed()) return cli::cmd_sweep_alpha(g, ckpt_path, data_dir);
    if (ab->parsed()) return cli::cmd_ablate(g, config_path, data_dir, seeds_flag);
    if (ca->parsed()) {
      return cli::cmd_compare_attrs(g, config_path, data_dir, seeds_flag);
    }
    throw std::runtime_error("no subcommand selected");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rsdebias

#endif  // RSDEBIAS_CLI_HPP_
