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

#include "rsdebias/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "rsdebias/prepare.hpp"
#include "testutil.hpp"

namespace rsdebias {
namespace {

namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  std::vector<std::string> full = {"rsdebias"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : full) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string tiny_synth_cfg() {
  return "n_train = 60\nn_ood = 30\nfeature_dim = 12\nnoise_sigma = 1.5\n"
         "seed = 5\n";
}

std::string tiny_train_cfg() {
  return "lr = 2e-3\nepochs = 2\nbatch_size = 8\nseed = 3\n"
         "embed_dim = 8\nhidden_dim = 12\nhead_hidden = 8\n";
}

TEST(CliSynthGen, WritesManifestAndTwoSplits) {
  rsdebias::test::TempDir tmp("cli_synth");
  const fs::path cfg = tmp.path() / "synth.cfg";
  write_text_file(cfg, tiny_synth_cfg());
  const fs::path out = tmp.path() / "data";
  ASSERT_EQ(run({"synth-gen", "--config", cfg.string(), "--out", out.string(),
                 "--quiet"}),
            0);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_TRUE(fs::exists(out / "train" / "features.tsv"));
  EXPECT_TRUE(fs::exists(out / "ood" / "features.tsv"));

  // Refuses to overwrite without --force.
  EXPECT_EQ(run({"synth-gen", "--config", cfg.string(), "--out", out.string(),
                 "--quiet"}),
            1);
  EXPECT_EQ(run({"synth-gen", "--config", cfg.string(), "--out", out.string(),
                 "--quiet", "--force"}),
            0);
}

TEST(CliSynthGen, SameSeedTwiceGivesIdenticalChecksums) {
  rsdebias::test::TempDir tmp("cli_synth_det");
  const fs::path cfg = tmp.path() / "synth.cfg";
  write_text_file(cfg, tiny_synth_cfg());
  const fs::path a = tmp.path() / "a";
  const fs::path b = tmp.path() / "b";
  ASSERT_EQ(run({"synth-gen", "--config", cfg.string(), "--out", a.string(),
                 "--seed", "7", "--quiet"}),
            0);
  ASSERT_EQ(run({"synth-gen", "--config", cfg.string(), "--out", b.string(),
                 "--seed", "7", "--quiet"}),
            0);
  for (const char* rel :
       {"manifest.json", "train/features.tsv", "train/labels.tsv",
        "train/metadata.tsv", "ood/features.tsv"}) {
    EXPECT_EQ(read_text_file(a / rel), read_text_file(b / rel)) << rel;
  }
}

TEST(CliSynthGen, MisspelledKeyNamesTheKey) {
  try {
    parse_synth_config(KeyedDoc::parse("rho_trian = 0.9\n"));
    FAIL() << "expected unknown-key error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("rho_trian"), std::string::npos);
  }
  rsdebias::test::TempDir tmp("cli_synth_bad");
  const fs::path cfg = tmp.path() / "bad.cfg";
  write_text_file(cfg, "rho_trian = 0.9\n");
  EXPECT_EQ(run({"synth-gen", "--config", cfg.string(), "--out",
                 (tmp.path() / "out").string(), "--quiet"}),
            1);
}

// Synthesizes WAV files matching the committed annotation fixtures.
void materialize_icbhi(const fs::path& dst) {
  fs::create_directories(dst);
  const fs::path src = rsdebias::test::fixture_dir() / "icbhi_mini";
  for (const auto& entry : fs::directory_iterator(src)) {
    if (entry.path().extension() != ".txt" ||
        entry.path().filename() == "demographics.txt") {
      if (entry.path().filename() == "demographics.txt") {
        fs::copy_file(entry.path(), dst / "demographics.txt");
      }
      continue;
    }
    fs::copy_file(entry.path(), dst / entry.path().filename());
    const auto anns = parse_icbhi_annotations(read_text_file(entry.path()));
    const double end = anns.back().end_s + 0.5;
    const std::size_t n = static_cast<std::size_t>(end * 4000.0);
    std::vector<double> tone(n);
    for (std::size_t i = 0; i < n; ++i) {
      tone[i] = 0.3 * std::sin(2.0 * M_PI * 200.0 * i / 4000.0);
    }
    fs::path wav = dst / entry.path().filename();
    wav.replace_extension(".wav");
    write_wav_pcm16(wav, tone, 4000);
  }
}

void materialize_sprsound(const fs::path& dst) {
  fs::create_directories(dst);
  const fs::path src = rsdebias::test::fixture_dir() / "sprsound_mini";
  for (const auto& entry : fs::directory_iterator(src)) {
    if (entry.path().extension() != ".json" ||
        entry.path().filename() == "manifest.json") {
      continue;
    }
    fs::copy_file(entry.path(), dst / entry.path().filename());
    const nlohmann::json doc =
        nlohmann::json::parse(read_text_file(entry.path()));
    double end = 0.0;
    for (const auto& ev : doc["event_annotation"]) {
      end = std::max(end, ev["end_s"].get<double>());
    }
    const std::size_t n = static_cast<std::size_t>((end + 0.5) * 4000.0);
    std::vector<double> tone(n);
    for (std::size_t i = 0; i < n; ++i) {
      tone[i] = 0.2 * std::sin(2.0 * M_PI * 150.0 * i / 4000.0);
    }
    fs::path wav = dst / entry.path().filename();
    wav.replace_extension(".wav");
    write_wav_pcm16(wav, tone, 4000);
  }
}

TEST(CliPrepareData, IcbhiFixtureReproducesManifestCounts) {
  rsdebias::test::TempDir tmp("cli_prep_icbhi");
  const fs::path in = tmp.path() / "in";
  materialize_icbhi(in);
  const fs::path out = tmp.path() / "out";
  ASSERT_EQ(run({"prepare-data", "--corpus", "icbhi", "--in", in.string(),
                 "--out", out.string(), "--duration", "0.5", "--rate", "4000",
                 "--quiet"}),
            0);
  const nlohmann::json produced =
      nlohmann::json::parse(read_text_file(out / "manifest.json"));
  const nlohmann::json expected = nlohmann::json::parse(read_text_file(
      rsdebias::test::fixture_dir() / "icbhi_mini" / "manifest.json"));
  for (const char* label : {"normal", "crackle", "wheeze", "both"}) {
    EXPECT_EQ(produced["class_counts"][label],
              expected["expected_counts"][label])
        << label;
  }
  EXPECT_EQ(produced["n_cycles"].get<int>(), 207);

  // Every cycle file is standardized to duration x rate samples.
  const auto first = detail::read_f32(out / "cycles" /
                                      "101_1b1_Tc_sc_Meditron_0.f32");
  EXPECT_EQ(first.size(), 2000u);  // 0.5 s at 4 kHz
}

TEST(CliPrepareData, SprsoundLabelsAreFourClassAndDeviceIsYunting) {
  rsdebias::test::TempDir tmp("cli_prep_spr");
  const fs::path in = tmp.path() / "in";
  materialize_sprsound(in);
  const fs::path out = tmp.path() / "out";
  ASSERT_EQ(run({"prepare-data", "--corpus", "sprsound", "--in", in.string(),
                 "--out", out.string(), "--duration", "0.5", "--rate", "4000",
                 "--quiet"}),
            0);
  const std::vector<std::string> lines =
      split(read_text_file(out / "index.tsv"), '\n');
  ASSERT_GT(lines.size(), 2u);
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const std::vector<std::string> cols = split(lines[i], '\t');
    ASSERT_EQ(cols.size(), 9u);
    EXPECT_NO_THROW(parse_label(cols[1]));
    EXPECT_EQ(cols[6], "yunting_ii");
    EXPECT_EQ(parse_age_group(cols[3]), AgeGroup::kPediatric);
  }
}

TEST(CliPrepareData, EmptyInputDirIsAnError) {
  rsdebias::test::TempDir tmp("cli_prep_empty");
  const fs::path in = tmp.path() / "in";
  fs::create_directories(in);
  EXPECT_EQ(run({"prepare-data", "--corpus", "icbhi", "--in", in.string(),
                 "--out", (tmp.path() / "out").string(), "--quiet"}),
            1);
}

TEST(CliPrepareData, MissingAnnotationFilesAreListed) {
  rsdebias::test::TempDir tmp("cli_prep_missing");
  const fs::path in = tmp.path() / "in";
  fs::create_directories(in);
  std::vector<double> tone(4000, 0.0);
  write_wav_pcm16(in / "101_1b1_Al_sc_Meditron.wav", tone, 4000);
  try {
    prepare_icbhi(in, tmp.path() / "out");
    FAIL() << "expected missing-file error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("101_1b1_Al_sc_Meditron.txt"),
              std::string::npos);
  }
}

struct CliTrainFixture {
  rsdebias::test::TempDir tmp{"cli_train"};
  fs::path data_dir, train_cfg, run_dir;

  CliTrainFixture() {
    const fs::path synth_cfg = tmp.path() / "synth.cfg";
    write_text_file(synth_cfg, tiny_synth_cfg());
    data_dir = tmp.path() / "data";
    EXPECT_EQ(run({"synth-gen", "--config", synth_cfg.string(), "--out",
                   data_dir.string(), "--quiet"}),
              0);
    train_cfg = tmp.path() / "train.cfg";
    write_text_file(train_cfg, tiny_train_cfg());
    run_dir = tmp.path() / "run";
    EXPECT_EQ(run({"train", "--config", train_cfg.string(), "--data",
                   data_dir.string(), "--out", run_dir.string(), "--quiet"}),
              0);
  }
};

CliTrainFixture& cli_fixture() {
  static CliTrainFixture f;
  return f;
}

TEST(CliTrain, WritesRunDirectoryLayoutAndManifestVerifies) {
  auto& f = cli_fixture();
  for (const char* rel :
       {"seed_3/config.json", "seed_3/loss_log.tsv", "seed_3/epochs.tsv",
        "seed_3/checkpoint.json", "seed_3/report.json",
        "aggregate_report.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(f.run_dir / rel)) << rel;
  }
  EXPECT_TRUE(verify_run_manifest(f.run_dir));
}

TEST(CliTrain, MultiSeedWritesSubdirsAndAggregate) {
  auto& f = cli_fixture();
  const fs::path multi = f.tmp.path() / "run_multi";
  ASSERT_EQ(run({"train", "--config", f.train_cfg.string(), "--data",
                 f.data_dir.string(), "--out", multi.string(), "--seeds",
                 "11,12,13,14,15", "--quiet"}),
            0);
  for (int s = 11; s <= 15; ++s) {
    EXPECT_TRUE(fs::exists(multi / ("seed_" + std::to_string(s)) /
                           "checkpoint.json"));
  }
  const nlohmann::json agg =
      nlohmann::json::parse(read_text_file(multi / "aggregate_report.json"));
  ASSERT_TRUE(agg.contains("valid"));
  EXPECT_EQ(agg["valid"]["runs"].size(), 5u);
  EXPECT_TRUE(agg["valid"].contains("mean"));
  EXPECT_TRUE(agg["valid"].contains("variance"));
}

TEST(CliEvaluate, DelegationMatchesLibraryCall) {
  auto& f = cli_fixture();
  const fs::path out = f.tmp.path() / "eval";
  ASSERT_EQ(run({"evaluate", "--checkpoint",
                 (f.run_dir / "seed_3" / "checkpoint.json").string(), "--data",
                 f.data_dir.string(), "--split", "ood", "--alpha", "0",
                 "--out", out.string(), "--quiet", "--dump-diagnostics"}),
            0);
  const nlohmann::json metrics =
      nlohmann::json::parse(read_text_file(out / "metrics.json"));

  DebiasModel model = DebiasModel::load(f.run_dir / "seed_3" /
                                        "checkpoint.json");
  DatasetDir data = load_dataset_dir(f.data_dir);
  EvalResult direct = evaluate(model, data.ood, 0.0);
  EXPECT_DOUBLE_EQ(metrics["score"].get<double>(), direct.metrics.score);
  EXPECT_DOUBLE_EQ(metrics["sp"].get<double>(), direct.metrics.sp);
  EXPECT_TRUE(fs::exists(out / "diagnostics.jsonl"));
  EXPECT_TRUE(verify_run_manifest(out));
}

TEST(CliSweepAlpha, ElevenRowsPerSplit) {
  auto& f = cli_fixture();
  const fs::path out = f.tmp.path() / "sweep";
  ASSERT_EQ(run({"sweep-alpha", "--checkpoint",
                 (f.run_dir / "seed_3" / "checkpoint.json").string(), "--data",
                 f.data_dir.string(), "--out", out.string(), "--quiet"}),
            0);
  const std::vector<std::string> lines =
      split(read_text_file(out / "sweep.tsv"), '\n');
  // header + 22 rows + trailing empty
  EXPECT_EQ(lines.size(), 24u);
  int id_rows = 0, ood_rows = 0;
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    if (lines[i].rfind("id\t", 0) == 0) ++id_rows;
    if (lines[i].rfind("ood\t", 0) == 0) ++ood_rows;
  }
  EXPECT_EQ(id_rows, 11);
  EXPECT_EQ(ood_rows, 11);
  EXPECT_TRUE(fs::exists(out / "plot_data.tsv"));
}

TEST(CliEvaluate, DimensionMismatchReportsBothShapes) {
  auto& f = cli_fixture();
  // A dataset with a different feature dimension.
  const fs::path synth_cfg = f.tmp.path() / "synth20.cfg";
  write_text_file(synth_cfg,
                  "n_train = 30\nn_ood = 20\nfeature_dim = 20\nseed = 5\n");
  const fs::path other = f.tmp.path() / "data20";
  ASSERT_EQ(run({"synth-gen", "--config", synth_cfg.string(), "--out",
                 other.string(), "--quiet"}),
            0);
  testing::internal::CaptureStderr();
  const int rc = run({"evaluate", "--checkpoint",
                      (f.run_dir / "seed_3" / "checkpoint.json").string(),
                      "--data", other.string(), "--split", "ood", "--out",
                      (f.tmp.path() / "eval20").string(), "--quiet"});
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(rc, 1);
  EXPECT_NE(err.find("12"), std::string::npos);
  EXPECT_NE(err.find("20"), std::string::npos);
}

TEST(CliAblate, EmitsFourVariantTable) {
  auto& f = cli_fixture();
  const fs::path out = f.tmp.path() / "ablate";
  ASSERT_EQ(run({"ablate", "--config", f.train_cfg.string(), "--data",
                 f.data_dir.string(), "--out", out.string(), "--seeds", "1,2",
                 "--quiet"}),
            0);
  const std::vector<std::string> lines =
      split(read_text_file(out / "ablation.tsv"), '\n');
  EXPECT_EQ(lines.size(), 6u);  // header + 4 rows + trailing empty
  const nlohmann::json j =
      nlohmann::json::parse(read_text_file(out / "ablation.json"));
  EXPECT_EQ(j["rows"].size(), 4u);
  EXPECT_TRUE(verify_run_manifest(out));
}

}  // namespace
}  // namespace rsdebias
