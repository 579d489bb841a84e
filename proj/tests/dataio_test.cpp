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

#include "rsdebias/dataio.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

#include "testutil.hpp"

namespace rsdebias {
namespace {

TEST(IcbhiParser, ParsesAnnotationLines) {
  const std::string text = "0.036 0.579 0 0\n0.579 2.45 1 0\n2.45 3.893 1 1\n";
  IcbhiRecord rec = parse_icbhi_record(text, "101_1b1_Al_sc_Meditron");
  ASSERT_EQ(rec.annotations.size(), 3u);
  EXPECT_DOUBLE_EQ(rec.annotations[0].start_s, 0.036);
  EXPECT_DOUBLE_EQ(rec.annotations[0].end_s, 0.579);
  EXPECT_FALSE(rec.annotations[0].has_crackle);
  EXPECT_FALSE(rec.annotations[0].has_wheeze);
  EXPECT_EQ(rec.annotations[0].label(), CycleLabel::kNormal);
  EXPECT_EQ(rec.annotations[1].label(), CycleLabel::kCrackle);
  // Co-occurring crackle and wheeze maps to the "both" class.
  EXPECT_EQ(rec.annotations[2].label(), CycleLabel::kBoth);

  EXPECT_EQ(rec.patient_id, "101");
  EXPECT_EQ(rec.metadata.location, Location::kLeftAnterior);
  EXPECT_EQ(rec.metadata.device.kind, DeviceKind::kMeditron);
  EXPECT_TRUE(rec.warnings.empty());
}

TEST(IcbhiParser, MalformedLineNamesLineNumber) {
  const std::string text = "0.1 0.5 0 0\n0.5 1.2 1\n";
  try {
    parse_icbhi_record(text, "101_1b1_Al_sc_Meditron");
    FAIL() << "expected parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(IcbhiParser, UnknownCodesMapToFallbackWithWarning) {
  IcbhiRecord rec =
      parse_icbhi_record("0.0 1.0 0 0\n", "222_2p3_Xz_mc_EkoCore");
  EXPECT_EQ(rec.metadata.location, Location::kUnknown);
  EXPECT_EQ(rec.metadata.device.kind, DeviceKind::kOther);
  EXPECT_EQ(rec.metadata.device.other_name, "EkoCore");
  EXPECT_EQ(rec.warnings.size(), 2u);
}

TEST(IcbhiParser, DemographicsBinarizeAgeAtEighteen) {
  IcbhiRecord child = parse_icbhi_record("0.0 1.0 0 0\n",
                                         "101_1b1_Al_sc_Meditron",
                                         "101 3.0 F NA 19.0 99.0");
  EXPECT_EQ(child.metadata.age_group, AgeGroup::kPediatric);
  EXPECT_EQ(child.metadata.sex, Sex::kFemale);
  ASSERT_TRUE(child.metadata.weight_kg.has_value());
  EXPECT_DOUBLE_EQ(*child.metadata.weight_kg, 19.0);
  EXPECT_FALSE(child.metadata.bmi.has_value());

  IcbhiRecord adult = parse_icbhi_record("0.0 1.0 0 0\n",
                                         "102_1b1_Ar_sc_LittC2SE",
                                         "102 63.0 M 28.4 NA NA");
  EXPECT_EQ(adult.metadata.age_group, AgeGroup::kAdult);
  ASSERT_TRUE(adult.metadata.bmi.has_value());
  EXPECT_DOUBLE_EQ(*adult.metadata.bmi, 28.4);

  IcbhiRecord edge = parse_icbhi_record("0.0 1.0 0 0\n",
                                        "103_1b1_Pl_sc_Litt3200",
                                        "103 18.0 M NA NA NA");
  EXPECT_EQ(edge.metadata.age_group, AgeGroup::kAdult);
}

TEST(IcbhiParser, SerializeParseRoundTripIsStable) {
  const std::string text = "0.036 0.579 0 0\n0.579 2.45 1 0\n2.45 3.893 1 1\n";
  const auto once = parse_icbhi_annotations(text);
  const std::string normalized = serialize_icbhi_annotations(once);
  const auto twice = parse_icbhi_annotations(normalized);
  EXPECT_EQ(serialize_icbhi_annotations(twice), normalized);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_DOUBLE_EQ(once[i].start_s, twice[i].start_s);
    EXPECT_DOUBLE_EQ(once[i].end_s, twice[i].end_s);
  }
}

TEST(SprsoundLabels, ExhaustiveSevenCaseTable) {
  EXPECT_EQ(map_sprsound_label("Normal"), CycleLabel::kNormal);
  EXPECT_EQ(map_sprsound_label("Fine Crackle"), CycleLabel::kCrackle);
  EXPECT_EQ(map_sprsound_label("Coarse Crackle"), CycleLabel::kCrackle);
  EXPECT_EQ(map_sprsound_label("Wheeze"), CycleLabel::kWheeze);
  EXPECT_EQ(map_sprsound_label("Stridor"), CycleLabel::kWheeze);
  EXPECT_EQ(map_sprsound_label("Rhonchi"), CycleLabel::kWheeze);
  EXPECT_EQ(map_sprsound_label("Wheeze+Crackle"), CycleLabel::kBoth);
}

TEST(SprsoundLabels, SurjectiveOntoFourClassesAndErrorsListAccepted) {
  std::set<CycleLabel> reached;
  for (const char* raw : {"Normal", "Fine Crackle", "Coarse Crackle", "Wheeze",
                          "Stridor", "Rhonchi", "Wheeze+Crackle"}) {
    reached.insert(map_sprsound_label(raw));
  }
  EXPECT_EQ(reached.size(), 4u);
  try {
    map_sprsound_label("Squeak");
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("Stridor"), std::string::npos);
  }
}

TEST(ExtractCycle, EightSecondSliceAtTargetRateIsIdentity) {
  const double sr = 48000.0;
  std::vector<double> signal(10 * 48000);
  Rng rng(3);
  for (double& s : signal) s = rng.uniform(-1.0, 1.0);
  CycleAnnotation ann{1.0, 9.0, false, false};
  std::vector<double> out = extract_cycle(signal, sr, ann, 8.0, sr);
  ASSERT_EQ(out.size(), 384000u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    ASSERT_DOUBLE_EQ(out[i], signal[48000 + i]);
  }
}

TEST(ExtractCycle, ShortCycleIsTiledCyclically) {
  const double sr = 48000.0;
  std::vector<double> signal(3 * 48000);
  Rng rng(5);
  for (double& s : signal) s = rng.uniform(-1.0, 1.0);
  CycleAnnotation ann{0.5, 2.5, false, false};
  std::vector<double> out = extract_cycle(signal, sr, ann, 8.0, sr);
  ASSERT_EQ(out.size(), 384000u);
  const std::size_t period = 96000;
  for (std::size_t i = 0; i < out.size(); ++i) {
    ASSERT_DOUBLE_EQ(out[i], out[i % period]);
  }
  for (std::size_t i = 0; i < period; ++i) {
    ASSERT_DOUBLE_EQ(out[i], signal[24000 + i]);
  }
}

// Resampling oracle: a pure sine evaluated densely at the output instants is
// the ground truth; linear interpolation must stay close in value and within
// 1% in mean-square energy.
TEST(ExtractCycle, ResamplingMatchesDenseSineReference) {
  const double sr_in = 24000.0, sr_out = 48000.0, freq = 440.0;
  const std::size_t n_in = 24000;
  std::vector<double> signal(n_in);
  for (std::size_t i = 0; i < n_in; ++i) {
    signal[i] = 0.5 * std::sin(2.0 * M_PI * freq * i / sr_in);
  }
  CycleAnnotation ann{0.0, 1.0, false, false};
  std::vector<double> out = extract_cycle(signal, sr_in, ann, 8.0, sr_out);
  ASSERT_EQ(out.size(), 384000u);

  double err = 0.0, out_energy = 0.0, in_energy = 0.0;
  for (std::size_t j = 0; j < 48000; ++j) {
    const double ref = 0.5 * std::sin(2.0 * M_PI * freq * j / sr_out);
    // The final sample clamps at the right edge; exclude it from the dense
    // pointwise comparison.
    if (j + 1 < 48000) err = std::max(err, std::fabs(out[j] - ref));
    out_energy += out[j] * out[j];
  }
  for (double s : signal) in_energy += s * s;
  const double out_ms = out_energy / 48000.0;
  const double in_ms = in_energy / n_in;
  EXPECT_LT(std::fabs(out_ms - in_ms) / in_ms, 0.01);
  EXPECT_LT(err, 2e-3);
}

TEST(ExtractCycle, LongCycleIsCenterTruncated) {
  std::vector<double> signal(12 * 1000);
  for (std::size_t i = 0; i < signal.size(); ++i) {
    signal[i] = static_cast<double>(i);
  }
  CycleAnnotation ann{0.0, 12.0, false, false};
  std::vector<double> out = extract_cycle(signal, 1000.0, ann, 8.0, 1000.0);
  ASSERT_EQ(out.size(), 8000u);
  EXPECT_DOUBLE_EQ(out[0], 2000.0);  // (12000 - 8000) / 2
  EXPECT_DOUBLE_EQ(out.back(), 9999.0);
}

TEST(ExtractCycle, WindowErrors) {
  std::vector<double> signal(1000, 0.0);
  EXPECT_THROW(
      extract_cycle(signal, 1000.0, CycleAnnotation{0.5, 1.5, false, false},
                    8.0, 1000.0),
      std::invalid_argument);
  EXPECT_THROW(
      extract_cycle(signal, 1000.0, CycleAnnotation{0.5, 0.5, false, false},
                    8.0, 1000.0),
      std::invalid_argument);
}

TEST(WavIo, RoundTripsPcm16) {
  rsdebias::test::TempDir tmp("wav");
  std::vector<double> samples(4000);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = 0.8 * std::sin(2.0 * M_PI * 220.0 * i / 4000.0);
  }
  const auto path = tmp.path() / "tone.wav";
  write_wav_pcm16(path, samples, 4000);
  WavData wav = read_wav(path);
  EXPECT_DOUBLE_EQ(wav.sample_rate, 4000.0);
  ASSERT_EQ(wav.samples.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ASSERT_NEAR(wav.samples[i], samples[i], 1.5 / 32768.0);
  }
}

// phi-coefficient oracle: at rho = 0.5 the confounded attribute and the
// abnormality indicator are independent.
TEST(GenerateSynthetic, RhoHalfYieldsNearZeroPhi) {
  SynthConfig cfg;
  cfg.n_train = 20000;
  cfg.n_ood = 10;
  cfg.rho_train = 0.5;
  cfg.seed = 42;
  SyntheticDataset data = generate_synthetic(cfg);
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (const LabeledCycle& ex : data.train) {
    const bool abnormal = ex.label != CycleLabel::kNormal;
    const bool a1 = ex.metadata.device.kind == DeviceKind::kAkgC417L;
    if (a1 && abnormal) ++n11;
    else if (a1) ++n10;
    else if (abnormal) ++n01;
    else ++n00;
  }
  const double phi = (n11 * n00 - n10 * n01) /
                     std::sqrt((n11 + n10) * (n01 + n00) * (n11 + n01) *
                               (n10 + n00));
  EXPECT_LT(std::fabs(phi), 0.02);
}

// Binomial confidence oracle for the conditional attribute frequency.
TEST(GenerateSynthetic, RhoPointNineConditionalFrequency) {
  SynthConfig cfg;
  cfg.n_train = 20000;
  cfg.n_ood = 10;
  cfg.rho_train = 0.9;
  cfg.seed = 7;
  SyntheticDataset data = generate_synthetic(cfg);
  double abnormal = 0, a1_and_abnormal = 0;
  for (const LabeledCycle& ex : data.train) {
    if (ex.label == CycleLabel::kNormal) continue;
    ++abnormal;
    if (ex.metadata.device.kind == DeviceKind::kAkgC417L) ++a1_and_abnormal;
  }
  const double p_hat = a1_and_abnormal / abnormal;
  EXPECT_GE(p_hat, 0.885);
  EXPECT_LE(p_hat, 0.915);
}

TEST(GenerateSynthetic, DeterministicSplitsDisjointPatientsUnseenDevice) {
  SynthConfig cfg;
  cfg.n_train = 500;
  cfg.n_ood = 300;
  cfg.seed = 11;
  SyntheticDataset a = generate_synthetic(cfg);
  SyntheticDataset b = generate_synthetic(cfg);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].signal, b.train[i].signal);
    EXPECT_EQ(a.train[i].label, b.train[i].label);
    EXPECT_EQ(a.train[i].patient_id, b.train[i].patient_id);
  }

  std::set<std::string> train_patients, ood_patients;
  std::set<DeviceKind> train_devices;
  for (const auto& ex : a.train) {
    train_patients.insert(ex.patient_id);
    train_devices.insert(ex.metadata.device.kind);
    EXPECT_EQ(ex.signal.size(), cfg.feature_dim);
  }
  for (const auto& ex : a.ood) {
    ood_patients.insert(ex.patient_id);
    EXPECT_EQ(ex.signal.size(), cfg.feature_dim);
  }
  for (const std::string& p : ood_patients) {
    EXPECT_EQ(train_patients.count(p), 0u);
  }
  // The OOD a1 device value never occurs in train.
  EXPECT_EQ(train_devices.count(DeviceKind::kYuntingII), 0u);
  bool ood_has_unseen = false;
  for (const auto& ex : a.ood) {
    ood_has_unseen |= ex.metadata.device.kind == DeviceKind::kYuntingII;
  }
  EXPECT_TRUE(ood_has_unseen);
}

TEST(GenerateSynthetic, RejectsInvalidConfigs) {
  SynthConfig cfg;
  cfg.n_classes = 3;
  EXPECT_THROW(generate_synthetic(cfg), std::runtime_error);
  cfg = SynthConfig{};
  cfg.class_ratios = {0.5, 0.5, 0.1, 0.1};
  EXPECT_THROW(generate_synthetic(cfg), std::runtime_error);
  cfg = SynthConfig{};
  cfg.confound_attr = Attribute::kSex;
  cfg.ood_unseen_attr_value = true;
  EXPECT_THROW(generate_synthetic(cfg), std::runtime_error);
}

TEST(DatasetDir, WriteLoadRoundTripAndChecksums) {
  SynthConfig cfg;
  cfg.n_train = 40;
  cfg.n_ood = 20;
  cfg.seed = 9;
  SyntheticDataset data = generate_synthetic(cfg);
  rsdebias::test::TempDir tmp("dataset");
  write_dataset_dir(tmp.path(), data, nlohmann::json{{"seed", 9}});
  DatasetDir loaded = load_dataset_dir(tmp.path());
  ASSERT_EQ(loaded.train.size(), data.train.size());
  ASSERT_EQ(loaded.ood.size(), data.ood.size());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    ASSERT_EQ(loaded.train[i].signal.size(), data.train[i].signal.size());
    for (std::size_t j = 0; j < data.train[i].signal.size(); ++j) {
      ASSERT_DOUBLE_EQ(loaded.train[i].signal[j], data.train[i].signal[j]);
    }
    EXPECT_EQ(loaded.train[i].label, data.train[i].label);
    EXPECT_EQ(loaded.train[i].patient_id, data.train[i].patient_id);
    EXPECT_EQ(loaded.train[i].metadata.device, data.train[i].metadata.device);
  }

  // Corrupting a split file must fail checksum verification.
  write_text_file(tmp.path() / "train" / "labels.tsv", "normal\n");
  EXPECT_THROW(load_dataset_dir(tmp.path()), std::runtime_error);
}

}  // namespace
}  // namespace rsdebias
