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

#ifndef RSDEBIAS_DATAIO_HPP_
#define RSDEBIAS_DATAIO_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdebias/metadata.hpp"
#include "rsdebias/rng.hpp"
#include "rsdebias/util.hpp"
#include "rsdebias/version.hpp"

namespace rsdebias {

// ---------------------------------------------------------------------------
// Labels and cycles
// ---------------------------------------------------------------------------

enum class CycleLabel { kNormal = 0, kCrackle = 1, kWheeze = 2, kBoth = 3 };
inline constexpr std::size_t kNumClasses = 4;

inline const char* label_name(CycleLabel l) {
  switch (l) {
    case CycleLabel::kNormal: return "normal";
    case CycleLabel::kCrackle: return "crackle";
    case CycleLabel::kWheeze: return "wheeze";
    case CycleLabel::kBoth: return "both";
  }
  return "?";
}

inline CycleLabel parse_label(std::string_view s) {
  if (s == "normal") return CycleLabel::kNormal;
  if (s == "crackle") return CycleLabel::kCrackle;
  if (s == "wheeze") return CycleLabel::kWheeze;
  if (s == "both") return CycleLabel::kBoth;
  throw std::runtime_error("unknown label '" + std::string(s) + "'");
}

struct CycleAnnotation {
  double start_s = 0.0;
  double end_s = 0.0;
  bool has_crackle = false;
  bool has_wheeze = false;

  CycleLabel label() const {
    if (has_crackle && has_wheeze) return CycleLabel::kBoth;
    if (has_crackle) return CycleLabel::kCrackle;
    if (has_wheeze) return CycleLabel::kWheeze;
    return CycleLabel::kNormal;
  }
};

enum class Split { kTrain, kValid };

// One standardized respiratory cycle: either a waveform (audio mode) or a
// feature vector (synthetic mode).
struct LabeledCycle {
  std::vector<double> signal;  // samples or features
  CycleLabel label = CycleLabel::kNormal;
  MetadataRecord metadata;
  Split source_split = Split::kTrain;
  std::string patient_id;
};

// ---------------------------------------------------------------------------
// ICBHI-format parsing
// ---------------------------------------------------------------------------
//
// Layout: per-recording waveform file plus a same-stem annotation text file
// with 4 whitespace-separated columns (start_s, end_s, crackle, wheeze), and
// an optional corpus-level demographics table with rows
//   "{patient} {age_years} {sex} {adult_bmi} {child_weight} {child_height}"
// where missing values are NA. Filename stems follow
//   "{patient}_{index}_{location}_{acquisition}_{device}".

struct IcbhiRecord {
  std::string patient_id;
  std::vector<CycleAnnotation> annotations;
  MetadataRecord metadata;
  std::vector<std::string> warnings;  // unknown codes mapped with a warning
};

inline std::vector<CycleAnnotation> parse_icbhi_annotations(
    const std::string& annotation_text) {
  std::vector<CycleAnnotation> out;
  std::size_t line_no = 0;
  for (const std::string& raw : split(annotation_text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_ws(line);
    if (fields.size() != 4) {
      throw std::runtime_error("annotation line " + std::to_string(line_no) +
                               ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    }
    CycleAnnotation ann;
    ann.start_s = parse_double(fields[0], "cycle start");
    ann.end_s = parse_double(fields[1], "cycle end");
    auto flag = [&](const std::string& f, const char* what) {
      if (f == "0") return false;
      if (f == "1") return true;
      throw std::runtime_error("annotation line " + std::to_string(line_no) +
                               ": " + what + " flag must be 0 or 1, got '" + f +
                               "'");
    };
    ann.has_crackle = flag(fields[2], "crackle");
    ann.has_wheeze = flag(fields[3], "wheeze");
    if (!(ann.end_s > ann.start_s) || ann.start_s < 0.0) {
      throw std::runtime_error("annotation line " + std::to_string(line_no) +
                               ": invalid window [" + fields[0] + ", " +
                               fields[1] + ")");
    }
    out.push_back(ann);
  }
  return out;
}

inline std::string serialize_icbhi_annotations(
    std::span<const CycleAnnotation> anns) {
  std::string out;
  for (const CycleAnnotation& a : anns) {
    out += format_double(a.start_s);
    out += ' ';
    out += format_double(a.end_s);
    out += ' ';
    out += a.has_crackle ? '1' : '0';
    out += ' ';
    out += a.has_wheeze ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline Location icbhi_location_from_code(const std::string& code,
                                         std::vector<std::string>* warnings) {
  const std::string c = to_lower_ascii(code);
  if (c == "tc") return Location::kTrachea;
  if (c == "al") return Location::kLeftAnterior;
  if (c == "ar") return Location::kRightAnterior;
  if (c == "pl") return Location::kLeftPosterior;
  if (c == "pr") return Location::kRightPosterior;
  if (c == "ll") return Location::kLeftLateral;
  if (c == "lr") return Location::kRightLateral;
  if (warnings) warnings->push_back("unknown location code '" + code + "'");
  return Location::kUnknown;
}

inline Device icbhi_device_from_code(const std::string& code,
                                     std::vector<std::string>* warnings) {
  const std::string c = to_lower_ascii(code);
  if (c == "meditron") return {DeviceKind::kMeditron, ""};
  if (c == "littc2se") return {DeviceKind::kLittC2SE, ""};
  if (c == "litt3200") return {DeviceKind::kLitt3200, ""};
  if (c == "akgc417l") return {DeviceKind::kAkgC417L, ""};
  if (warnings) warnings->push_back("unknown device code '" + code + "'");
  return Device::other(code);
}

inline constexpr double kAdultAgeThresholdYears = 18.0;

// Applies a demographics row ("patient age sex bmi weight height", NA for
// missing) to a record. Numeric age is binarized at 18 years.
inline void apply_icbhi_demographics(const std::string& line,
                                     MetadataRecord* meta,
                                     std::vector<std::string>* warnings) {
  const std::vector<std::string> f = split_ws(line);
  if (f.size() != 6) {
    throw std::runtime_error(
        "demographics row: expected 6 fields "
        "(patient age sex bmi weight height), got " +
        std::to_string(f.size()));
  }
  const bool age_known = f[1] != "NA";
  if (age_known) {
    const double age = parse_double(f[1], "age");
    meta->age_group = age < kAdultAgeThresholdYears ? AgeGroup::kPediatric
                                                    : AgeGroup::kAdult;
  }
  if (f[2] == "M") {
    meta->sex = Sex::kMale;
  } else if (f[2] == "F") {
    meta->sex = Sex::kFemale;
  } else if (f[2] != "NA") {
    if (warnings) warnings->push_back("unknown sex code '" + f[2] + "'");
  }
  if (f[3] != "NA") {
    if (meta->age_group == AgeGroup::kAdult) {
      meta->bmi = parse_double(f[3], "bmi");
    } else if (warnings) {
      warnings->push_back("dropping BMI on non-adult record");
    }
  }
  if (f[4] != "NA") {
    if (meta->age_group == AgeGroup::kPediatric) {
      meta->weight_kg = parse_double(f[4], "weight");
    } else if (warnings) {
      warnings->push_back("dropping weight on non-pediatric record");
    }
  }
  if (f[5] != "NA") {
    if (meta->age_group == AgeGroup::kPediatric) {
      meta->height_cm = parse_double(f[5], "height");
    } else if (warnings) {
      warnings->push_back("dropping height on non-pediatric record");
    }
  }
}

inline IcbhiRecord parse_icbhi_record(const std::string& annotation_text,
                                      const std::string& filename_stem,
                                      const std::string& demographics_line = "") {
  IcbhiRecord rec;
  rec.annotations = parse_icbhi_annotations(annotation_text);
  const std::vector<std::string> parts = split(filename_stem, '_');
  if (parts.size() != 5) {
    throw std::runtime_error(
        "filename stem '" + filename_stem +
        "': expected {patient}_{index}_{location}_{acquisition}_{device}");
  }
  rec.patient_id = parts[0];
  rec.metadata.location = icbhi_location_from_code(parts[2], &rec.warnings);
  rec.metadata.device = icbhi_device_from_code(parts[4], &rec.warnings);
  if (!trim(demographics_line).empty()) {
    apply_icbhi_demographics(demographics_line, &rec.metadata, &rec.warnings);
  }
  rec.metadata.validate();
  return rec;
}

// ---------------------------------------------------------------------------
// SPRSound-format label mapping
// ---------------------------------------------------------------------------

// 7-class raw labels to the 4-class scheme: crackle variants merge into
// crackle; Stridor and Rhonchi merge into wheeze.
inline CycleLabel map_sprsound_label(const std::string& raw) {
  const std::string s = to_lower_ascii(trim(raw));
  if (s == "normal") return CycleLabel::kNormal;
  if (s == "fine crackle" || s == "coarse crackle") return CycleLabel::kCrackle;
  if (s == "wheeze" || s == "stridor" || s == "rhonchi") {
    return CycleLabel::kWheeze;
  }
  if (s == "wheeze+crackle") return CycleLabel::kBoth;
  throw std::runtime_error(
      "unknown SPRSound label '" + raw +
      "'; accepted: Normal, Fine Crackle, Coarse Crackle, Wheeze, Stridor, "
      "Rhonchi, Wheeze+Crackle");
}

// ---------------------------------------------------------------------------
// Cycle standardization
// ---------------------------------------------------------------------------

// Linear-interpolation resampling of a whole buffer from sr_in to sr_out.
inline std::vector<double> resample_linear(std::span<const double> x,
                                           double sr_in, double sr_out) {
  if (sr_in <= 0.0 || sr_out <= 0.0) {
    throw std::invalid_argument("sample rates must be positive");
  }
  if (x.empty()) throw std::invalid_argument("cannot resample empty signal");
  const std::size_t m = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * sr_out / sr_in));
  std::vector<double> out(std::max<std::size_t>(m, 1));
  const double step = sr_in / sr_out;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double t = static_cast<double>(j) * step;
    const std::size_t k = std::min(static_cast<std::size_t>(t), x.size() - 1);
    const std::size_t k1 = std::min(k + 1, x.size() - 1);
    const double frac = t - static_cast<double>(k);
    out[j] = x[k] + frac * (x[k1] - x[k]);
  }
  return out;
}

// Slices the annotated window, resamples it to sr_out, then standardizes the
// length: shorter cycles are tiled cyclically, longer ones center-truncated.
inline std::vector<double> extract_cycle(std::span<const double> signal,
                                         double sr_in,
                                         const CycleAnnotation& ann,
                                         double duration_s, double sr_out) {
  if (sr_in <= 0.0 || sr_out <= 0.0) {
    throw std::invalid_argument("sample rates must be positive");
  }
  if (!(ann.end_s > ann.start_s) || ann.start_s < 0.0) {
    throw std::invalid_argument("zero-length or negative cycle window");
  }
  const std::size_t i0 =
      static_cast<std::size_t>(std::llround(ann.start_s * sr_in));
  const std::size_t i1 =
      static_cast<std::size_t>(std::llround(ann.end_s * sr_in));
  if (i1 > signal.size() || i0 >= i1) {
    throw std::invalid_argument("cycle window outside the signal bounds");
  }
  const std::vector<double> resampled =
      resample_linear(signal.subspan(i0, i1 - i0), sr_in, sr_out);
  const std::size_t target =
      static_cast<std::size_t>(std::llround(duration_s * sr_out));
  if (target == 0) throw std::invalid_argument("target duration too short");
  std::vector<double> out(target);
  if (resampled.size() >= target) {
    const std::size_t off = (resampled.size() - target) / 2;
    for (std::size_t j = 0; j < target; ++j) out[j] = resampled[off + j];
  } else {
    for (std::size_t j = 0; j < target; ++j) {
      out[j] = resampled[j % resampled.size()];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WAV I/O (PCM16 / float32, mono)
// ---------------------------------------------------------------------------

struct WavData {
  std::vector<double> samples;
  double sample_rate = 0.0;
};

inline WavData read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  auto u16 = [&](std::size_t off) -> std::uint32_t {
    return static_cast<std::uint8_t>(bytes[off]) |
           (static_cast<std::uint8_t>(bytes[off + 1]) << 8);
  };
  auto u32 = [&](std::size_t off) -> std::uint32_t {
    return u16(off) | (u16(off + 2) << 16);
  };
  if (bytes.size() < 44 || bytes.substr(0, 4) != "RIFF" ||
      bytes.substr(8, 4) != "WAVE") {
    throw std::runtime_error(path.string() + ": not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t len = u32(pos + 4);
    if (id == "fmt ") {
      format = static_cast<std::uint16_t>(u16(pos + 8));
      channels = static_cast<std::uint16_t>(u16(pos + 10));
      rate = u32(pos + 12);
      bits = static_cast<std::uint16_t>(u16(pos + 22));
    } else if (id == "data") {
      data_off = pos + 8;
      data_len = len;
    }
    pos += 8 + len + (len % 2);
  }
  if (data_off == 0 || rate == 0) {
    throw std::runtime_error(path.string() + ": missing fmt/data chunk");
  }
  if (channels != 1) {
    throw std::runtime_error(path.string() + ": only mono WAV is supported");
  }
  WavData wav;
  wav.sample_rate = rate;
  if (format == 1 && bits == 16) {
    const std::size_t n = data_len / 2;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t v = static_cast<std::int16_t>(u16(data_off + 2 * i));
      wav.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data_len / 4;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t raw = u32(data_off + 4 * i);
      float f;
      std::memcpy(&f, &raw, 4);
      wav.samples[i] = f;
    }
  } else {
    throw std::runtime_error(path.string() +
                             ": unsupported WAV encoding (want PCM16 or "
                             "float32 mono)");
  }
  return wav;
}

inline void write_wav_pcm16(const std::filesystem::path& path,
                            std::span<const double> samples,
                            std::uint32_t sample_rate) {
  std::string bytes;
  auto put_u16 = [&](std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xff));
    bytes.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  auto put_u32 = [&](std::uint32_t v) {
    put_u16(static_cast<std::uint16_t>(v & 0xffff));
    put_u16(static_cast<std::uint16_t>(v >> 16));
  };
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  bytes += "RIFF";
  put_u32(36 + data_len);
  bytes += "WAVEfmt ";
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(sample_rate);
  put_u32(sample_rate * 2);
  put_u16(2);
  put_u16(16);
  bytes += "data";
  put_u32(data_len);
  for (double s : samples) {
    double clamped = std::max(-1.0, std::min(1.0, s));
    const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    put_u16(static_cast<std::uint16_t>(v));
  }
  write_text_file(path, bytes);
}

// ---------------------------------------------------------------------------
// Synthetic confounded dataset generator
// ---------------------------------------------------------------------------
//
// Desk-scale surrogate for a cross-site distribution shift: features carry
// the class signal; one metadata attribute is spuriously correlated with
// abnormality in the training split and decorrelated (or mapped to a value
// unseen in training) in the OOD split.

struct SynthConfig {
  std::size_t n_train = 2000;
  std::size_t n_ood = 1000;
  std::size_t n_classes = 4;
  std::size_t feature_dim = 32;
  Attribute confound_attr = Attribute::kDevice;
  double rho_train = 0.9;  // P[attr = a1 | abnormal] in train
  double rho_ood = 0.1;
  bool ood_unseen_attr_value = true;
  std::array<double, 4> class_ratios = {0.4981, 0.2933, 0.1210, 0.0876};
  double noise_sigma = 2.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_classes != 4) {
      throw std::runtime_error("n_classes is fixed at 4 for this task");
    }
    if (n_train == 0 || n_ood == 0) {
      throw std::runtime_error("split sizes must be positive");
    }
    if (feature_dim < 4) throw std::runtime_error("feature_dim must be >= 4");
    double sum = 0.0;
    for (double r : class_ratios) {
      if (r < 0.0) throw std::runtime_error("class ratios must be >= 0");
      sum += r;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw std::runtime_error("class_ratios must sum to 1");
    }
    if (rho_train < 0.0 || rho_train > 1.0 || rho_ood < 0.0 || rho_ood > 1.0) {
      throw std::runtime_error("rho values must lie in [0, 1]");
    }
    if (noise_sigma <= 0.0) throw std::runtime_error("noise_sigma must be > 0");
    if (confound_attr == Attribute::kAnthropometrics) {
      throw std::runtime_error("anthropometrics cannot be the confound");
    }
    if (ood_unseen_attr_value && (confound_attr == Attribute::kAge ||
                                  confound_attr == Attribute::kSex)) {
      throw std::runtime_error(
          "binary attributes have no unseen value; disable "
          "ood_unseen_attr_value");
    }
  }
};

struct SyntheticDataset {
  std::vector<LabeledCycle> train;
  std::vector<LabeledCycle> ood;
};

namespace detail {

// Class feature templates: normal/crackle/wheeze use disjoint blocks; the
// "both" class activates the crackle and wheeze blocks jointly.
inline std::vector<std::vector<double>> class_templates(std::size_t dim) {
  std::vector<std::vector<double>> mu(4, std::vector<double>(dim, 0.0));
  auto block = [&](std::size_t c, std::vector<double>& v) {
    const std::size_t b0 = c * dim / 4;
    const std::size_t b1 = (c + 1) * dim / 4;
    for (std::size_t j = b0; j < b1; ++j) v[j] = 1.0;
  };
  block(0, mu[0]);
  block(1, mu[1]);
  block(2, mu[2]);
  block(1, mu[3]);
  block(2, mu[3]);
  return mu;
}

// a1 is the value correlated with abnormality in train; a0 the alternative;
// an unseen value substitutes for a1 in the OOD split when requested.
inline void set_confound(MetadataRecord& m, Attribute attr, bool is_a1,
                         bool use_unseen) {
  switch (attr) {
    case Attribute::kAge:
      m.age_group = is_a1 ? AgeGroup::kPediatric : AgeGroup::kAdult;
      return;
    case Attribute::kSex:
      m.sex = is_a1 ? Sex::kFemale : Sex::kMale;
      return;
    case Attribute::kLocation:
      m.location = is_a1 ? (use_unseen ? Location::kRightLateral
                                       : Location::kLeftPosterior)
                         : Location::kTrachea;
      return;
    case Attribute::kDevice:
      m.device = is_a1 ? Device{use_unseen ? DeviceKind::kYuntingII
                                           : DeviceKind::kAkgC417L,
                                ""}
                       : Device{DeviceKind::kMeditron, ""};
      return;
    case Attribute::kAnthropometrics:
      throw std::runtime_error("anthropometrics cannot be the confound");
  }
}

}  // namespace detail

inline SyntheticDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto mu = detail::class_templates(cfg.feature_dim);
  SyntheticDataset out;

  auto make_split = [&](std::size_t n, double rho, bool use_unseen,
                        Split split_tag, const char* id_prefix,
                        std::string_view stream_tag) {
    Rng rng = derive_rng(cfg.seed, stream_tag);
    std::vector<LabeledCycle> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      LabeledCycle ex;
      ex.source_split = split_tag;
      ex.patient_id = std::string(id_prefix) + std::to_string(i);
      const std::size_t c = rng.categorical(
          std::span<const double>(cfg.class_ratios.data(), 4));
      ex.label = static_cast<CycleLabel>(c);
      const bool abnormal = ex.label != CycleLabel::kNormal;

      // Confounded attribute: P[a1 | abnormal] = rho, P[a1 | normal] = 1-rho.
      const bool is_a1 = abnormal ? rng.bernoulli(rho) : rng.bernoulli(1.0 - rho);

      // Remaining attributes are drawn independently of the label.
      if (cfg.confound_attr != Attribute::kAge) {
        ex.metadata.age_group =
            rng.bernoulli(0.5) ? AgeGroup::kAdult : AgeGroup::kPediatric;
      }
      if (cfg.confound_attr != Attribute::kSex) {
        ex.metadata.sex = rng.bernoulli(0.5) ? Sex::kMale : Sex::kFemale;
      }
      if (cfg.confound_attr != Attribute::kLocation) {
        ex.metadata.location = static_cast<Location>(rng.uniform_index(7));
      }
      if (cfg.confound_attr != Attribute::kDevice) {
        ex.metadata.device =
            Device{static_cast<DeviceKind>(rng.uniform_index(4)), ""};
      }
      detail::set_confound(ex.metadata, cfg.confound_attr, is_a1, use_unseen);

      ex.signal.resize(cfg.feature_dim);
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
        ex.signal[j] = mu[c][j] + cfg.noise_sigma * rng.gaussian();
      }
      rows.push_back(std::move(ex));
    }
    return rows;
  };

  out.train = make_split(cfg.n_train, cfg.rho_train, false, Split::kTrain,
                         "trainp", "synth.train");
  out.ood = make_split(cfg.n_ood, cfg.rho_ood, cfg.ood_unseen_attr_value,
                       Split::kValid, "oodp", "synth.ood");
  return out;
}

// ---------------------------------------------------------------------------
// Dataset directory serialization
// ---------------------------------------------------------------------------
//
// A dataset directory holds a manifest plus columnar per-split files:
//   manifest.json
//   {split}/features.tsv   one row of tab-separated values per example
//   {split}/labels.tsv     one label name per line
//   {split}/metadata.tsv   patient_id + metadata columns, "na" for absent

namespace detail {

inline std::string metadata_row(const LabeledCycle& ex) {
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("na");
  };
  std::string row = ex.patient_id;
  row += '\t';
  row += age_group_name(ex.metadata.age_group);
  row += '\t';
  row += sex_name(ex.metadata.sex);
  row += '\t';
  row += location_name(ex.metadata.location);
  row += '\t';
  row += device_name(ex.metadata.device);
  row += '\t';
  row += opt(ex.metadata.bmi);
  row += '\t';
  row += opt(ex.metadata.weight_kg);
  row += '\t';
  row += opt(ex.metadata.height_cm);
  return row;
}

inline void write_split(const std::filesystem::path& dir,
                        std::span<const LabeledCycle> rows) {
  std::string features, labels, metadata;
  metadata =
      "patient_id\tage_group\tsex\tlocation\tdevice\tbmi\tweight_kg\theight_"
      "cm\n";
  for (const LabeledCycle& ex : rows) {
    for (std::size_t j = 0; j < ex.signal.size(); ++j) {
      if (j) features += '\t';
      features += format_double(ex.signal[j]);
    }
    features += '\n';
    labels += label_name(ex.label);
    labels += '\n';
    metadata += metadata_row(ex);
    metadata += '\n';
  }
  write_text_file(dir / "features.tsv", features);
  write_text_file(dir / "labels.tsv", labels);
  write_text_file(dir / "metadata.tsv", metadata);
}

inline std::vector<LabeledCycle> read_split(const std::filesystem::path& dir,
                                            Split split_tag) {
  const std::vector<std::string> feat_lines =
      split(read_text_file(dir / "features.tsv"), '\n');
  const std::vector<std::string> label_lines =
      split(read_text_file(dir / "labels.tsv"), '\n');
  const std::vector<std::string> meta_lines =
      split(read_text_file(dir / "metadata.tsv"), '\n');
  std::vector<LabeledCycle> rows;
  for (std::size_t i = 0; i + 1 < feat_lines.size(); ++i) {
    if (trim(feat_lines[i]).empty()) continue;
    LabeledCycle ex;
    ex.source_split = split_tag;
    for (const std::string& v : split(feat_lines[i], '\t')) {
      ex.signal.push_back(parse_double(v, "feature"));
    }
    ex.label = parse_label(trim(label_lines.at(i)));
    const std::vector<std::string> m = split(meta_lines.at(i + 1), '\t');
    if (m.size() != 8) {
      throw std::runtime_error("metadata row " + std::to_string(i) +
                               ": expected 8 columns");
    }
    ex.patient_id = m[0];
    ex.metadata.age_group = parse_age_group(m[1]);
    ex.metadata.sex = parse_sex(m[2]);
    ex.metadata.location = parse_location(m[3]);
    ex.metadata.device = parse_device(m[4]);
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s == "na") return std::nullopt;
      return parse_double(s, "metadata value");
    };
    ex.metadata.bmi = opt(m[5]);
    ex.metadata.weight_kg = opt(m[6]);
    ex.metadata.height_cm = opt(m[7]);
    rows.push_back(std::move(ex));
  }
  return rows;
}

}  // namespace detail

inline void write_dataset_dir(const std::filesystem::path& dir,
                              const SyntheticDataset& data,
                              const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  detail::write_split(dir / "train", data.train);
  detail::write_split(dir / "ood", data.ood);
  nlohmann::json manifest;
  manifest["format"] = "rsdebias.dataset";
  manifest["version"] = 1;
  manifest["kind"] = "synthetic";
  manifest["tool_version"] = kVersion;
  manifest["config"] = config_echo;
  manifest["feature_dim"] =
      data.train.empty() ? 0 : data.train.front().signal.size();
  manifest["splits"] = {{"train", data.train.size()}, {"ood", data.ood.size()}};
  nlohmann::json checksums;
  for (const char* rel :
       {"train/features.tsv", "train/labels.tsv", "train/metadata.tsv",
        "ood/features.tsv", "ood/labels.tsv", "ood/metadata.tsv"}) {
    checksums[rel] = file_checksum(dir / rel);
  }
  manifest["checksums"] = checksums;
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct DatasetDir {
  std::vector<LabeledCycle> train;
  std::vector<LabeledCycle> ood;
  nlohmann::json manifest;
};

inline DatasetDir load_dataset_dir(const std::filesystem::path& dir) {
  DatasetDir out;
  out.manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  if (out.manifest.contains("checksums")) {
    for (const auto& [rel, hex] : out.manifest["checksums"].items()) {
      const std::string actual = file_checksum(dir / rel);
      if (actual != hex.get<std::string>()) {
        throw std::runtime_error("checksum mismatch for " + rel + " under " +
                                 dir.string());
      }
    }
  }
  out.train = detail::read_split(dir / "train", Split::kTrain);
  out.ood = detail::read_split(dir / "ood", Split::kValid);
  return out;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_DATAIO_HPP_
