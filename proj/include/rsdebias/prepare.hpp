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

#ifndef RSDEBIAS_PREPARE_HPP_
#define RSDEBIAS_PREPARE_HPP_

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdebias/dataio.hpp"
#include "rsdebias/manifest.hpp"

namespace rsdebias {

// Corpus preprocessing: extract annotated respiratory cycles, standardize
// them to a fixed duration and rate, map labels to the 4-class scheme, and
// write a processed dataset directory:
//   cycles/{stem}_{k}.f32   float32 little-endian standardized cycle
//   index.tsv               one row per cycle (file, label, metadata, window)
//   manifest.json           counts, config echo, checksums

struct PrepareConfig {
  double duration_s = 8.0;
  double sample_rate_out = 48000.0;
};

struct PrepareSummary {
  std::array<std::int64_t, 4> class_counts = {};
  std::int64_t n_recordings = 0;
  std::int64_t n_cycles = 0;

  std::string table() const {
    const std::int64_t total =
        class_counts[0] + class_counts[1] + class_counts[2] + class_counts[3];
    std::string out = "label\tcount\tratio\n";
    for (std::size_t c = 0; c < 4; ++c) {
      const double pct =
          total ? 100.0 * static_cast<double>(class_counts[c]) /
                      static_cast<double>(total)
                : 0.0;
      out += std::string(label_name(static_cast<CycleLabel>(c))) + "\t" +
             std::to_string(class_counts[c]) + "\t" + format_round2(pct) + "\n";
    }
    return out;
  }
};

namespace detail {

inline void write_f32(const std::filesystem::path& path,
                      std::span<const double> samples) {
  std::string bytes;
  bytes.reserve(samples.size() * 4);
  for (double s : samples) {
    const float f = static_cast<float>(s);
    std::uint32_t raw;
    std::memcpy(&raw, &f, 4);
    for (int b = 0; b < 4; ++b) {
      bytes.push_back(static_cast<char>((raw >> (8 * b)) & 0xff));
    }
  }
  write_text_file(path, bytes);
}

inline std::vector<double> read_f32(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t raw = 0;
    for (int b = 0; b < 4; ++b) {
      raw |= static_cast<std::uint32_t>(
                 static_cast<std::uint8_t>(bytes[4 * i + b]))
             << (8 * b);
    }
    float f;
    std::memcpy(&f, &raw, 4);
    out[i] = f;
  }
  return out;
}

inline std::vector<std::filesystem::path> sorted_files_with_extension(
    const std::filesystem::path& dir, const std::string& ext) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct PreparedCycle {
  std::string file;
  CycleAnnotation ann;
  CycleLabel label;
  MetadataRecord metadata;
  std::string patient_id;
};

inline PrepareSummary write_prepared(
    const std::filesystem::path& out_dir, const std::string& corpus,
    const PrepareConfig& cfg, const std::vector<PreparedCycle>& cycles,
    std::int64_t n_recordings) {
  PrepareSummary summary;
  summary.n_recordings = n_recordings;
  summary.n_cycles = static_cast<std::int64_t>(cycles.size());
  std::string index =
      "file\tlabel\tpatient_id\tage_group\tsex\tlocation\tdevice\tstart_s\tend_"
      "s\n";
  for (const PreparedCycle& c : cycles) {
    ++summary.class_counts[static_cast<std::size_t>(c.label)];
    index += c.file + "\t" + label_name(c.label) + "\t" + c.patient_id + "\t" +
             age_group_name(c.metadata.age_group) + "\t" +
             sex_name(c.metadata.sex) + "\t" +
             location_name(c.metadata.location) + "\t" +
             device_name(c.metadata.device) + "\t" +
             format_double(c.ann.start_s) + "\t" + format_double(c.ann.end_s) +
             "\n";
  }
  write_text_file(out_dir / "index.tsv", index);

  nlohmann::json manifest;
  manifest["format"] = "rsdebias.prepared";
  manifest["version"] = 1;
  manifest["corpus"] = corpus;
  manifest["tool_version"] = kVersion;
  manifest["duration_s"] = cfg.duration_s;
  manifest["sample_rate_out"] = cfg.sample_rate_out;
  manifest["n_recordings"] = summary.n_recordings;
  manifest["n_cycles"] = summary.n_cycles;
  nlohmann::json counts;
  for (std::size_t c = 0; c < 4; ++c) {
    counts[label_name(static_cast<CycleLabel>(c))] = summary.class_counts[c];
  }
  manifest["class_counts"] = counts;
  manifest["checksums"] = {{"index.tsv", file_checksum(out_dir / "index.tsv")}};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace detail

// ICBHI layout: {stem}.wav + {stem}.txt (4-column annotations) per recording
// plus an optional demographics.txt with "{patient} {age} {sex} {bmi}
// {weight} {height}" rows.
inline PrepareSummary prepare_icbhi(const std::filesystem::path& in_dir,
                                    const std::filesystem::path& out_dir,
                                    const PrepareConfig& cfg = {}) {
  if (!std::filesystem::is_directory(in_dir)) {
    throw std::runtime_error("input directory does not exist: " +
                             in_dir.string());
  }
  const auto wavs = detail::sorted_files_with_extension(in_dir, ".wav");
  if (wavs.empty()) {
    throw std::runtime_error("no .wav recordings under " + in_dir.string());
  }
  std::vector<std::string> missing;
  for (const auto& wav : wavs) {
    std::filesystem::path ann = wav;
    ann.replace_extension(".txt");
    if (!std::filesystem::exists(ann)) missing.push_back(ann.string());
  }
  if (!missing.empty()) {
    std::string msg = "missing annotation files:";
    for (const std::string& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  std::map<std::string, std::string> demographics;
  const std::filesystem::path demo_path = in_dir / "demographics.txt";
  if (std::filesystem::exists(demo_path)) {
    for (const std::string& line : split(read_text_file(demo_path), '\n')) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const std::vector<std::string> f = split_ws(t);
      if (!f.empty()) demographics[f[0]] = t;
    }
  }

  std::filesystem::create_directories(out_dir / "cycles");
  std::vector<detail::PreparedCycle> cycles;
  for (const auto& wav_path : wavs) {
    const std::string stem = wav_path.stem().string();
    std::filesystem::path ann_path = wav_path;
    ann_path.replace_extension(".txt");
    const std::string patient = split(stem, '_').empty() ? stem
                                                         : split(stem, '_')[0];
    auto demo = demographics.find(patient);
    IcbhiRecord rec = parse_icbhi_record(
        read_text_file(ann_path), stem,
        demo == demographics.end() ? "" : demo->second);
    const WavData wav = read_wav(wav_path);
    for (std::size_t k = 0; k < rec.annotations.size(); ++k) {
      const CycleAnnotation& ann = rec.annotations[k];
      const std::vector<double> cycle = extract_cycle(
          wav.samples, wav.sample_rate, ann, cfg.duration_s,
          cfg.sample_rate_out);
      detail::PreparedCycle pc;
      pc.file = "cycles/" + stem + "_" + std::to_string(k) + ".f32";
      detail::write_f32(out_dir / pc.file, cycle);
      pc.ann = ann;
      pc.label = ann.label();
      pc.metadata = rec.metadata;
      pc.patient_id = rec.patient_id;
      cycles.push_back(std::move(pc));
    }
  }
  return detail::write_prepared(out_dir, "icbhi", cfg, cycles,
                                static_cast<std::int64_t>(wavs.size()));
}

// SPRSound-style layout: {stem}.wav + {stem}.json where the stem encodes
// "{patient}_{age}_{sex}_{location}_{index}" (location in {al,ar,pl,pr}) and
// the JSON document lists events with raw 7-class labels.
inline PrepareSummary prepare_sprsound(const std::filesystem::path& in_dir,
                                       const std::filesystem::path& out_dir,
                                       const PrepareConfig& cfg = {}) {
  if (!std::filesystem::is_directory(in_dir)) {
    throw std::runtime_error("input directory does not exist: " +
                             in_dir.string());
  }
  const auto wavs = detail::sorted_files_with_extension(in_dir, ".wav");
  if (wavs.empty()) {
    throw std::runtime_error("no .wav recordings under " + in_dir.string());
  }
  std::vector<std::string> missing;
  for (const auto& wav : wavs) {
    std::filesystem::path ann = wav;
    ann.replace_extension(".json");
    if (!std::filesystem::exists(ann)) missing.push_back(ann.string());
  }
  if (!missing.empty()) {
    std::string msg = "missing annotation files:";
    for (const std::string& m : missing) msg += " " + m;
    throw std::runtime_error(msg);
  }

  std::filesystem::create_directories(out_dir / "cycles");
  std::vector<detail::PreparedCycle> cycles;
  for (const auto& wav_path : wavs) {
    const std::string stem = wav_path.stem().string();
    const std::vector<std::string> parts = split(stem, '_');
    if (parts.size() != 5) {
      throw std::runtime_error(
          "SPRSound stem '" + stem +
          "': expected {patient}_{age}_{sex}_{location}_{index}");
    }
    MetadataRecord meta;
    const double age = parse_double(parts[1], "age");
    meta.age_group = age < kAdultAgeThresholdYears ? AgeGroup::kPediatric
                                                   : AgeGroup::kAdult;
    const std::string sex = to_lower_ascii(parts[2]);
    meta.sex = sex == "m" ? Sex::kMale
                          : (sex == "f" ? Sex::kFemale : Sex::kUnknown);
    const std::string loc = to_lower_ascii(parts[3]);
    if (loc == "al") meta.location = Location::kLeftAnterior;
    else if (loc == "ar") meta.location = Location::kRightAnterior;
    else if (loc == "pl") meta.location = Location::kLeftPosterior;
    else if (loc == "pr") meta.location = Location::kRightPosterior;
    else meta.location = Location::kUnknown;
    meta.device = {DeviceKind::kYuntingII, ""};

    std::filesystem::path ann_path = wav_path;
    ann_path.replace_extension(".json");
    const nlohmann::json doc =
        nlohmann::json::parse(read_text_file(ann_path));
    const WavData wav = read_wav(wav_path);
    std::size_t k = 0;
    for (const nlohmann::json& event : doc.at("event_annotation")) {
      CycleAnnotation ann;
      ann.start_s = event.at("start_s").get<double>();
      ann.end_s = event.at("end_s").get<double>();
      const CycleLabel label =
          map_sprsound_label(event.at("label").get<std::string>());
      ann.has_crackle =
          label == CycleLabel::kCrackle || label == CycleLabel::kBoth;
      ann.has_wheeze =
          label == CycleLabel::kWheeze || label == CycleLabel::kBoth;
      const std::vector<double> cycle = extract_cycle(
          wav.samples, wav.sample_rate, ann, cfg.duration_s,
          cfg.sample_rate_out);
      detail::PreparedCycle pc;
      pc.file = "cycles/" + stem + "_" + std::to_string(k) + ".f32";
      detail::write_f32(out_dir / pc.file, cycle);
      pc.ann = ann;
      pc.label = label;
      pc.metadata = meta;
      pc.patient_id = parts[0];
      cycles.push_back(std::move(pc));
      ++k;
    }
  }
  return detail::write_prepared(out_dir, "sprsound", cfg, cycles,
                                static_cast<std::int64_t>(wavs.size()));
}

}  // namespace rsdebias

#endif  // RSDEBIAS_PREPARE_HPP_
