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

#ifndef RSDEBIAS_METADATA_HPP_
#define RSDEBIAS_METADATA_HPP_

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rsdebias/keyed_doc.hpp"
#include "rsdebias/rng.hpp"
#include "rsdebias/util.hpp"

namespace rsdebias {

// ---------------------------------------------------------------------------
// Structured patient/recording metadata
// ---------------------------------------------------------------------------

enum class AgeGroup { kAdult, kPediatric, kUnknown };
enum class Sex { kMale, kFemale, kUnknown };
enum class Location {
  kTrachea,
  kLeftAnterior,
  kRightAnterior,
  kLeftPosterior,
  kRightPosterior,
  kLeftLateral,
  kRightLateral,
  kUnknown
};
enum class DeviceKind {
  kMeditron,
  kLittC2SE,
  kLitt3200,
  kAkgC417L,
  kYuntingII,
  kUnknown,
  kOther
};

struct Device {
  DeviceKind kind = DeviceKind::kUnknown;
  std::string other_name;  // only meaningful for kOther

  static Device other(std::string name) {
    Device d;
    d.kind = DeviceKind::kOther;
    d.other_name = std::move(name);
    return d;
  }
  bool operator==(const Device& rhs) const {
    return kind == rhs.kind && other_name == rhs.other_name;
  }
};

inline const char* age_group_name(AgeGroup a) {
  switch (a) {
    case AgeGroup::kAdult: return "adult";
    case AgeGroup::kPediatric: return "pediatric";
    case AgeGroup::kUnknown: return "unknown";
  }
  return "unknown";
}

inline AgeGroup parse_age_group(std::string_view s) {
  if (s == "adult") return AgeGroup::kAdult;
  if (s == "pediatric") return AgeGroup::kPediatric;
  if (s == "unknown") return AgeGroup::kUnknown;
  throw std::runtime_error("unknown age group '" + std::string(s) + "'");
}

inline const char* sex_name(Sex s) {
  switch (s) {
    case Sex::kMale: return "male";
    case Sex::kFemale: return "female";
    case Sex::kUnknown: return "unknown";
  }
  return "unknown";
}

inline Sex parse_sex(std::string_view s) {
  if (s == "male") return Sex::kMale;
  if (s == "female") return Sex::kFemale;
  if (s == "unknown") return Sex::kUnknown;
  throw std::runtime_error("unknown sex '" + std::string(s) + "'");
}

inline const char* location_name(Location l) {
  switch (l) {
    case Location::kTrachea: return "trachea";
    case Location::kLeftAnterior: return "left_anterior";
    case Location::kRightAnterior: return "right_anterior";
    case Location::kLeftPosterior: return "left_posterior";
    case Location::kRightPosterior: return "right_posterior";
    case Location::kLeftLateral: return "left_lateral";
    case Location::kRightLateral: return "right_lateral";
    case Location::kUnknown: return "unknown";
  }
  return "unknown";
}

inline Location parse_location(std::string_view s) {
  static const std::pair<const char*, Location> table[] = {
      {"trachea", Location::kTrachea},
      {"left_anterior", Location::kLeftAnterior},
      {"right_anterior", Location::kRightAnterior},
      {"left_posterior", Location::kLeftPosterior},
      {"right_posterior", Location::kRightPosterior},
      {"left_lateral", Location::kLeftLateral},
      {"right_lateral", Location::kRightLateral},
      {"unknown", Location::kUnknown}};
  for (const auto& [name, loc] : table) {
    if (s == name) return loc;
  }
  throw std::runtime_error("unknown location '" + std::string(s) + "'");
}

inline std::string device_name(const Device& d) {
  switch (d.kind) {
    case DeviceKind::kMeditron: return "meditron";
    case DeviceKind::kLittC2SE: return "littc2se";
    case DeviceKind::kLitt3200: return "litt3200";
    case DeviceKind::kAkgC417L: return "akgc417l";
    case DeviceKind::kYuntingII: return "yunting_ii";
    case DeviceKind::kUnknown: return "unknown";
    case DeviceKind::kOther: return "other:" + d.other_name;
  }
  return "unknown";
}

inline Device parse_device(std::string_view s) {
  if (s == "meditron") return {DeviceKind::kMeditron, ""};
  if (s == "littc2se") return {DeviceKind::kLittC2SE, ""};
  if (s == "litt3200") return {DeviceKind::kLitt3200, ""};
  if (s == "akgc417l") return {DeviceKind::kAkgC417L, ""};
  if (s == "yunting_ii") return {DeviceKind::kYuntingII, ""};
  if (s == "unknown") return {DeviceKind::kUnknown, ""};
  if (s.substr(0, 6) == "other:") return Device::other(std::string(s.substr(6)));
  throw std::runtime_error("unknown device '" + std::string(s) + "'");
}

// One patient/recording's structured attributes. BMI belongs to adults;
// weight/height belong to pediatric patients.
struct MetadataRecord {
  AgeGroup age_group = AgeGroup::kUnknown;
  Sex sex = Sex::kUnknown;
  Location location = Location::kUnknown;
  Device device;
  std::optional<double> bmi;
  std::optional<double> weight_kg;
  std::optional<double> height_cm;

  void validate() const {
    if (bmi && age_group != AgeGroup::kAdult) {
      throw std::runtime_error("bmi is only valid for the adult age group");
    }
    if ((weight_kg || height_cm) && age_group != AgeGroup::kPediatric) {
      throw std::runtime_error(
          "weight/height are only valid for the pediatric age group");
    }
    if (bmi && *bmi < 0) throw std::runtime_error("bmi must be non-negative");
    if (weight_kg && *weight_kg < 0) {
      throw std::runtime_error("weight must be non-negative");
    }
    if (height_cm && *height_cm < 0) {
      throw std::runtime_error("height must be non-negative");
    }
  }

  bool has_anthropometrics() const {
    return bmi.has_value() || weight_kg.has_value() || height_cm.has_value();
  }
};

// ---------------------------------------------------------------------------
// Prompt text
// ---------------------------------------------------------------------------

enum class Attribute { kAge, kSex, kLocation, kDevice, kAnthropometrics };

inline const char* attribute_name(Attribute a) {
  switch (a) {
    case Attribute::kAge: return "age";
    case Attribute::kSex: return "sex";
    case Attribute::kLocation: return "location";
    case Attribute::kDevice: return "device";
    case Attribute::kAnthropometrics: return "anthropometrics";
  }
  return "?";
}

inline Attribute parse_attribute(std::string_view s) {
  if (s == "age") return Attribute::kAge;
  if (s == "sex") return Attribute::kSex;
  if (s == "location") return Attribute::kLocation;
  if (s == "device") return Attribute::kDevice;
  if (s == "anthropometrics") return Attribute::kAnthropometrics;
  throw std::runtime_error("unknown attribute '" + std::string(s) + "'");
}

// The five attributes in their fixed prompt order.
inline constexpr Attribute kAttributeOrder[] = {
    Attribute::kAge, Attribute::kSex, Attribute::kLocation, Attribute::kDevice,
    Attribute::kAnthropometrics};

struct PromptSentence {
  Attribute attribute;
  std::string text;
};

// Ordered metadata sentences; each attribute appears at most once and the
// full text is always the single-space join of the sentences.
struct PromptText {
  std::vector<PromptSentence> sentences;

  std::string full_text() const {
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (i > 0) out += ' ';
      out += sentences[i].text;
    }
    return out;
  }

  const PromptSentence* find(Attribute a) const {
    for (const auto& s : sentences) {
      if (s.attribute == a) return &s;
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Sentence template table
// ---------------------------------------------------------------------------

// The canonical sentence table. It is frozen here and mirrored by the
// document shipped at data/prompt_templates.txt; a custom table can be loaded
// from any document with the same keys.
class TemplateTable {
 public:
  static const TemplateTable& builtin() {
    static const TemplateTable table = TemplateTable(builtin_doc());
    return table;
  }

  static TemplateTable from_document(std::string_view text) {
    return TemplateTable(KeyedDoc::parse(text));
  }

  static KeyedDoc builtin_doc() {
    KeyedDoc d;
    d.set("age.adult", "This patient is an adult patient.");
    d.set("age.pediatric", "This patient is a pediatric patient.");
    d.set("age.unknown", "This patient’s age is unknown.");
    d.set("sex.male", "The sex of this patient is male.");
    d.set("sex.female", "The sex of this patient is female.");
    d.set("sex.unknown", "This patient’s sex is unknown.");
    d.set("location.trachea", "This recording is from the trachea.");
    d.set("location.left_anterior",
          "This recording is from the left anterior chest.");
    d.set("location.right_anterior",
          "This recording is from the right anterior chest.");
    d.set("location.left_posterior",
          "This recording is from the left posterior chest.");
    d.set("location.right_posterior",
          "This recording is from the right posterior chest.");
    d.set("location.left_lateral",
          "This recording is from the left lateral chest.");
    d.set("location.right_lateral",
          "This recording is from the right lateral chest.");
    d.set("location.unknown",
          "This patient’s recording location is unknown.");
    d.set("device.meditron", "The recording device is Meditron.");
    d.set("device.littc2se", "The recording device is LittC2SE.");
    d.set("device.litt3200", "The recording device is Litt3200.");
    d.set("device.akgc417l", "The recording device is AKGC417L.");
    d.set("device.yunting_ii", "The recording device is Yunting model II.");
    d.set("device.other", "The recording device is {name}.");
    d.set("device.unknown", "This patient’s recording device is unknown.");
    d.set("anthropometrics.bmi", "This patient’s BMI is {bmi}.");
    d.set("anthropometrics.weight_height",
          "This patient’s weight is {weight} kilograms and height is "
          "{height} centimeters.");
    d.set("anthropometrics.weight",
          "This patient’s weight is {weight} kilograms.");
    d.set("anthropometrics.height",
          "This patient’s height is {height} centimeters.");
    d.set("anthropometrics.unknown",
          "This patient’s anthropometrics are unknown.");
    return d;
  }

  explicit TemplateTable(KeyedDoc doc) : doc_(std::move(doc)) {
    for (const char* key :
         {"age.adult", "age.pediatric", "age.unknown", "sex.male", "sex.female",
          "sex.unknown", "location.trachea", "location.left_anterior",
          "location.right_anterior", "location.left_posterior",
          "location.right_posterior", "location.left_lateral",
          "location.right_lateral", "location.unknown", "device.meditron",
          "device.littc2se", "device.litt3200", "device.akgc417l",
          "device.yunting_ii", "device.other", "device.unknown",
          "anthropometrics.bmi", "anthropometrics.weight_height",
          "anthropometrics.weight", "anthropometrics.height",
          "anthropometrics.unknown"}) {
      if (!doc_.has(key)) {
        throw std::runtime_error(std::string("template table missing key '") +
                                 key + "'");
      }
    }
  }

  const KeyedDoc& document() const { return doc_; }

  // Neutral "unknown" placeholder sentence for an attribute.
  const std::string& neutral(Attribute a) const {
    switch (a) {
      case Attribute::kAge: return doc_.get("age.unknown");
      case Attribute::kSex: return doc_.get("sex.unknown");
      case Attribute::kLocation: return doc_.get("location.unknown");
      case Attribute::kDevice: return doc_.get("device.unknown");
      case Attribute::kAnthropometrics:
        return doc_.get("anthropometrics.unknown");
    }
    throw std::runtime_error("bad attribute");
  }

  std::string sentence(const MetadataRecord& r, Attribute a) const {
    switch (a) {
      case Attribute::kAge:
        switch (r.age_group) {
          case AgeGroup::kAdult: return doc_.get("age.adult");
          case AgeGroup::kPediatric: return doc_.get("age.pediatric");
          case AgeGroup::kUnknown: return doc_.get("age.unknown");
        }
        break;
      case Attribute::kSex:
        switch (r.sex) {
          case Sex::kMale: return doc_.get("sex.male");
          case Sex::kFemale: return doc_.get("sex.female");
          case Sex::kUnknown: return doc_.get("sex.unknown");
        }
        break;
      case Attribute::kLocation:
        if (r.location == Location::kUnknown) return doc_.get("location.unknown");
        return doc_.get(std::string("location.") + location_name(r.location));
      case Attribute::kDevice:
        switch (r.device.kind) {
          case DeviceKind::kUnknown: return doc_.get("device.unknown");
          case DeviceKind::kOther:
            return substitute(doc_.get("device.other"), "{name}",
                              r.device.other_name);
          default:
            return doc_.get(std::string("device.") + device_name(r.device));
        }
      case Attribute::kAnthropometrics: {
        if (r.bmi) {
          return substitute(doc_.get("anthropometrics.bmi"), "{bmi}",
                            format_fixed1(*r.bmi));
        }
        if (r.weight_kg && r.height_cm) {
          std::string s = substitute(doc_.get("anthropometrics.weight_height"),
                                     "{weight}", format_fixed1(*r.weight_kg));
          return substitute(s, "{height}", format_fixed1(*r.height_cm));
        }
        if (r.weight_kg) {
          return substitute(doc_.get("anthropometrics.weight"), "{weight}",
                            format_fixed1(*r.weight_kg));
        }
        if (r.height_cm) {
          return substitute(doc_.get("anthropometrics.height"), "{height}",
                            format_fixed1(*r.height_cm));
        }
        return doc_.get("anthropometrics.unknown");
      }
    }
    throw std::runtime_error("bad attribute");
  }

 private:
  static std::string substitute(std::string text, std::string_view placeholder,
                                std::string_view value) {
    const std::size_t pos = text.find(placeholder);
    if (pos == std::string::npos) return text;
    text.replace(pos, placeholder.size(), value);
    return text;
  }

  KeyedDoc doc_;
};

// ---------------------------------------------------------------------------
// Prompt construction and counterfactual augmentation
// ---------------------------------------------------------------------------

// Builds the metadata description: one sentence per categorical attribute in
// the fixed order age, sex, location, device (unknown values use the neutral
// placeholder) plus an anthropometrics sentence when a value is present.
inline PromptText build_prompt(const MetadataRecord& record,
                               const TemplateTable& table =
                                   TemplateTable::builtin()) {
  record.validate();
  PromptText prompt;
  for (Attribute a : kAttributeOrder) {
    if (a == Attribute::kAnthropometrics && !record.has_anthropometrics()) {
      continue;
    }
    prompt.sentences.push_back({a, table.sentence(record, a)});
  }
  return prompt;
}

inline const std::set<Attribute>& all_attributes() {
  static const std::set<Attribute> s = {
      Attribute::kAge, Attribute::kSex, Attribute::kLocation,
      Attribute::kDevice, Attribute::kAnthropometrics};
  return s;
}

// Independently per sensitive-attribute sentence, replaces the sentence with
// that attribute's neutral placeholder with probability p. One uniform draw
// is consumed per sensitive sentence, in sentence order, whether or not the
// replacement fires, so a fixed seed yields a fixed decision sequence.
inline PromptText counterfactual_augment(const PromptText& prompt, double p,
                                         const std::set<Attribute>& sensitive,
                                         Rng& rng,
                                         const TemplateTable& table =
                                             TemplateTable::builtin()) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("augmentation probability must be in [0, 1]");
  }
  PromptText out = prompt;
  for (auto& sentence : out.sentences) {
    if (!sensitive.count(sentence.attribute)) continue;
    if (rng.uniform() < p) {
      sentence.text = table.neutral(sentence.attribute);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

// Lowercases, splits on whitespace, strips surrounding ASCII punctuation, and
// breaks numeric tokens into single characters ("23.5" -> "2","3",".","5").
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& field : split_ws(text)) {
    std::string tok = to_lower_ascii(field);
    const std::string_view punct = ".,;:!?()\"'";
    std::size_t b = 0;
    std::size_t e = tok.size();
    while (b < e && punct.find(tok[b]) != std::string_view::npos) ++b;
    while (e > b && punct.find(tok[e - 1]) != std::string_view::npos) --e;
    tok = tok.substr(b, e - b);
    if (tok.empty()) continue;
    const bool numeric =
        tok.find_first_not_of("0123456789.") == std::string::npos &&
        tok.find_first_of("0123456789") != std::string::npos;
    if (numeric) {
      for (char c : tok) out.emplace_back(1, c);
    } else {
      out.push_back(tok);
    }
  }
  return out;
}

// Fixed vocabulary over the template lexicon plus numerals. Id 0 is reserved
// for out-of-vocabulary tokens.
class Vocabulary {
 public:
  static constexpr int kUnknownId = 0;

  static Vocabulary from_templates(const TemplateTable& table) {
    Vocabulary v;
    v.add("<unk>");
    for (const auto& [key, text] : table.document().entries()) {
      (void)key;
      for (const std::string& tok : word_tokens(text)) {
        if (tok.size() >= 2 && tok.front() == '{' && tok.back() == '}') continue;
        v.add(tok);
      }
    }
    for (char c = '0'; c <= '9'; ++c) v.add(std::string(1, c));
    v.add(".");
    return v;
  }

  static const Vocabulary& builtin() {
    static const Vocabulary v = from_templates(TemplateTable::builtin());
    return v;
  }

  int id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknownId : it->second;
  }

  const std::string& token(int id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }

 private:
  void add(const std::string& tok) {
    if (ids_.count(tok)) return;
    ids_.emplace(tok, static_cast<int>(tokens_.size()));
    tokens_.push_back(tok);
  }

  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

struct TokenSequence {
  std::vector<int> ids;
  std::size_t length() const { return ids.size(); }
};

inline TokenSequence tokenize(const PromptText& prompt,
                              const Vocabulary& vocab,
                              std::size_t max_tokens = 64) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  const std::vector<std::string> words = word_tokens(prompt.full_text());
  if (words.empty()) {
    throw std::runtime_error("cannot tokenize an empty prompt");
  }
  TokenSequence seq;
  seq.ids.reserve(std::min(words.size(), max_tokens));
  for (const std::string& w : words) {
    if (seq.ids.size() >= max_tokens) break;
    seq.ids.push_back(vocab.id(w));
  }
  return seq;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_METADATA_HPP_
