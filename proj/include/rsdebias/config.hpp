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

#ifndef RSDEBIAS_CONFIG_HPP_
#define RSDEBIAS_CONFIG_HPP_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rsdebias/dataio.hpp"
#include "rsdebias/keyed_doc.hpp"
#include "rsdebias/training.hpp"

namespace rsdebias {

// Config documents are flat keyed text ("key = value"); every key must be
// known, so typos fail loudly naming the offending key.

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config key '" + key + "': expected true/false, got '" +
                           v + "'");
}

inline std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  for (const std::string& item : split(v, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

[[noreturn]] inline void unknown_key(const std::string& key,
                                     const char* what) {
  throw std::runtime_error(std::string("unknown ") + what + " config key '" +
                           key + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Synthetic-dataset config
// ---------------------------------------------------------------------------

inline SynthConfig parse_synth_config(const KeyedDoc& doc) {
  SynthConfig cfg;
  for (const auto& [key, value] : doc.entries()) {
    if (key == "n_train") {
      cfg.n_train = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "n_ood") {
      cfg.n_ood = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "n_classes") {
      cfg.n_classes = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "feature_dim") {
      cfg.feature_dim = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "confound_attr") {
      cfg.confound_attr = parse_attribute(value);
    } else if (key == "rho_train") {
      cfg.rho_train = parse_double(value, key);
    } else if (key == "rho_ood") {
      cfg.rho_ood = parse_double(value, key);
    } else if (key == "ood_unseen_attr_value") {
      cfg.ood_unseen_attr_value = detail::parse_bool(value, key);
    } else if (key == "class_ratios") {
      const std::vector<std::string> parts = detail::parse_list(value);
      if (parts.size() != 4) {
        throw std::runtime_error("class_ratios needs exactly 4 values");
      }
      for (std::size_t i = 0; i < 4; ++i) {
        cfg.class_ratios[i] = parse_double(parts[i], key);
      }
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = parse_double(value, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else {
      detail::unknown_key(key, "synthetic");
    }
  }
  cfg.validate();
  return cfg;
}

inline KeyedDoc synth_config_echo(const SynthConfig& cfg) {
  KeyedDoc doc;
  doc.set("n_train", std::to_string(cfg.n_train));
  doc.set("n_ood", std::to_string(cfg.n_ood));
  doc.set("n_classes", std::to_string(cfg.n_classes));
  doc.set("feature_dim", std::to_string(cfg.feature_dim));
  doc.set("confound_attr", attribute_name(cfg.confound_attr));
  doc.set("rho_train", format_double(cfg.rho_train));
  doc.set("rho_ood", format_double(cfg.rho_ood));
  doc.set("ood_unseen_attr_value", cfg.ood_unseen_attr_value ? "true" : "false");
  doc.set("class_ratios", format_double(cfg.class_ratios[0]) + "," +
                              format_double(cfg.class_ratios[1]) + "," +
                              format_double(cfg.class_ratios[2]) + "," +
                              format_double(cfg.class_ratios[3]));
  doc.set("noise_sigma", format_double(cfg.noise_sigma));
  doc.set("seed", std::to_string(cfg.seed));
  return doc;
}

inline nlohmann::json synth_config_json(const SynthConfig& cfg) {
  const KeyedDoc doc = synth_config_echo(cfg);
  nlohmann::json j;
  for (const auto& [k, v] : doc.entries()) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------
// Training / model config
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  std::optional<std::string> templates_path;
};

inline ExperimentConfig parse_experiment_config(const KeyedDoc& doc) {
  ExperimentConfig cfg;
  std::vector<Attribute> targets = cfg.train.adversary.targets;
  std::map<Attribute, double> lambdas;
  bool targets_set = false;

  for (const auto& [key, value] : doc.entries()) {
    if (key == "lambda_ce") {
      cfg.train.lambda_ce = parse_double(value, key);
    } else if (key == "lambda_kl") {
      cfg.train.lambda_kl = parse_double(value, key);
    } else if (key == "augment_p") {
      cfg.train.augment_p = parse_double(value, key);
    } else if (key == "lr") {
      cfg.train.lr = parse_double(value, key);
    } else if (key == "epochs") {
      cfg.train.epochs = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "batch_size") {
      cfg.train.batch_size = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "weight_decay") {
      cfg.train.weight_decay = parse_double(value, key);
    } else if (key == "seed") {
      cfg.train.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "schedule") {
      if (value == "cosine") cfg.train.schedule = LrSchedule::kCosine;
      else if (value == "constant") cfg.train.schedule = LrSchedule::kConstant;
      else throw std::runtime_error("schedule must be cosine or constant");
    } else if (key == "max_tokens") {
      cfg.train.max_tokens = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "valid_fraction") {
      cfg.train.valid_fraction = parse_double(value, key);
    } else if (key == "counterfactual") {
      cfg.train.counterfactual = detail::parse_bool(value, key);
    } else if (key == "adversary_enabled") {
      cfg.train.adversary_enabled = detail::parse_bool(value, key);
    } else if (key == "grl_coefficient") {
      cfg.train.adversary.grl_coefficient = parse_double(value, key);
    } else if (key == "adversary_hidden") {
      cfg.train.adversary.adversary_hidden =
          static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "adversary_targets") {
      targets.clear();
      for (const std::string& t : detail::parse_list(value)) {
        targets.push_back(parse_attribute(t));
      }
      targets_set = true;
    } else if (key == "lambda_location") {
      lambdas[Attribute::kLocation] = parse_double(value, key);
    } else if (key == "lambda_device") {
      lambdas[Attribute::kDevice] = parse_double(value, key);
    } else if (key == "lambda_age") {
      lambdas[Attribute::kAge] = parse_double(value, key);
    } else if (key == "lambda_sex") {
      lambdas[Attribute::kSex] = parse_double(value, key);
    } else if (key == "sensitive") {
      cfg.train.sensitive.clear();
      for (const std::string& t : detail::parse_list(value)) {
        cfg.train.sensitive.insert(parse_attribute(t));
      }
    } else if (key == "embed_dim") {
      cfg.model.embed_dim = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "hidden_dim") {
      cfg.model.hidden_dim = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "head_hidden") {
      cfg.model.head_hidden = static_cast<std::size_t>(parse_int(value, key));
    } else if (key == "dummy_value") {
      cfg.model.dummy_value = parse_double(value, key);
    } else if (key == "templates_path") {
      cfg.templates_path = value;
    } else {
      detail::unknown_key(key, "training");
    }
  }

  if (targets_set) {
    // Rebuild the target-dependent tables, then re-apply explicit knobs.
    cfg.train.adversary = AdversaryConfig::for_targets(targets);
    if (doc.has("grl_coefficient")) {
      cfg.train.adversary.grl_coefficient =
          parse_double(doc.get("grl_coefficient"), "grl_coefficient");
    }
    if (doc.has("adversary_hidden")) {
      cfg.train.adversary.adversary_hidden = static_cast<std::size_t>(
          parse_int(doc.get("adversary_hidden"), "adversary_hidden"));
    }
  }
  AdversaryConfig& adv = cfg.train.adversary;
  for (const auto& [a, l] : lambdas) {
    if (adv.lambda.count(a) == 0) {
      throw std::runtime_error(std::string("lambda for '") + attribute_name(a) +
                               "' set but the attribute is not an adversary "
                               "target");
    }
    adv.lambda[a] = l;
  }
  cfg.train.validate();
  return cfg;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_CONFIG_HPP_
