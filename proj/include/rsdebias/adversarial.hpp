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

#ifndef RSDEBIAS_ADVERSARIAL_HPP_
#define RSDEBIAS_ADVERSARIAL_HPP_

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsdebias/metadata.hpp"
#include "rsdebias/nn.hpp"

namespace rsdebias {

// ---------------------------------------------------------------------------
// Gradient reversal
// ---------------------------------------------------------------------------

// Identity in the forward direction; the backward sensitivity is scaled by
// -lambda. Placing this between the text-branch logits and the adversary
// makes those logits adversarial to the attribute discriminators.
class GradientReversal {
 public:
  explicit GradientReversal(double lambda) : lambda_(lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  }

  double lambda() const { return lambda_; }

  std::vector<double> forward(std::span<const double> x) const {
    return std::vector<double>(x.begin(), x.end());
  }

  std::vector<double> backward(std::span<const double> dy) const {
    std::vector<double> dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = -lambda_ * dy[i];
    return dx;
  }

 private:
  double lambda_;
};

inline std::vector<double> gradient_reverse(std::span<const double> x,
                                            double lambda) {
  return GradientReversal(lambda).forward(x);
}

// ---------------------------------------------------------------------------
// Adversary configuration
// ---------------------------------------------------------------------------

// Default discriminator label spaces: 7 recording locations, 4 training
// devices plus one bucket for devices unseen at training time, and the two
// binary demographics.
inline std::size_t default_attr_classes(Attribute a) {
  switch (a) {
    case Attribute::kLocation: return 7;
    case Attribute::kDevice: return 5;
    case Attribute::kAge: return 2;
    case Attribute::kSex: return 2;
    case Attribute::kAnthropometrics: break;
  }
  throw std::runtime_error("no discriminator label space for attribute");
}

inline double default_attr_lambda(Attribute a) {
  switch (a) {
    case Attribute::kLocation: return 0.01;
    case Attribute::kDevice: return 0.1;
    case Attribute::kAge: return 0.01;
    case Attribute::kSex: return 0.01;
    case Attribute::kAnthropometrics: break;
  }
  throw std::runtime_error("no adversary weight for attribute");
}

struct AdversaryConfig {
  double grl_coefficient = 1.0;
  std::vector<Attribute> targets = {Attribute::kLocation, Attribute::kDevice};
  std::map<Attribute, double> lambda = {{Attribute::kLocation, 0.01},
                                        {Attribute::kDevice, 0.1}};
  std::size_t adversary_hidden = 32;
  std::map<Attribute, std::size_t> n_classes_per_target = {
      {Attribute::kLocation, 7}, {Attribute::kDevice, 5}};

  static AdversaryConfig for_targets(const std::vector<Attribute>& targets) {
    AdversaryConfig cfg;
    cfg.targets = targets;
    cfg.lambda.clear();
    cfg.n_classes_per_target.clear();
    for (Attribute a : targets) {
      cfg.lambda[a] = default_attr_lambda(a);
      cfg.n_classes_per_target[a] = default_attr_classes(a);
    }
    return cfg;
  }

  double lambda_for(Attribute a) const {
    auto it = lambda.find(a);
    if (it == lambda.end()) {
      throw std::runtime_error(std::string("no adversary weight configured for "
                                           "attribute '") +
                               attribute_name(a) + "'");
    }
    return it->second;
  }

  std::size_t classes_for(Attribute a) const {
    auto it = n_classes_per_target.find(a);
    if (it == n_classes_per_target.end()) {
      throw std::runtime_error(std::string("no label space configured for "
                                           "attribute '") +
                               attribute_name(a) + "'");
    }
    return it->second;
  }

  void validate() const {
    if (grl_coefficient < 0.0) {
      throw std::runtime_error("grl coefficient must be >= 0");
    }
    if (targets.empty()) {
      throw std::runtime_error("adversary target set must not be empty");
    }
    for (Attribute a : targets) {
      if (a == Attribute::kAnthropometrics) {
        throw std::runtime_error("anthropometrics is not a discriminator target");
      }
      if (lambda_for(a) < 0.0) {
        throw std::runtime_error("adversary weights must be >= 0");
      }
      classes_for(a);
    }
  }
};

// Discriminator class index of an attribute value. Devices unseen during
// training share bucket 4; unknown demographics have no label and raise.
inline std::size_t attr_class_index(Attribute a, const MetadataRecord& m) {
  switch (a) {
    case Attribute::kAge:
      switch (m.age_group) {
        case AgeGroup::kAdult: return 0;
        case AgeGroup::kPediatric: return 1;
        case AgeGroup::kUnknown: break;
      }
      throw std::runtime_error("missing attribute label: age");
    case Attribute::kSex:
      switch (m.sex) {
        case Sex::kMale: return 0;
        case Sex::kFemale: return 1;
        case Sex::kUnknown: break;
      }
      throw std::runtime_error("missing attribute label: sex");
    case Attribute::kLocation:
      if (m.location == Location::kUnknown) {
        throw std::runtime_error("missing attribute label: location");
      }
      return static_cast<std::size_t>(m.location);
    case Attribute::kDevice:
      switch (m.device.kind) {
        case DeviceKind::kMeditron: return 0;
        case DeviceKind::kLittC2SE: return 1;
        case DeviceKind::kLitt3200: return 2;
        case DeviceKind::kAkgC417L: return 3;
        default: return 4;  // unseen / other / unknown bucket
      }
    case Attribute::kAnthropometrics:
      break;
  }
  throw std::runtime_error("attribute has no discriminator label");
}

// ---------------------------------------------------------------------------
// Adversary network
// ---------------------------------------------------------------------------

struct AdversaryOutputs {
  std::vector<double> z;  // shared adversary representation
  std::vector<std::pair<Attribute, std::vector<double>>> logits;  // per target

  const std::vector<double>& logits_for(Attribute a) const {
    for (const auto& [attr, l] : logits) {
      if (attr == a) return l;
    }
    throw std::runtime_error(std::string("adversary target '") +
                             attribute_name(a) + "' is not configured");
  }
};

// Shared projection U over the reversed text-branch logits plus one affine
// discriminator head per configured attribute.
class Adversary {
 public:
  struct Ctx {
    std::vector<double> input;  // y_t after the (identity) reversal
    std::vector<double> u_pre;
    std::vector<double> z;
  };

  Adversary(const AdversaryConfig& cfg, std::size_t n_classes,
            std::uint64_t seed)
      : cfg_(cfg), grl_(cfg.grl_coefficient),
        u_("adversary.u", n_classes, cfg.adversary_hidden) {
    cfg_.validate();
    Rng rng = derive_rng(seed, "init.adversary");
    u_.init_glorot(rng);
    for (Attribute a : cfg_.targets) {
      heads_.emplace_back(a, Affine(std::string("adversary.d_") +
                                        attribute_name(a),
                                    cfg.adversary_hidden, cfg_.classes_for(a)));
      heads_.back().second.init_glorot(rng);
    }
  }

  const AdversaryConfig& config() const { return cfg_; }

  AdversaryOutputs forward(std::span<const double> y_t,
                           Ctx* ctx = nullptr) const {
    std::vector<double> x = grl_.forward(y_t);
    std::vector<double> pre = u_.forward(x);
    std::vector<double> z = pre;
    for (double& v : z) v = v > 0.0 ? v : 0.0;
    AdversaryOutputs out;
    out.z = z;
    for (const auto& [attr, head] : heads_) {
      out.logits.emplace_back(attr, head.forward(z));
    }
    if (ctx) {
      ctx->input = std::move(x);
      ctx->u_pre = std::move(pre);
      ctx->z = std::move(z);
    }
    return out;
  }

  // Backpropagates per-target logit gradients through the heads and U
  // (training the discriminators) and returns the gradient reaching y_t,
  // i.e. the reversed (-grl_coefficient-scaled) sensitivity.
  std::vector<double> backward(const Ctx& ctx,
                               const std::vector<std::vector<double>>& dlogits) {
    if (dlogits.size() != heads_.size()) {
      throw std::invalid_argument("adversary backward: need one gradient per "
                                  "configured target");
    }
    std::vector<double> dz(ctx.z.size(), 0.0);
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      std::vector<double> d = heads_[k].second.backward(ctx.z, dlogits[k]);
      for (std::size_t i = 0; i < dz.size(); ++i) dz[i] += d[i];
    }
    for (std::size_t i = 0; i < dz.size(); ++i) {
      if (ctx.u_pre[i] <= 0.0) dz[i] = 0.0;
    }
    std::vector<double> dx = u_.backward(ctx.input, dz);
    return grl_.backward(dx);
  }

  void collect(std::vector<ParamBlock*>& out) {
    u_.collect(out);
    for (auto& [attr, head] : heads_) {
      (void)attr;
      head.collect(out);
    }
  }

 private:
  AdversaryConfig cfg_;
  GradientReversal grl_;
  Affine u_;
  std::vector<std::pair<Attribute, Affine>> heads_;
};

inline AdversaryOutputs adversary_forward(const Adversary& adv,
                                          std::span<const double> y_t) {
  return adv.forward(y_t);
}

// ---------------------------------------------------------------------------
// Adversarial objective
// ---------------------------------------------------------------------------

struct AdversarialLossTerms {
  double total = 0.0;
  double ce_nde = 0.0;
  std::vector<std::pair<Attribute, double>> per_target;

  double term_for(Attribute a) const {
    for (const auto& [attr, v] : per_target) {
      if (attr == a) return v;
    }
    throw std::runtime_error(std::string("no adversarial term for '") +
                             attribute_name(a) + "'");
  }
};

// L = CE(y_t, y) + sum_a lambda_a * CE(D_a(z), l_a)
inline AdversarialLossTerms adversarial_loss(
    std::span<const double> y_t, std::size_t label,
    const AdversaryOutputs& adv, const std::map<Attribute, std::size_t>& attr_labels,
    const AdversaryConfig& cfg) {
  AdversarialLossTerms terms;
  terms.ce_nde = cross_entropy(y_t, label);
  terms.total = terms.ce_nde;
  for (Attribute a : cfg.targets) {
    auto it = attr_labels.find(a);
    if (it == attr_labels.end()) {
      throw std::runtime_error(std::string("missing attribute label for '") +
                               attribute_name(a) + "'");
    }
    const std::vector<double>& logits = adv.logits_for(a);
    if (it->second >= logits.size()) {
      throw std::runtime_error(std::string("attribute label out of range for '") +
                               attribute_name(a) + "'");
    }
    const double ce = cross_entropy(logits, it->second);
    terms.per_target.emplace_back(a, ce);
    terms.total += cfg.lambda_for(a) * ce;
  }
  return terms;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_ADVERSARIAL_HPP_
