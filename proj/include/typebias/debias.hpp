// Copyright 2026 The typebias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "typebias/bias_kind.hpp"
#include "typebias/corpus.hpp"
#include "typebias/metrics.hpp"
#include "typebias/typers.hpp"

namespace typebias {

enum class DebiasMethod {
  Baseline,
  Augmentation,
  Aflite,
  Poe,
  Focal,
  LearnedMixin,
  LearnedMixinH,
  ContrastiveCe,
  ContrastiveCos,
  CounterfactualInference,
};

std::string_view to_string(DebiasMethod method);
DebiasMethod debias_method_from_string(std::string_view name);
bool needs_bias_kind(DebiasMethod method);

struct AfliteConfig {
  std::size_t probes = 16;
  double tau = 0.75;         // predictability above which an instance may be dropped
  double drop_rate = 0.1;    // share of the current pool dropped per round
  double target_rate = 0.2;  // stop once the pool is this share of the input
  double train_share = 0.5;  // share of the pool each probe trains on
  std::size_t probe_epochs = 5;
  double probe_learning_rate = 0.3;
};

struct DebiasConfig {
  DebiasMethod method = DebiasMethod::Baseline;
  std::optional<BiasKind> bias_kind;
  ModelConfig model;
  double gamma = 2.0;   // focal exponent
  double lambda = 0.1;  // contrastive weight
  double tau = 0.1;     // contrastive temperature (CE variant)
  double beta = 0.03;   // learned-mixin+H entropy weight
  double alpha = 1.0;   // counterfactual inference scale
  AfliteConfig aflite;
  // Start the main model from a baseline trained on the original data.
  bool warm_start = false;

  // Test hooks for the degenerate cases.
  bool zero_bias_logits = false;
  std::optional<double> fixed_gate;

  // Called with every input the bias model sees, in training and inference.
  std::function<void(const TypingInstance&)> on_bias_input;

  // Throws ArgumentError when a bias kind is required but missing.
  void validate() const;
  nlohmann::json to_json() const;
};

// Bias model: a reference model trained on bias views only and then frozen.
// Instances without a defined view get zero bias logits.
class BiasModel {
 public:
  BiasModel(ReferenceModel model, BiasViewFn view,
            std::function<void(const TypingInstance&)> observer = {});
  static BiasModel train(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                         BiasViewFn view, const ModelConfig& config, std::uint64_t seed,
                         std::function<void(const TypingInstance&)> observer = {});

  std::vector<double> logits(const TypingInstance& original) const;
  const ReferenceModel& model() const { return model_; }

 private:
  ReferenceModel model_;
  BiasViewFn view_;
  std::function<void(const TypingInstance&)> observer_;
};

// ---- objectives ------------------------------------------------------------

// BCE on z_main + z_bias.
class PoeObjective : public Objective {
 public:
  PoeObjective(std::span<const TypingInstance> data, std::vector<std::vector<double>> bias_logits)
      : data_(data), bias_(std::move(bias_logits)) {}
  double batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                    Gradient& grad) override;

 private:
  std::span<const TypingInstance> data_;
  std::vector<std::vector<double>> bias_;
};

// Per-type BCE weighted by (1 - p_bias)^gamma, p_bias the bias model's
// probability for that type.
class FocalObjective : public Objective {
 public:
  FocalObjective(std::span<const TypingInstance> data, std::vector<std::vector<double>> bias_logits,
                 double gamma)
      : data_(data), bias_(std::move(bias_logits)), gamma_(gamma) {}
  double batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                    Gradient& grad) override;

 private:
  std::span<const TypingInstance> data_;
  std::vector<std::vector<double>> bias_;
  double gamma_;
};

// BCE on z_main + g(h) z_bias with g = softplus(w.h + b); the +H variant adds
// beta * sum_t H(logistic(g z_bias_t)).
class LearnedMixinObjective : public Objective {
 public:
  LearnedMixinObjective(std::span<const TypingInstance> data,
                        std::vector<std::vector<double>> bias_logits, std::size_t hidden_size,
                        double beta, bool plus_h, std::optional<double> fixed_gate = std::nullopt);
  double batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                    Gradient& grad) override;
  std::span<double> aux_params() override { return gate_; }
  std::span<double> aux_grad() override { return gate_grad_; }
  void clear_aux_grad() override { std::fill(gate_grad_.begin(), gate_grad_.end(), 0.0); }

 private:
  std::span<const TypingInstance> data_;
  std::vector<std::vector<double>> bias_;
  double beta_;
  bool plus_h_;
  std::optional<double> fixed_gate_;
  std::vector<double> gate_;  // hidden weights then the offset
  std::vector<double> gate_grad_;
};

enum class ContrastiveVariant { Ce, Cosine };

double cosine_similarity(std::span<const double> a, std::span<const double> b);
// sum_j softmax(a/tau)_j log softmax(b/tau)_j (negative cross-entropy).
double softmax_similarity(std::span<const double> a, std::span<const double> b, double tau);

// Task BCE + lambda [ sim(h_full, h_bias) - mean sim(h_orig, h_aug) ].
class ContrastiveObjective : public Objective {
 public:
  ContrastiveObjective(std::span<const TypingInstance> data,
                       std::vector<std::optional<TypingInstance>> bias_views,
                       std::vector<std::vector<TypingInstance>> positives, ContrastiveVariant variant,
                       double lambda, double tau);
  double batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                    Gradient& grad) override;

 private:
  // sim(a, b) and its gradients.
  double similarity(std::span<const double> a, std::span<const double> b, std::span<double> da,
                    std::span<double> db) const;

  std::span<const TypingInstance> data_;
  std::vector<std::optional<TypingInstance>> views_;
  std::vector<std::vector<TypingInstance>> positives_;
  ContrastiveVariant variant_;
  double lambda_;
  double tau_;
};

// ---- trainers --------------------------------------------------------------

// Reference training on original + augmented instances. An empty
// counterfactual set logs a warning and reproduces baseline training.
ReferenceModel train_augmented(std::span<const TypingInstance> train_set,
                               std::span<const TypingInstance> counterfactual_set,
                               const LabelSpace& labels, const DebiasConfig& config, std::uint64_t seed,
                               TrainLog* log = nullptr);

struct AfliteResult {
  std::vector<TypingInstance> kept;
  std::vector<std::string> dropped;  // ids in drop order
  std::size_t rounds = 0;
};

// Iteratively drops the instances that bag-of-token probes predict best.
AfliteResult aflite_filter(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                           const AfliteConfig& config, std::uint64_t seed);

ReferenceModel train_poe(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                         const BiasViewFn& view, const DebiasConfig& config, std::uint64_t seed,
                         TrainLog* log = nullptr);
ReferenceModel train_focal(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                           const BiasViewFn& view, const DebiasConfig& config, std::uint64_t seed,
                           TrainLog* log = nullptr);
ReferenceModel train_learned_mixin(std::span<const TypingInstance> train_set,
                                   const LabelSpace& labels, const BiasViewFn& view,
                                   const DebiasConfig& config, bool plus_h, std::uint64_t seed,
                                   TrainLog* log = nullptr);
// `counterfactual_pairs` are augmented instances whose provenance names a
// training instance; without them only the bias term is used.
ReferenceModel train_contrastive(std::span<const TypingInstance> train_set,
                                 const LabelSpace& labels, const BiasViewFn& view,
                                 ContrastiveVariant variant,
                                 std::span<const TypingInstance> counterfactual_pairs,
                                 const DebiasConfig& config, std::uint64_t seed,
                                 TrainLog* log = nullptr);

// logits(x) - alpha * logits(view(x)), thresholded as in predict. When the
// view is undefined for x the plain prediction is returned.
Prediction counterfactual_infer(const TypingModel& model, const TypingInstance& instance,
                                const BiasViewFn& view, double alpha = 1.0);
// Subtracts one scaled view per entry (multi-bias extension).
Prediction counterfactual_infer(const TypingModel& model, const TypingInstance& instance,
                                std::span<const BiasViewFn> views, double alpha = 1.0);

// Model whose logits are the counterfactual-inference logits.
class CounterfactualModel : public TypingModel {
 public:
  CounterfactualModel(const TypingModel& base, BiasViewFn view, double alpha)
      : base_(base), view_(std::move(view)), alpha_(alpha) {}
  const LabelSpace& labels() const override { return base_.labels(); }
  std::vector<double> logits(const TypingInstance& instance) const override;
  std::vector<double> representation(const TypingInstance& instance) const override {
    return base_.representation(instance);
  }
  std::size_t hidden_size() const override { return base_.hidden_size(); }

 private:
  const TypingModel& base_;
  BiasViewFn view_;
  double alpha_;
};

struct DebiasInputs {
  std::span<const TypingInstance> train_set;
  // Augmented instances (augmentation training, contrastive positives).
  std::span<const TypingInstance> counterfactual_set;
  const LabelSpace* labels = nullptr;
  // Defaults to make_bias_view_fn(bias_kind).
  BiasViewFn view;
};

// Runs the configured method. Counterfactual inference trains a baseline;
// apply it at prediction time with CounterfactualModel.
ReferenceModel train_debiased(const DebiasInputs& inputs, const DebiasConfig& config,
                              std::uint64_t seed, TrainLog* log = nullptr);

// ---- report ----------------------------------------------------------------

struct MitigationRow {
  std::string method;
  PRF original;   // U- columns
  PRF augmented;  // A- columns
};

struct MitigationReport {
  std::vector<MitigationRow> rows;
  nlohmann::json to_json() const;
  static MitigationReport from_json(const nlohmann::json& j);
};

PRF evaluate_model(const TypingModel& model, std::span<const TypingInstance> test_set);

// Fixed-width table with U-Prec/U-Rec/U-F1/A-Prec/A-Rec/A-F1 columns.
std::string render_mitigation_table(const MitigationReport& report);

}  // namespace typebias
