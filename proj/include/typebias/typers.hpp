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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "typebias/bias_kind.hpp"
#include "typebias/corpus.hpp"

namespace typebias {

inline constexpr double kDecisionThreshold = 0.5;

struct Prediction {
  TypeSet types;
  std::map<std::string, double> scores;  // every label-space type
};

double logistic(double z);
// log(1 + exp(z)) without overflow.
double softplus(double z);

// Labels with probability above `threshold`; when none qualifies, the single
// best label (the lexicographically smallest among ties).
Prediction prediction_from_logits(const LabelSpace& labels, std::span<const double> logits,
                                  double threshold = kDecisionThreshold);

class TypingModel {
 public:
  virtual ~TypingModel() = default;
  virtual const LabelSpace& labels() const = 0;
  virtual std::vector<double> logits(const TypingInstance& instance) const = 0;
  // Fixed-width hidden representation of (context, mention).
  virtual std::vector<double> representation(const TypingInstance& instance) const = 0;
  virtual std::size_t hidden_size() const = 0;

  std::vector<double> probabilities(const TypingInstance& instance) const;
};

Prediction predict(const TypingModel& model, const TypingInstance& instance,
                   double threshold = kDecisionThreshold);

// Reduced input exposing only a bias feature: MentionContext keeps the
// mention, NamedEntity keeps `entity` (required), Pronoun keeps the
// mention's pronoun token, Overgeneralization is the empty probe. Throws
// ArgumentError where the view is undefined.
TypingInstance bias_view(const TypingInstance& instance, BiasKind kind,
                         const std::optional<Tokens>& entity = std::nullopt);

// Maps an instance to its bias view, or nullopt when the view is undefined
// for that instance.
using BiasViewFn = std::function<std::optional<TypingInstance>(const TypingInstance&)>;

// View function for kinds that need no external oracle (MentionContext,
// Pronoun, Overgeneralization).
BiasViewFn make_bias_view_fn(BiasKind kind);

struct ModelConfig {
  std::size_t dim = 16;          // width of each encoder; the hidden state is 2 * dim
  std::size_t buckets = 8192;    // hashed vocabulary rows per embedding table
  std::uint64_t salt = 0x5eed5a17ULL;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.02;
  double init_scale = 0.1;
  // Probability that a training step sees an instance without its context.
  double context_dropout = 0.2;
  // Probability that a training step sees the empty input instead; this is
  // what trains the null bias.
  double input_dropout = 0.05;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Gradient buffers shaped like ReferenceModel::Params. Embedding rows that
// received gradient are tracked so clearing and sparse updates stay cheap.
// Which parts of an instance a training step hides from the encoder.
enum class InputDrop : char { None, Context, All };

struct Gradient {
  std::vector<double> mention_emb;
  std::vector<double> context_emb;
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> null_bias;
  std::vector<std::uint32_t> mention_rows;
  std::vector<std::uint32_t> context_rows;

  void clear(std::size_t dim);
};

// Bag-of-embeddings typer: mean of mention-token embeddings concatenated
// with a distance-weighted mean of context-token embeddings (weight
// 1 / (1 + distance to the mention)), followed by one linear layer of
// per-type logits. Input with no tokens at all gets `null_bias` instead.
class ReferenceModel final : public TypingModel {
 public:
  struct Params {
    std::vector<double> mention_emb;  // buckets x dim
    std::vector<double> context_emb;  // buckets x dim
    std::vector<double> weights;      // types x (2 * dim)
    std::vector<double> bias;         // types
    std::vector<double> null_bias;    // types; replaces `bias` for token-free input
    friend bool operator==(const Params&, const Params&) = default;
  };

  struct Encoding {
    std::vector<std::uint32_t> mention_rows;
    std::vector<std::uint32_t> context_rows;
    std::vector<double> context_weights;  // normalized, parallel to context_rows
    std::vector<double> hidden;
  };

  ReferenceModel(LabelSpace labels, ModelConfig config, std::uint64_t seed);

  const LabelSpace& labels() const override { return labels_; }
  std::vector<double> logits(const TypingInstance& instance) const override;
  std::vector<double> representation(const TypingInstance& instance) const override;
  std::size_t hidden_size() const override { return 2 * config_.dim; }

  const ModelConfig& config() const { return config_; }
  // Replaces epochs, batch size and learning rate; shape fields must match.
  void set_schedule(const ModelConfig& config);
  Params& params() { return params_; }
  const Params& params() const { return params_; }
  std::size_t num_types() const { return labels_.size(); }

  std::uint32_t bucket(const std::string& token) const;
  Encoding encode(const TypingInstance& instance, InputDrop drop = InputDrop::None) const;
  void logits_into(const Encoding& encoding, std::span<double> out) const;

  // Accumulates parameter gradients for dL/dlogits plus an optional extra
  // dL/dhidden term.
  void backward(const Encoding& encoding, std::span<const double> dlogits,
                std::span<const double> dhidden_extra, Gradient& grad) const;

  Gradient make_gradient() const;

  void save(const std::filesystem::path& path) const;
  static ReferenceModel load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  static ReferenceModel from_json(const nlohmann::json& j);

 private:
  LabelSpace labels_;
  ModelConfig config_;
  Params params_;
};

// Multi-hot gold vector in label-space order.
std::vector<double> gold_vector(const LabelSpace& labels, const TypeSet& gold);

// Per-type binary cross-entropy summed over types; `dz` receives dL/dz when
// non-empty, scaled by `weight`.
double bce_with_grad(std::span<const double> z, std::span<const double> y, std::span<double> dz,
                     double weight = 1.0);

// A training loss over mini-batches of instance indices. Implementations
// accumulate gradients of the mean batch loss and return that loss.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                            Gradient& grad) = 0;
  // Extra trainable parameters owned by the objective (e.g. a gate head).
  virtual std::span<double> aux_params() { return {}; }
  virtual std::span<double> aux_grad() { return {}; }
  virtual void clear_aux_grad() {}

  // Dropout flags, set by the training loop for the current batch.
  void set_dropped(std::size_t index, InputDrop drop);
  InputDrop dropped(std::size_t index) const {
    return index < dropped_.size() ? dropped_[index] : InputDrop::None;
  }

 protected:
  ReferenceModel::Encoding encode_input(const ReferenceModel& model, const TypingInstance& instance,
                                        std::size_t index) const {
    return model.encode(instance, dropped(index));
  }

 private:
  std::vector<InputDrop> dropped_;
};

// Plain per-type binary cross-entropy against gold.
class BceObjective : public Objective {
 public:
  explicit BceObjective(std::span<const TypingInstance> data) : data_(data) {}
  double batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                    Gradient& grad) override;

 private:
  std::span<const TypingInstance> data_;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
};

struct TrainOptions {
  std::optional<ReferenceModel> warm_start;
};

// Adam over shuffled mini-batches; embedding rows only move when they
// receive gradient. Deterministic in (seed, data order, config).
void train_model(ReferenceModel& model, std::size_t n_instances, Objective& objective,
                 std::uint64_t seed, TrainLog* log = nullptr);

ReferenceModel train_reference(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                               const ModelConfig& config, std::uint64_t seed, TrainLog* log = nullptr,
                               const TrainOptions& options = {});

}  // namespace typebias
