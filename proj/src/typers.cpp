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

#include "typebias/typers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "typebias/error.hpp"
#include "typebias/hash.hpp"
#include "typebias/kernels.hpp"
#include "typebias/rng.hpp"

namespace typebias {

namespace {

constexpr const char* kCheckpointFormat = "typebias-checkpoint";
constexpr int kCheckpointVersion = 1;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

bool is_pronoun(const std::string& token) {
  static const std::set<std::string, std::less<>> kPronouns = {
      "he",   "him",  "his",   "himself", "she",  "her",        "hers", "herself",
      "it",   "its",  "itself", "they",   "them", "their",      "theirs", "themselves",
      "i",    "me",   "my",    "we",      "us",   "our",        "you",  "your",
      "this", "that", "these", "those",   "who",  "whom",       "one",  "someone",
      "something"};
  return kPronouns.contains(lowercase(token));
}

void sorted_unique(std::vector<std::uint32_t>& rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

}  // namespace

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Prediction prediction_from_logits(const LabelSpace& labels, std::span<const double> logits,
                                  double threshold) {
  if (logits.size() != labels.size())
    throw ArgumentError("logit count does not match the label space");
  Prediction out;
  std::size_t best = 0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const double p = logistic(logits[t]);
    out.scores[labels.types()[t]] = p;
    if (p > threshold) out.types.insert(labels.types()[t]);
    if (logits[t] > logits[best]) best = t;
  }
  if (out.types.empty() && !logits.empty()) out.types.insert(labels.types()[best]);
  return out;
}

std::vector<double> TypingModel::probabilities(const TypingInstance& instance) const {
  auto z = logits(instance);
  for (auto& v : z) v = logistic(v);
  return z;
}

Prediction predict(const TypingModel& model, const TypingInstance& instance, double threshold) {
  const auto z = model.logits(instance);
  return prediction_from_logits(model.labels(), z, threshold);
}

TypingInstance bias_view(const TypingInstance& instance, BiasKind kind,
                         const std::optional<Tokens>& entity) {
  TypingInstance view;
  view.id = instance.id;
  view.gold = instance.gold;
  switch (kind) {
    case BiasKind::MentionContext:
      view.mention = instance.mention;
      return view;
    case BiasKind::NamedEntity:
      if (!entity || entity->empty())
        throw ArgumentError("named-entity view needs a detected entity");
      view.mention = *entity;
      return view;
    case BiasKind::Pronoun:
      for (const auto& tok : instance.mention)
        if (is_pronoun(tok)) {
          view.mention = {tok};
          return view;
        }
      throw ArgumentError("pronoun view needs a pronoun mention: " + instance.id);
    case BiasKind::Overgeneralization:
      return view;
    case BiasKind::LexicalOverlapping:
    case BiasKind::Dependency:
      break;
  }
  throw ArgumentError("no bias view for " + std::string(to_string(kind)));
}

BiasViewFn make_bias_view_fn(BiasKind kind) {
  switch (kind) {
    case BiasKind::MentionContext:
    case BiasKind::Overgeneralization:
      return [kind](const TypingInstance& x) -> std::optional<TypingInstance> {
        return bias_view(x, kind);
      };
    case BiasKind::Pronoun:
      return [](const TypingInstance& x) -> std::optional<TypingInstance> {
        if (std::none_of(x.mention.begin(), x.mention.end(), is_pronoun)) return std::nullopt;
        return bias_view(x, BiasKind::Pronoun);
      };
    default:
      throw ArgumentError("bias view for " + std::string(to_string(kind)) +
                          " needs an oracle-backed view function");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"dim", dim},
          {"buckets", buckets},
          {"salt", hex64(salt)},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"init_scale", init_scale},
          {"context_dropout", context_dropout},
          {"input_dropout", input_dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.value("dim", c.dim);
  c.buckets = j.value("buckets", c.buckets);
  if (j.contains("salt")) c.salt = std::stoull(j.at("salt").get<std::string>(), nullptr, 16);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.init_scale = j.value("init_scale", c.init_scale);
  c.context_dropout = j.value("context_dropout", c.context_dropout);
  c.input_dropout = j.value("input_dropout", c.input_dropout);
  if (c.dim == 0 || c.buckets == 0 || c.batch_size == 0)
    throw ValidationError("model dim, buckets and batch_size must be positive");
  if (!(c.context_dropout >= 0.0 && c.context_dropout < 1.0))
    throw ValidationError("context_dropout must lie in [0, 1)");
  if (!(c.input_dropout >= 0.0 && c.input_dropout + c.context_dropout < 1.0))
    throw ValidationError("input_dropout must be non-negative and input_dropout + context_dropout below 1");
  return c;
}

void Gradient::clear(std::size_t dim) {
  for (auto r : mention_rows) std::fill_n(mention_emb.begin() + r * dim, dim, 0.0);
  for (auto r : context_rows) std::fill_n(context_emb.begin() + r * dim, dim, 0.0);
  mention_rows.clear();
  context_rows.clear();
  std::fill(weights.begin(), weights.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
  std::fill(null_bias.begin(), null_bias.end(), 0.0);
}

ReferenceModel::ReferenceModel(LabelSpace labels, ModelConfig config, std::uint64_t seed)
    : labels_(std::move(labels)), config_(config) {
  if (labels_.empty()) throw ArgumentError("model needs a non-empty label space");
  if (config_.dim == 0 || config_.buckets == 0)
    throw ArgumentError("model dim and buckets must be positive");
  const std::size_t table = config_.buckets * config_.dim;
  const std::size_t h = hidden_size();
  Rng rng(derive_seed(seed, "model-init"));
  auto fill = [&](std::vector<double>& v, std::size_t n, double s) {
    v.resize(n);
    for (auto& x : v) x = rng.uniform(-s, s);
  };
  fill(params_.mention_emb, table, config_.init_scale);
  fill(params_.context_emb, table, config_.init_scale);
  fill(params_.weights, num_types() * h, config_.init_scale);
  params_.bias.assign(num_types(), 0.0);
  params_.null_bias.assign(num_types(), 0.0);
}

void ReferenceModel::set_schedule(const ModelConfig& config) {
  if (config.dim != config_.dim || config.buckets != config_.buckets || config.salt != config_.salt)
    throw ArgumentError("model shape differs from the checkpoint");
  config_.epochs = config.epochs;
  config_.batch_size = config.batch_size;
  config_.learning_rate = config.learning_rate;
  config_.context_dropout = config.context_dropout;
  config_.input_dropout = config.input_dropout;
}

std::uint32_t ReferenceModel::bucket(const std::string& token) const {
  return static_cast<std::uint32_t>(fnv1a64(lowercase(token), config_.salt) % config_.buckets);
}

ReferenceModel::Encoding ReferenceModel::encode(const TypingInstance& instance,
                                                InputDrop drop) const {
  const std::size_t d = config_.dim;
  Encoding e;
  e.hidden.assign(2 * d, 0.0);
  if (drop != InputDrop::All)
    for (const auto& tok : instance.mention) e.mention_rows.push_back(bucket(tok));
  const bool no_context = drop != InputDrop::None;
  const std::size_t nl = no_context ? 0 : instance.left.size();
  const std::size_t nr = no_context ? 0 : instance.right.size();
  double total = 0.0;
  for (std::size_t i = 0; i < nl; ++i) {
    e.context_rows.push_back(bucket(instance.left[i]));
    e.context_weights.push_back(1.0 / (1.0 + static_cast<double>(nl - i)));
  }
  for (std::size_t i = 0; i < nr; ++i) {
    e.context_rows.push_back(bucket(instance.right[i]));
    e.context_weights.push_back(1.0 / (2.0 + static_cast<double>(i)));
  }
  for (double w : e.context_weights) total += w;
  for (auto& w : e.context_weights) w /= total;

  std::span<double> m(e.hidden.data(), d);
  std::span<double> c(e.hidden.data() + d, d);
  if (!e.mention_rows.empty()) {
    const double inv = 1.0 / static_cast<double>(e.mention_rows.size());
    for (auto r : e.mention_rows)
      kernels::axpy(inv, std::span<const double>(params_.mention_emb.data() + r * d, d), m);
  }
  for (std::size_t i = 0; i < e.context_rows.size(); ++i)
    kernels::axpy(e.context_weights[i],
                  std::span<const double>(params_.context_emb.data() + e.context_rows[i] * d, d),
                  c);
  return e;
}

namespace {
bool token_free(const ReferenceModel::Encoding& e) {
  return e.mention_rows.empty() && e.context_rows.empty();
}
}  // namespace

void ReferenceModel::logits_into(const Encoding& encoding, std::span<double> out) const {
  if (token_free(encoding)) {
    std::copy(params_.null_bias.begin(), params_.null_bias.end(), out.begin());
    return;
  }
  kernels::affine(params_.weights, params_.bias, encoding.hidden, out);
}

std::vector<double> ReferenceModel::logits(const TypingInstance& instance) const {
  std::vector<double> z(num_types());
  logits_into(encode(instance), z);
  return z;
}

std::vector<double> ReferenceModel::representation(const TypingInstance& instance) const {
  return encode(instance).hidden;
}

Gradient ReferenceModel::make_gradient() const {
  Gradient g;
  g.mention_emb.assign(params_.mention_emb.size(), 0.0);
  g.context_emb.assign(params_.context_emb.size(), 0.0);
  g.weights.assign(params_.weights.size(), 0.0);
  g.bias.assign(params_.bias.size(), 0.0);
  g.null_bias.assign(params_.null_bias.size(), 0.0);
  return g;
}

void ReferenceModel::backward(const Encoding& encoding, std::span<const double> dlogits,
                              std::span<const double> dhidden_extra, Gradient& grad) const {
  const std::size_t d = config_.dim;
  std::vector<double> dh(2 * d, 0.0);
  if (!dlogits.empty() && token_free(encoding)) {
    kernels::axpy(1.0, dlogits, grad.null_bias);
  } else if (!dlogits.empty()) {
    kernels::outer_accumulate(dlogits, encoding.hidden, grad.weights);
    kernels::axpy(1.0, dlogits, grad.bias);
    kernels::transposed_accumulate(params_.weights, dlogits, dh);
  }
  if (!dhidden_extra.empty()) kernels::axpy(1.0, dhidden_extra, dh);

  const std::span<const double> dm(dh.data(), d);
  const std::span<const double> dc(dh.data() + d, d);
  if (!encoding.mention_rows.empty()) {
    const double inv = 1.0 / static_cast<double>(encoding.mention_rows.size());
    for (auto r : encoding.mention_rows) {
      kernels::axpy(inv, dm, std::span<double>(grad.mention_emb.data() + r * d, d));
      grad.mention_rows.push_back(r);
    }
  }
  for (std::size_t i = 0; i < encoding.context_rows.size(); ++i) {
    const auto r = encoding.context_rows[i];
    kernels::axpy(encoding.context_weights[i], dc,
                  std::span<double>(grad.context_emb.data() + r * d, d));
    grad.context_rows.push_back(r);
  }
}

nlohmann::json ReferenceModel::to_json() const {
  nlohmann::json tiers = nlohmann::json::object();
  for (const auto& t : labels_.types()) tiers[t] = std::string(to_string(labels_.tier(t)));
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"model", "reference"},
          {"config", config_.to_json()},
          {"labels", labels_.types()},
          {"tiers", tiers},
          {"params",
           {{"mention_emb", params_.mention_emb},
            {"context_emb", params_.context_emb},
            {"weights", params_.weights},
            {"bias", params_.bias},
            {"null_bias", params_.null_bias}}}};
}

ReferenceModel ReferenceModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw ValidationError("not a typebias checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    const auto config = ModelConfig::from_json(j.at("config"));
    const auto types = j.at("labels").get<std::vector<std::string>>();
    std::map<std::string, Tier> tiers;
    if (j.contains("tiers"))
      for (const auto& [k, v] : j.at("tiers").items()) tiers[k] = tier_from_string(v.get<std::string>());
    ReferenceModel model(LabelSpace::from_types(types, tiers), config, 0);
    if (model.labels().types() != types) throw ValidationError("checkpoint labels are not sorted");
    Params p;
    const auto& jp = j.at("params");
    p.mention_emb = jp.at("mention_emb").get<std::vector<double>>();
    p.context_emb = jp.at("context_emb").get<std::vector<double>>();
    p.weights = jp.at("weights").get<std::vector<double>>();
    p.bias = jp.at("bias").get<std::vector<double>>();
    p.null_bias = jp.at("null_bias").get<std::vector<double>>();
    if (p.mention_emb.size() != model.params_.mention_emb.size() ||
        p.context_emb.size() != model.params_.context_emb.size() ||
        p.weights.size() != model.params_.weights.size() ||
        p.bias.size() != model.params_.bias.size() ||
        p.null_bias.size() != model.params_.null_bias.size())
      throw ValidationError("checkpoint parameter shapes do not match its config");
    model.params_ = std::move(p);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("malformed checkpoint: ") + e.what());
  }
}

void ReferenceModel::save(const std::filesystem::path& path) const {
  atomic_write(path, to_json().dump());
}

ReferenceModel ReferenceModel::load(const std::filesystem::path& path) {
  const auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::vector<double> gold_vector(const LabelSpace& labels, const TypeSet& gold) {
  std::vector<double> y(labels.size(), 0.0);
  for (const auto& t : gold)
    if (auto i = labels.index_of(t)) y[*i] = 1.0;
  return y;
}

double bce_with_grad(std::span<const double> z, std::span<const double> y, std::span<double> dz,
                     double weight) {
  double loss = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    loss += softplus(z[t]) - y[t] * z[t];
    if (!dz.empty()) dz[t] = weight * (logistic(z[t]) - y[t]);
  }
  return weight * loss;
}

double BceObjective::batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                                Gradient& grad) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> z(model.num_types()), dz(model.num_types());
  double loss = 0.0;
  for (auto i : batch) {
    const auto enc = encode_input(model, data_[i], i);
    model.logits_into(enc, z);
    const auto y = gold_vector(model.labels(), data_[i].gold);
    loss += bce_with_grad(z, y, dz, inv);
    model.backward(enc, dz, {}, grad);
  }
  return loss;
}

void Objective::set_dropped(std::size_t index, InputDrop drop) {
  if (index >= dropped_.size()) {
    if (drop == InputDrop::None) return;
    dropped_.resize(index + 1, InputDrop::None);
  }
  dropped_[index] = drop;
}

void train_model(ReferenceModel& model, std::size_t n_instances, Objective& objective,
                 std::uint64_t seed, TrainLog* log) {
  if (n_instances == 0) throw ArgumentError("cannot train on an empty dataset");
  const auto& cfg = model.config();
  const std::size_t d = cfg.dim;
  auto& p = model.params();
  Gradient grad = model.make_gradient();

  struct Moments {
    std::vector<double> m, v;
    explicit Moments(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  };
  Moments m_emb(p.mention_emb.size()), c_emb(p.context_emb.size()), w(p.weights.size()),
      b(p.bias.size()), nb(p.null_bias.size()), aux(objective.aux_params().size());

  std::vector<std::size_t> order(n_instances);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "epoch-" + std::to_string(epoch)));
    rng.shuffle(order);
    Rng dropout(derive_seed(seed, "dropout-" + std::to_string(epoch)));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n_instances; start += cfg.batch_size) {
      const std::size_t end = std::min(n_instances, start + cfg.batch_size);
      grad.clear(d);
      objective.clear_aux_grad();
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      if (cfg.context_dropout > 0.0 || cfg.input_dropout > 0.0)
        for (auto i : batch) {
          // One uniform draw per instance: [0, input) drops everything,
          // [input, input + context) drops the context.
          const double u = dropout.uniform();
          objective.set_dropped(i, u < cfg.input_dropout                         ? InputDrop::All
                                   : u < cfg.input_dropout + cfg.context_dropout ? InputDrop::Context
                                                                                 : InputDrop::None);
        }
      epoch_loss += objective.batch_loss(model, batch, grad);
      for (auto i : batch) objective.set_dropped(i, InputDrop::None);
      ++batches;
      ++step;
      const double t = static_cast<double>(step);
      const kernels::AdamStep s{
          cfg.learning_rate * std::sqrt(1.0 - std::pow(kAdamBeta2, t)) /
              (1.0 - std::pow(kAdamBeta1, t)),
          kAdamBeta1, kAdamBeta2, kAdamEps};
      const auto& k = kernels::active();
      sorted_unique(grad.mention_rows);
      sorted_unique(grad.context_rows);
      for (auto r : grad.mention_rows)
        k.adam(s, p.mention_emb.data() + r * d, grad.mention_emb.data() + r * d,
               m_emb.m.data() + r * d, m_emb.v.data() + r * d, d);
      for (auto r : grad.context_rows)
        k.adam(s, p.context_emb.data() + r * d, grad.context_emb.data() + r * d,
               c_emb.m.data() + r * d, c_emb.v.data() + r * d, d);
      k.adam(s, p.weights.data(), grad.weights.data(), w.m.data(), w.v.data(), p.weights.size());
      k.adam(s, p.bias.data(), grad.bias.data(), b.m.data(), b.v.data(), p.bias.size());
      k.adam(s, p.null_bias.data(), grad.null_bias.data(), nb.m.data(), nb.v.data(),
             p.null_bias.size());
      auto ap = objective.aux_params();
      if (!ap.empty())
        k.adam(s, ap.data(), objective.aux_grad().data(), aux.m.data(), aux.v.data(), ap.size());
    }
    if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  if (log) log->steps += step;
}

ReferenceModel train_reference(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                               const ModelConfig& config, std::uint64_t seed, TrainLog* log,
                               const TrainOptions& options) {
  ReferenceModel model = options.warm_start ? *options.warm_start
                                            : ReferenceModel(labels, config, seed);
  if (options.warm_start && model.labels().types() != labels.types())
    throw ArgumentError("warm-start checkpoint has a different label space");
  if (options.warm_start) model.set_schedule(config);
  BceObjective objective(train_set);
  train_model(model, train_set.size(), objective, seed, log);
  return model;
}

}  // namespace typebias
