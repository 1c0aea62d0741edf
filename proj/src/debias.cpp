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

#include "typebias/debias.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "typebias/error.hpp"
#include "typebias/kernels.hpp"
#include "typebias/log.hpp"
#include "typebias/rng.hpp"

namespace typebias {

namespace {

constexpr std::pair<DebiasMethod, std::string_view> kMethodNames[] = {
    {DebiasMethod::Baseline, "baseline"},
    {DebiasMethod::Augmentation, "augmentation"},
    {DebiasMethod::Aflite, "aflite"},
    {DebiasMethod::Poe, "poe"},
    {DebiasMethod::Focal, "focal"},
    {DebiasMethod::LearnedMixin, "learned_mixin"},
    {DebiasMethod::LearnedMixinH, "learned_mixin_h"},
    {DebiasMethod::ContrastiveCe, "contrastive_ce"},
    {DebiasMethod::ContrastiveCos, "contrastive_cos"},
    {DebiasMethod::CounterfactualInference, "counterfactual_inference"},
};

// Binary entropy of logistic(u) and its derivative in u.
double binary_entropy(double u) { return softplus(u) - u * logistic(u); }
double binary_entropy_grad(double u) {
  const double q = logistic(u);
  return -u * q * (1.0 - q);
}

ReferenceModel initial_model(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                             const DebiasConfig& config, std::uint64_t seed) {
  if (!config.warm_start) return ReferenceModel(labels, config.model, seed);
  return train_reference(train_set, labels, config.model, seed);
}

std::vector<std::vector<double>> frozen_bias_logits(std::span<const TypingInstance> train_set,
                                                    const LabelSpace& labels, const BiasViewFn& view,
                                                    const DebiasConfig& config, std::uint64_t seed) {
  if (config.zero_bias_logits)
    return std::vector<std::vector<double>>(train_set.size(),
                                            std::vector<double>(labels.size(), 0.0));
  const auto bias = BiasModel::train(train_set, labels, view, config.model,
                                     derive_seed(seed, "bias-model"), config.on_bias_input);
  std::vector<std::vector<double>> out;
  out.reserve(train_set.size());
  for (const auto& x : train_set) out.push_back(bias.logits(x));
  return out;
}

BiasViewFn resolve_view(const BiasViewFn& view, const DebiasConfig& config) {
  if (view) return view;
  if (!config.bias_kind) throw ArgumentError("method needs a bias kind");
  return make_bias_view_fn(*config.bias_kind);
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

nlohmann::json prf_json(const PRF& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

PRF prf_from_json(const nlohmann::json& j) {
  PRF p;
  p.precision = j.at("precision").get<double>();
  p.recall = j.at("recall").get<double>();
  p.f1 = j.at("f1").get<double>();
  return p;
}

}  // namespace

std::string_view to_string(DebiasMethod method) {
  for (const auto& [m, n] : kMethodNames)
    if (m == method) return n;
  return "unknown";
}

DebiasMethod debias_method_from_string(std::string_view name) {
  std::string key;
  for (char c : name) key.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "learned_mixin+h") key = "learned_mixin_h";
  if (key == "counterfactual" || key == "cf_inference") key = "counterfactual_inference";
  for (const auto& [m, n] : kMethodNames)
    if (n == key) return m;
  throw ArgumentError("unknown debias method '" + std::string(name) + "'");
}

bool needs_bias_kind(DebiasMethod method) {
  switch (method) {
    case DebiasMethod::Baseline:
    case DebiasMethod::Augmentation:
    case DebiasMethod::Aflite:
      return false;
    default:
      return true;
  }
}

void DebiasConfig::validate() const {
  if (needs_bias_kind(method) && !bias_kind)
    throw ArgumentError(std::string(to_string(method)) + " needs a bias kind");
  if (gamma < 0 || lambda < 0 || beta < 0) throw ArgumentError("gamma, lambda and beta must be >= 0");
  if (tau <= 0) throw ArgumentError("contrastive temperature must be positive");
  if (aflite.probes == 0) throw ArgumentError("AFLite needs at least one probe");
  if (!(aflite.train_share > 0 && aflite.train_share < 1))
    throw ArgumentError("AFLite train share must lie in (0, 1)");
}

nlohmann::json DebiasConfig::to_json() const {
  nlohmann::json j = {{"method", std::string(to_string(method))},
                      {"model", model.to_json()},
                      {"gamma", gamma},
                      {"lambda", lambda},
                      {"tau", tau},
                      {"beta", beta},
                      {"alpha", alpha},
                      {"warm_start", warm_start},
                      {"aflite",
                       {{"probes", aflite.probes},
                        {"tau", aflite.tau},
                        {"drop_rate", aflite.drop_rate},
                        {"target_rate", aflite.target_rate},
                        {"train_share", aflite.train_share},
                        {"probe_epochs", aflite.probe_epochs},
                        {"probe_learning_rate", aflite.probe_learning_rate}}}};
  j["bias_kind"] = bias_kind ? nlohmann::json(std::string(to_string(*bias_kind))) : nlohmann::json();
  return j;
}

// ---- bias model --------------------------------------------------------------

BiasModel::BiasModel(ReferenceModel model, BiasViewFn view,
                     std::function<void(const TypingInstance&)> observer)
    : model_(std::move(model)), view_(std::move(view)), observer_(std::move(observer)) {}

BiasModel BiasModel::train(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                           BiasViewFn view, const ModelConfig& config, std::uint64_t seed,
                           std::function<void(const TypingInstance&)> observer) {
  std::vector<TypingInstance> views;
  for (const auto& x : train_set) {
    auto v = view(x);
    if (!v) continue;
    if (observer) observer(*v);
    views.push_back(std::move(*v));
  }
  ReferenceModel model(labels, config, seed);
  if (views.empty()) {
    log_warning("bias view undefined on every training instance; bias model left untrained");
  } else {
    BceObjective objective(views);
    train_model(model, views.size(), objective, seed);
  }
  return BiasModel(std::move(model), std::move(view), std::move(observer));
}

std::vector<double> BiasModel::logits(const TypingInstance& original) const {
  auto v = view_(original);
  if (!v) return std::vector<double>(model_.num_types(), 0.0);
  if (observer_) observer_(*v);
  return model_.logits(*v);
}

// ---- objectives --------------------------------------------------------------

double PoeObjective::batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                                Gradient& grad) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  const std::size_t T = model.num_types();
  std::vector<double> z(T), dz(T);
  double loss = 0.0;
  for (auto i : batch) {
    const auto enc = encode_input(model, data_[i], i);
    model.logits_into(enc, z);
    for (std::size_t t = 0; t < T; ++t) z[t] += bias_[i][t];
    const auto y = gold_vector(model.labels(), data_[i].gold);
    loss += bce_with_grad(z, y, dz, inv);
    model.backward(enc, dz, {}, grad);
  }
  return loss;
}

double FocalObjective::batch_loss(const ReferenceModel& model, std::span<const std::size_t> batch,
                                  Gradient& grad) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  const std::size_t T = model.num_types();
  std::vector<double> z(T), dz(T);
  double loss = 0.0;
  for (auto i : batch) {
    const auto enc = encode_input(model, data_[i], i);
    model.logits_into(enc, z);
    const auto y = gold_vector(model.labels(), data_[i].gold);
    for (std::size_t t = 0; t < T; ++t) {
      const double w = std::pow(1.0 - logistic(bias_[i][t]), gamma_) * inv;
      loss += w * (softplus(z[t]) - y[t] * z[t]);
      dz[t] = w * (logistic(z[t]) - y[t]);
    }
    model.backward(enc, dz, {}, grad);
  }
  return loss;
}

LearnedMixinObjective::LearnedMixinObjective(std::span<const TypingInstance> data,
                                             std::vector<std::vector<double>> bias_logits,
                                             std::size_t hidden_size, double beta, bool plus_h,
                                             std::optional<double> fixed_gate)
    : data_(data),
      bias_(std::move(bias_logits)),
      beta_(beta),
      plus_h_(plus_h),
      fixed_gate_(fixed_gate),
      gate_(hidden_size + 1, 0.0),
      gate_grad_(hidden_size + 1, 0.0) {}

double LearnedMixinObjective::batch_loss(const ReferenceModel& model,
                                         std::span<const std::size_t> batch, Gradient& grad) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  const std::size_t T = model.num_types();
  const std::size_t H = model.hidden_size();
  std::vector<double> z(T), dz(T), dh(H);
  double loss = 0.0;
  for (auto i : batch) {
    const auto enc = encode_input(model, data_[i], i);
    model.logits_into(enc, z);
    const auto& zb = bias_[i];
    const double pre =
        kernels::dot(std::span<const double>(gate_.data(), H), enc.hidden) + gate_[H];
    const double g = fixed_gate_ ? *fixed_gate_ : softplus(pre);
    const auto y = gold_vector(model.labels(), data_[i].gold);
    double dg = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double zc = z[t] + g * zb[t];
      loss += inv * (softplus(zc) - y[t] * zc);
      dz[t] = inv * (logistic(zc) - y[t]);
      dg += dz[t] * zb[t];
      if (plus_h_) {
        const double u = g * zb[t];
        loss += inv * beta_ * binary_entropy(u);
        dg += inv * beta_ * binary_entropy_grad(u) * zb[t];
      }
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    if (!fixed_gate_) {
      const double dpre = dg * logistic(pre);
      kernels::axpy(dpre, enc.hidden, std::span<double>(gate_grad_.data(), H));
      gate_grad_[H] += dpre;
      kernels::axpy(dpre, std::span<const double>(gate_.data(), H), dh);
    }
    model.backward(enc, dz, dh, grad);
  }
  return loss;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(kernels::dot(a, a));
  const double nb = std::sqrt(kernels::dot(b, b));
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return kernels::dot(a, b) / (na * nb);
}

namespace {

std::vector<double> softmax(std::span<const double> x, double tau) {
  std::vector<double> q(x.size());
  double mx = -INFINITY;
  for (double v : x) mx = std::max(mx, v / tau);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (q[i] = std::exp(x[i] / tau - mx));
  for (auto& v : q) v /= s;
  return q;
}

std::vector<double> log_softmax(std::span<const double> x, double tau) {
  std::vector<double> l(x.size());
  double mx = -INFINITY;
  for (double v : x) mx = std::max(mx, v / tau);
  double s = 0.0;
  for (double v : x) s += std::exp(v / tau - mx);
  const double lse = mx + std::log(s);
  for (std::size_t i = 0; i < x.size(); ++i) l[i] = x[i] / tau - lse;
  return l;
}

}  // namespace

double softmax_similarity(std::span<const double> a, std::span<const double> b, double tau) {
  const auto qa = softmax(a, tau);
  const auto lb = log_softmax(b, tau);
  double s = 0.0;
  for (std::size_t i = 0; i < qa.size(); ++i) s += qa[i] * lb[i];
  return s;
}

ContrastiveObjective::ContrastiveObjective(std::span<const TypingInstance> data,
                                           std::vector<std::optional<TypingInstance>> bias_views,
                                           std::vector<std::vector<TypingInstance>> positives,
                                           ContrastiveVariant variant, double lambda, double tau)
    : data_(data),
      views_(std::move(bias_views)),
      positives_(std::move(positives)),
      variant_(variant),
      lambda_(lambda),
      tau_(tau) {
  if (views_.size() != data_.size()) throw ArgumentError("one bias view slot per instance");
  positives_.resize(data_.size());
}

double ContrastiveObjective::similarity(std::span<const double> a, std::span<const double> b,
                                        std::span<double> da, std::span<double> db) const {
  const std::size_t n = a.size();
  if (variant_ == ContrastiveVariant::Cosine) {
    const double na = std::sqrt(kernels::dot(a, a));
    const double nb = std::sqrt(kernels::dot(b, b));
    if (na < 1e-12 || nb < 1e-12) {
      std::fill(da.begin(), da.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);
      return 0.0;
    }
    const double s = kernels::dot(a, b) / (na * nb);
    for (std::size_t i = 0; i < n; ++i) {
      da[i] = b[i] / (na * nb) - s * a[i] / (na * na);
      db[i] = a[i] / (na * nb) - s * b[i] / (nb * nb);
    }
    return s;
  }
  const auto qa = softmax(a, tau_);
  const auto qb = softmax(b, tau_);
  const auto lb = log_softmax(b, tau_);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += qa[i] * lb[i];
  for (std::size_t i = 0; i < n; ++i) {
    da[i] = qa[i] * (lb[i] - s) / tau_;
    db[i] = (qa[i] - qb[i]) / tau_;
  }
  return s;
}

double ContrastiveObjective::batch_loss(const ReferenceModel& model,
                                        std::span<const std::size_t> batch, Gradient& grad) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  const std::size_t T = model.num_types();
  const std::size_t H = model.hidden_size();
  std::vector<double> z(T), dz(T), dh(H), da(H), db(H);
  double loss = 0.0;
  for (auto i : batch) {
    const auto enc = encode_input(model, data_[i], i);
    model.logits_into(enc, z);
    const auto y = gold_vector(model.labels(), data_[i].gold);
    loss += bce_with_grad(z, y, dz, inv);
    std::fill(dh.begin(), dh.end(), 0.0);
    if (lambda_ != 0.0) {
      if (views_[i]) {
        const auto venc = model.encode(*views_[i]);
        const double c = lambda_ * inv;
        loss += c * similarity(enc.hidden, venc.hidden, da, db);
        kernels::axpy(c, da, dh);
        kernels::scale(c, db);
        model.backward(venc, {}, db, grad);
      }
      const auto& pos = positives_[i];
      if (!pos.empty()) {
        const double c = -lambda_ * inv / static_cast<double>(pos.size());
        for (const auto& p : pos) {
          const auto penc = model.encode(p);
          loss += c * similarity(enc.hidden, penc.hidden, da, db);
          kernels::axpy(c, da, dh);
          kernels::scale(c, db);
          model.backward(penc, {}, db, grad);
        }
      }
    }
    model.backward(enc, dz, dh, grad);
  }
  return loss;
}

// ---- trainers ----------------------------------------------------------------

ReferenceModel train_augmented(std::span<const TypingInstance> train_set,
                               std::span<const TypingInstance> counterfactual_set,
                               const LabelSpace& labels, const DebiasConfig& config, std::uint64_t seed,
                               TrainLog* log) {
  if (counterfactual_set.empty())
    log_warning("empty counterfactual set; augmentation training equals baseline training");
  std::vector<TypingInstance> all(train_set.begin(), train_set.end());
  all.insert(all.end(), counterfactual_set.begin(), counterfactual_set.end());
  TrainOptions options;
  if (config.warm_start) options.warm_start = train_reference(train_set, labels, config.model, seed);
  return train_reference(all, labels, config.model, seed, log, options);
}

AfliteResult aflite_filter(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                           const AfliteConfig& config, std::uint64_t seed) {
  AfliteResult result;
  const std::size_t n = train_set.size();
  const auto target = static_cast<std::size_t>(std::ceil(config.target_rate * static_cast<double>(n)));
  if (target >= n) {
    log_warning("AFLite target size is not below the training set size; nothing filtered");
    result.kept.assign(train_set.begin(), train_set.end());
    return result;
  }

  // Bag-of-token snapshot over the whole sentence.
  std::map<std::string, std::size_t> vocab;
  std::vector<std::vector<std::size_t>> features(n);
  for (const auto& x : train_set)
    for (const auto& tok : x.sentence()) vocab.emplace(lowercase(tok), 0);
  std::size_t next = 0;
  for (auto& [tok, id] : vocab) id = next++;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& tok : train_set[i].sentence()) features[i].push_back(vocab.at(lowercase(tok)));
    std::sort(features[i].begin(), features[i].end());
    features[i].erase(std::unique(features[i].begin(), features[i].end()), features[i].end());
  }
  std::vector<std::vector<double>> gold(n);
  for (std::size_t i = 0; i < n; ++i) gold[i] = gold_vector(labels, train_set[i].gold);

  const std::size_t V = vocab.size();
  const std::size_t T = labels.size();
  std::vector<double> W(V * T), b(T), z(T);
  auto probe_logits = [&](std::size_t i) {
    std::copy(b.begin(), b.end(), z.begin());
    for (auto f : features[i]) kernels::axpy(1.0, std::span<const double>(W.data() + f * T, T), z);
  };

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  while (pool.size() > target) {
    Rng rng(derive_seed(seed, "aflite-round-" + std::to_string(result.rounds)));
    std::vector<std::size_t> correct(n, 0), held(n, 0);
    for (std::size_t probe = 0; probe < config.probes; ++probe) {
      auto perm = pool;
      rng.shuffle(perm);
      const auto n_fit = std::max<std::size_t>(
          1, static_cast<std::size_t>(config.train_share * static_cast<double>(perm.size())));
      std::fill(W.begin(), W.end(), 0.0);
      std::fill(b.begin(), b.end(), 0.0);
      std::vector<std::size_t> fit(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_fit));
      std::vector<double> dz(T);
      for (std::size_t epoch = 0; epoch < config.probe_epochs; ++epoch) {
        rng.shuffle(fit);
        for (auto i : fit) {
          probe_logits(i);
          for (std::size_t t = 0; t < T; ++t)
            dz[t] = -config.probe_learning_rate * (logistic(z[t]) - gold[i][t]);
          kernels::axpy(1.0, dz, b);
          for (auto f : features[i]) kernels::axpy(1.0, dz, std::span<double>(W.data() + f * T, T));
        }
      }
      for (std::size_t k = n_fit; k < perm.size(); ++k) {
        const auto i = perm[k];
        probe_logits(i);
        const auto pred = prediction_from_logits(labels, z);
        ++held[i];
        if (instance_prf(train_set[i].gold, pred.types).f1 > 0.5) ++correct[i];
      }
    }

    std::vector<std::size_t> tie(n);
    {
      std::vector<std::size_t> ranks(n);
      std::iota(ranks.begin(), ranks.end(), std::size_t{0});
      rng.shuffle(ranks);
      for (std::size_t i = 0; i < n; ++i) tie[i] = ranks[i];
    }
    auto score = [&](std::size_t i) {
      return held[i] ? static_cast<double>(correct[i]) / static_cast<double>(held[i]) : 0.0;
    };
    std::vector<std::size_t> candidates;
    for (auto i : pool)
      if (score(i) > config.tau) candidates.push_back(i);
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t c) {
      const double sa = score(a), sc = score(c);
      if (sa != sc) return sa > sc;
      return tie[a] < tie[c];
    });
    const auto per_round = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.drop_rate * static_cast<double>(pool.size())));
    const std::size_t n_drop = std::min({candidates.size(), per_round, pool.size() - target});
    ++result.rounds;
    if (n_drop == 0) break;
    std::vector<bool> drop(n, false);
    for (std::size_t k = 0; k < n_drop; ++k) {
      drop[candidates[k]] = true;
      result.dropped.push_back(train_set[candidates[k]].id);
    }
    std::erase_if(pool, [&](std::size_t i) { return drop[i]; });
  }
  for (auto i : pool) result.kept.push_back(train_set[i]);
  return result;
}

ReferenceModel train_poe(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                         const BiasViewFn& view, const DebiasConfig& config, std::uint64_t seed,
                         TrainLog* log) {
  auto bias = frozen_bias_logits(train_set, labels, resolve_view(view, config), config, seed);
  auto model = initial_model(train_set, labels, config, seed);
  PoeObjective objective(train_set, std::move(bias));
  train_model(model, train_set.size(), objective, seed, log);
  return model;
}

ReferenceModel train_focal(std::span<const TypingInstance> train_set, const LabelSpace& labels,
                           const BiasViewFn& view, const DebiasConfig& config, std::uint64_t seed,
                           TrainLog* log) {
  auto bias = frozen_bias_logits(train_set, labels, resolve_view(view, config), config, seed);
  auto model = initial_model(train_set, labels, config, seed);
  FocalObjective objective(train_set, std::move(bias), config.gamma);
  train_model(model, train_set.size(), objective, seed, log);
  return model;
}

ReferenceModel train_learned_mixin(std::span<const TypingInstance> train_set,
                                   const LabelSpace& labels, const BiasViewFn& view,
                                   const DebiasConfig& config, bool plus_h, std::uint64_t seed,
                                   TrainLog* log) {
  auto bias = frozen_bias_logits(train_set, labels, resolve_view(view, config), config, seed);
  auto model = initial_model(train_set, labels, config, seed);
  LearnedMixinObjective objective(train_set, std::move(bias), model.hidden_size(), config.beta,
                                  plus_h, config.fixed_gate);
  train_model(model, train_set.size(), objective, seed, log);
  return model;
}

ReferenceModel train_contrastive(std::span<const TypingInstance> train_set,
                                 const LabelSpace& labels, const BiasViewFn& view,
                                 ContrastiveVariant variant,
                                 std::span<const TypingInstance> counterfactual_pairs,
                                 const DebiasConfig& config, std::uint64_t seed, TrainLog* log) {
  const auto fn = resolve_view(view, config);
  std::vector<std::optional<TypingInstance>> views;
  views.reserve(train_set.size());
  for (const auto& x : train_set) views.push_back(fn(x));

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < train_set.size(); ++i) by_id.emplace(train_set[i].id, i);
  std::vector<std::vector<TypingInstance>> positives(train_set.size());
  std::size_t unmatched = 0;
  for (const auto& aug : counterfactual_pairs) {
    auto it = aug.provenance ? by_id.find(aug.provenance->source_id) : by_id.end();
    if (it == by_id.end()) {
      ++unmatched;
      continue;
    }
    positives[it->second].push_back(aug);
  }
  if (unmatched)
    log_warning(std::to_string(unmatched) + " augmented instances have no source in the training set");

  auto model = initial_model(train_set, labels, config, seed);
  ContrastiveObjective objective(train_set, std::move(views), std::move(positives), variant,
                                 config.lambda, config.tau);
  train_model(model, train_set.size(), objective, seed, log);
  return model;
}

Prediction counterfactual_infer(const TypingModel& model, const TypingInstance& instance,
                                const BiasViewFn& view, double alpha) {
  return counterfactual_infer(model, instance, std::span<const BiasViewFn>(&view, 1), alpha);
}

Prediction counterfactual_infer(const TypingModel& model, const TypingInstance& instance,
                                std::span<const BiasViewFn> views, double alpha) {
  auto z = model.logits(instance);
  if (alpha != 0.0) {
    for (const auto& view : views) {
      const auto v = view(instance);
      if (!v) continue;
      const auto zb = model.logits(*v);
      for (std::size_t t = 0; t < z.size(); ++t) z[t] -= alpha * zb[t];
    }
  }
  return prediction_from_logits(model.labels(), z);
}

std::vector<double> CounterfactualModel::logits(const TypingInstance& instance) const {
  auto z = base_.logits(instance);
  if (alpha_ == 0.0) return z;
  if (const auto v = view_(instance)) {
    const auto zb = base_.logits(*v);
    for (std::size_t t = 0; t < z.size(); ++t) z[t] -= alpha_ * zb[t];
  }
  return z;
}

ReferenceModel train_debiased(const DebiasInputs& inputs, const DebiasConfig& config,
                              std::uint64_t seed, TrainLog* log) {
  config.validate();
  if (!inputs.labels) throw ArgumentError("training needs a label space");
  const auto& labels = *inputs.labels;
  const auto& train = inputs.train_set;
  switch (config.method) {
    case DebiasMethod::Baseline:
    case DebiasMethod::CounterfactualInference:
      return train_reference(train, labels, config.model, seed, log);
    case DebiasMethod::Augmentation:
      return train_augmented(train, inputs.counterfactual_set, labels, config, seed, log);
    case DebiasMethod::Aflite: {
      const auto filtered = aflite_filter(train, labels, config.aflite, derive_seed(seed, "aflite"));
      log_info("AFLite kept " + std::to_string(filtered.kept.size()) + " of " +
               std::to_string(train.size()) + " instances");
      return train_reference(filtered.kept, labels, config.model, seed, log);
    }
    case DebiasMethod::Poe:
      return train_poe(train, labels, inputs.view, config, seed, log);
    case DebiasMethod::Focal:
      return train_focal(train, labels, inputs.view, config, seed, log);
    case DebiasMethod::LearnedMixin:
    case DebiasMethod::LearnedMixinH:
      return train_learned_mixin(train, labels, inputs.view, config,
                                 config.method == DebiasMethod::LearnedMixinH, seed, log);
    case DebiasMethod::ContrastiveCe:
    case DebiasMethod::ContrastiveCos:
      return train_contrastive(train, labels, inputs.view,
                               config.method == DebiasMethod::ContrastiveCe ? ContrastiveVariant::Ce
                                                                           : ContrastiveVariant::Cosine,
                               inputs.counterfactual_set, config, seed, log);
  }
  throw ArgumentError("unhandled debias method");
}

// ---- report --------------------------------------------------------------------

PRF evaluate_model(const TypingModel& model, std::span<const TypingInstance> test_set) {
  std::vector<GoldPred> pairs;
  pairs.reserve(test_set.size());
  for (const auto& x : test_set) pairs.push_back({x.gold, predict(model, x).types});
  return macro_prf(pairs);
}

nlohmann::json MitigationReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"method", r.method}, {"U", prf_json(r.original)}, {"A", prf_json(r.augmented)}});
  return {{"schema", "typebias-mitigation"}, {"version", 1}, {"rows", rows_j}};
}

MitigationReport MitigationReport::from_json(const nlohmann::json& j) {
  MitigationReport r;
  for (const auto& row : j.at("rows"))
    r.rows.push_back({row.at("method").get<std::string>(), prf_from_json(row.at("U")),
                      prf_from_json(row.at("A"))});
  return r;
}

std::string render_mitigation_table(const MitigationReport& report) {
  std::size_t width = 6;
  for (const auto& r : report.rows) width = std::max(width, r.method.size());
  auto cell = [](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  auto end_line = [](std::string& line, std::string& out) {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  };
  std::string out;
  std::string line = cell("Method", width);
  for (const char* h : {"U-Prec", "U-Rec", "U-F1", "A-Prec", "A-Rec", "A-F1"}) line += "  " + cell(h, 6);
  end_line(line, out);
  for (const auto& r : report.rows) {
    line = cell(r.method, width);
    for (double v : {r.original.precision, r.original.recall, r.original.f1, r.augmented.precision,
                     r.augmented.recall, r.augmented.f1})
      line += "  " + cell(fmt3(v), 6);
    end_line(line, out);
  }
  return out;
}

}  // namespace typebias
