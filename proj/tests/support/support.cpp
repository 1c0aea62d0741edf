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


#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "typebias/error.hpp"
#include "typebias/rng.hpp"
#include "typebias/synthetic.hpp"

namespace fs = std::filesystem;

namespace typebias::testing {

fs::path source_dir() { return TYPEBIAS_SOURCE_DIR; }
fs::path worked_dir() { return source_dir() / "data" / "worked"; }
fs::path names_dir() { return source_dir() / "data" / "names"; }

TempDir::TempDir(const std::string& tag) {
  std::string pattern = (fs::temp_directory_path() / ("typebias-" + tag + "-XXXXXX")).string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

double truncate3(double x) { return std::floor(x * 1000.0) / 1000.0; }

TypingInstance make_instance(const std::string& id, const std::string& left, const std::string& mention,
                             const std::string& right, const TypeSet& gold) {
  TypingInstance x;
  x.id = id;
  x.left = split_tokens(left);
  x.mention = split_tokens(mention);
  x.right = split_tokens(right);
  x.gold = gold;
  return x;
}

const TypingInstance& WorkedFixture::by_id(const std::string& id) const {
  for (const auto& x : instances)
    if (x.id == id) return x;
  throw std::out_of_range("no fixture instance " + id);
}

WorkedFixture load_worked_fixture() {
  const fs::path dir = worked_dir();
  WorkedFixture f;
  f.labels = LabelSpace::load(dir / "labels.txt", dir / "tiers.tsv");
  f.instances = load_dataset(dir / "instances.jsonl", &f.labels);
  f.names = NameLists::load(names_dir());
  for (OracleKind k : kAllOracleKinds)
    f.oracles.set(k, StubTable::load(dir / ("stub." + std::string(to_string(k)) + ".jsonl")));
  return f;
}

// ---- gradients -------------------------------------------------------------

namespace {

struct Coord {
  double* param;
  double analytic;
};

double loss_at(const ReferenceModel& model, Objective& objective, std::span<const std::size_t> batch,
               Gradient& scratch) {
  scratch.clear(model.config().dim);
  objective.clear_aux_grad();
  return objective.batch_loss(model, batch, scratch);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

GradCheck check_gradients(ReferenceModel& model, Objective& objective,
                          std::span<const std::size_t> batch, double h, double floor) {
  const std::size_t d = model.config().dim;
  Gradient grad = model.make_gradient();
  grad.clear(d);
  objective.clear_aux_grad();
  objective.batch_loss(model, batch, grad);

  auto& p = model.params();
  std::vector<Coord> coords;
  auto rows = [&](std::vector<std::uint32_t> rs, std::vector<double>& param, const std::vector<double>& g) {
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    for (auto r : rs)
      for (std::size_t j = 0; j < d; ++j) coords.push_back({&param[r * d + j], g[r * d + j]});
  };
  rows(grad.mention_rows, p.mention_emb, grad.mention_emb);
  rows(grad.context_rows, p.context_emb, grad.context_emb);
  for (std::size_t i = 0; i < p.weights.size(); ++i) coords.push_back({&p.weights[i], grad.weights[i]});
  for (std::size_t i = 0; i < p.bias.size(); ++i) coords.push_back({&p.bias[i], grad.bias[i]});
  for (std::size_t i = 0; i < p.null_bias.size(); ++i)
    coords.push_back({&p.null_bias[i], grad.null_bias[i]});
  auto aux = objective.aux_params();
  auto aux_grad = objective.aux_grad();
  for (std::size_t i = 0; i < aux.size(); ++i) coords.push_back({&aux[i], aux_grad[i]});

  Gradient scratch = model.make_gradient();
  scratch.clear(d);
  GradCheck result;
  for (const auto& c : coords) {
    const double saved = *c.param;
    *c.param = saved + h;
    const double up = loss_at(model, objective, batch, scratch);
    *c.param = saved - h;
    const double down = loss_at(model, objective, batch, scratch);
    *c.param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(c.analytic), std::abs(numeric), floor});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(c.analytic - numeric) / denom);
    ++result.checked;
  }
  return result;
}

namespace {

ShortcutDataset small_world(std::size_t n_train, std::uint64_t seed) {
  ShortcutConfig c;
  c.n_train = n_train;
  c.n_test = 10;
  c.n_types = 6;
  c.seed = seed;
  return make_shortcut_dataset(c);
}

ModelConfig small_model() {
  ModelConfig m;
  m.dim = 4;
  m.buckets = 97;
  m.init_scale = 0.5;
  m.epochs = 2;
  m.batch_size = 5;
  return m;
}

std::vector<std::vector<double>> random_logits(std::size_t n, std::size_t types, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(n, std::vector<double>(types));
  for (auto& row : out)
    for (auto& v : row) v = rng.uniform(-2.0, 2.0);
  return out;
}

}  // namespace

std::vector<CheckLine> gradient_suite(std::size_t batch_size, double tolerance) {
  const auto data = small_world(batch_size, 3);
  const auto& train = data.train;
  const std::size_t T = data.labels.size();
  std::vector<std::size_t> batch(train.size());
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  const auto bias = random_logits(train.size(), T, 17);

  std::vector<std::optional<TypingInstance>> views;
  std::vector<std::vector<TypingInstance>> positives(train.size());
  const auto view = make_bias_view_fn(BiasKind::MentionContext);
  for (std::size_t i = 0; i < train.size(); ++i) {
    views.push_back(view(train[i]));
    auto pos = train[i];
    pos.mention = {"someone"};
    positives[i].push_back(pos);
    pos.left.insert(pos.left.begin(), "then");
    positives[i].push_back(pos);
  }

  std::vector<CheckLine> lines;
  auto run = [&](const std::string& name, Objective& objective) {
    ReferenceModel model(data.labels, small_model(), 5);
    const auto r = check_gradients(model, objective, batch);
    lines.push_back({name, r.checked > 0 && r.max_rel_error <= tolerance,
                     "max rel err " + fmt("%.2e", r.max_rel_error) + " over " +
                         std::to_string(r.checked) + " params"});
  };

  BceObjective bce(train);
  run("reference", bce);
  {
    // one token-free instance so the null bias sees gradient
    auto with_empty = train;
    with_empty.back().mention.clear();
    with_empty.back().left.clear();
    with_empty.back().right.clear();
    BceObjective bce_empty(with_empty);
    run("reference_empty_input", bce_empty);
  }
  PoeObjective poe(train, bias);
  run("poe", poe);
  FocalObjective focal(train, bias, 2.0);
  run("focal", focal);
  {
    LearnedMixinObjective lm(train, bias, 2 * small_model().dim, 0.0, false);
    auto g = lm.aux_params();
    Rng rng(23);
    for (auto& v : g) v = rng.uniform(-0.5, 0.5);
    run("learned_mixin", lm);
  }
  {
    LearnedMixinObjective lmh(train, bias, 2 * small_model().dim, 0.3, true);
    auto g = lmh.aux_params();
    Rng rng(29);
    for (auto& v : g) v = rng.uniform(-0.5, 0.5);
    run("learned_mixin_h", lmh);
  }
  ContrastiveObjective ce(train, views, positives, ContrastiveVariant::Ce, 0.5, 0.5);
  run("contrastive_ce", ce);
  ContrastiveObjective cos(train, views, positives, ContrastiveVariant::Cosine, 0.5, 0.5);
  run("contrastive_cos", cos);
  return lines;
}

// ---- degenerate settings -----------------------------------------------------

namespace {

// Largest per-batch loss gap between two objectives on the same model.
double max_batch_gap(const ReferenceModel& model, std::size_t n, Objective& a, Objective& b) {
  Gradient ga = model.make_gradient(), gb = model.make_gradient();
  double gap = 0.0;
  const std::size_t bs = model.config().batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t start = 0; start < n; start += bs) {
    const std::span<const std::size_t> batch(order.data() + start, std::min(n, start + bs) - start);
    ga.clear(model.config().dim);
    gb.clear(model.config().dim);
    a.clear_aux_grad();
    b.clear_aux_grad();
    gap = std::max(gap, std::abs(a.batch_loss(model, batch, ga) - b.batch_loss(model, batch, gb)));
  }
  return gap;
}

bool same_predictions(const TypingModel& a, const TypingModel& b, std::span<const TypingInstance> xs) {
  for (const auto& x : xs)
    if (predict(a, x).types != predict(b, x).types) return false;
  return true;
}

bool same_predictions(const TypingModel& a, std::span<const TypingInstance> xs, const BiasViewFn& view,
                      double alpha) {
  for (const auto& x : xs)
    if (predict(a, x).types != counterfactual_infer(a, x, view, alpha).types) return false;
  return true;
}

}  // namespace

std::vector<CheckLine> degenerate_suite(double tolerance) {
  const auto data = small_world(60, 9);
  const auto& train = data.train;
  const auto& test = data.debiased_test;
  const std::size_t T = data.labels.size();
  const ModelConfig mc = small_model();
  const std::uint64_t seed = 4;
  const ReferenceModel probe(data.labels, mc, seed);
  const ReferenceModel baseline = train_reference(train, data.labels, mc, seed);
  const auto bias = random_logits(train.size(), T, 31);
  const std::vector<std::vector<double>> zeros(train.size(), std::vector<double>(T, 0.0));

  DebiasConfig base;
  base.model = mc;
  base.bias_kind = BiasKind::MentionContext;
  const auto view = make_bias_view_fn(BiasKind::MentionContext);

  std::vector<CheckLine> lines;
  auto add = [&](const std::string& name, double gap, bool preds) {
    lines.push_back({name, gap <= tolerance && preds,
                     "batch loss gap " + fmt("%.1e", gap) + (preds ? ", predictions equal" : ", predictions differ")});
  };

  {
    BceObjective ref(train);
    PoeObjective poe(train, zeros);
    DebiasConfig c = base;
    c.method = DebiasMethod::Poe;
    c.zero_bias_logits = true;
    add("poe zero bias logits", max_batch_gap(probe, train.size(), ref, poe),
        same_predictions(baseline, train_poe(train, data.labels, view, c, seed), test));
  }
  {
    BceObjective ref(train);
    FocalObjective focal(train, bias, 0.0);
    DebiasConfig c = base;
    c.method = DebiasMethod::Focal;
    c.gamma = 0.0;
    add("focal gamma=0", max_batch_gap(probe, train.size(), ref, focal),
        same_predictions(baseline, train_focal(train, data.labels, view, c, seed), test));
  }
  {
    BceObjective ref(train);
    LearnedMixinObjective lm(train, bias, probe.hidden_size(), 0.0, false, 0.0);
    DebiasConfig c = base;
    c.method = DebiasMethod::LearnedMixin;
    c.fixed_gate = 0.0;
    add("learned_mixin g=0", max_batch_gap(probe, train.size(), ref, lm),
        same_predictions(baseline, train_learned_mixin(train, data.labels, view, c, false, seed), test));
  }
  {
    std::vector<std::optional<TypingInstance>> views;
    for (const auto& x : train) views.push_back(view(x));
    BceObjective ref(train);
    ContrastiveObjective con(train, views, std::vector<std::vector<TypingInstance>>(train.size()),
                             ContrastiveVariant::Ce, 0.0, 0.1);
    DebiasConfig c = base;
    c.method = DebiasMethod::ContrastiveCe;
    c.lambda = 0.0;
    add("contrastive lambda=0", max_batch_gap(probe, train.size(), ref, con),
        same_predictions(baseline,
                         train_contrastive(train, data.labels, view, ContrastiveVariant::Ce, {}, c, seed),
                         test));
  }
  add("counterfactual inference alpha=0", 0.0, same_predictions(baseline, test, view, 0.0));
  {
    DebiasConfig c = base;
    c.method = DebiasMethod::Augmentation;
    add("augmentation empty set", 0.0,
        same_predictions(baseline, train_augmented(train, {}, data.labels, c, seed), test));
  }
  return lines;
}

}  // namespace typebias::testing
