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

#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "typebias/error.hpp"
#include "typebias/kernels.hpp"
#include "typebias/synthetic.hpp"
#include "typebias/typers.hpp"

using namespace typebias;
using namespace typebias::testing;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.dim = 4;
  c.buckets = 61;
  c.epochs = 2;
  c.batch_size = 8;
  return c;
}

}  // namespace

TEST_CASE("bias views") {
  const auto t1 = make_instance("T1", "the gunman first opened", "fire", ".", {"event"});
  const auto v = bias_view(t1, BiasKind::MentionContext);
  CHECK(v.mention == Tokens{"fire"});
  CHECK(v.left.empty());
  CHECK(v.right.empty());
  CHECK(v.gold == t1.gold);

  const auto empty = bias_view(t1, BiasKind::Overgeneralization);
  CHECK(empty.mention.empty());
  CHECK(empty.left.empty());

  const auto t7 = make_instance("T7", "", "Her", "other film credits include", {"woman"});
  CHECK(bias_view(t7, BiasKind::Pronoun).mention == Tokens{"Her"});
  CHECK(bias_view(t7, BiasKind::Pronoun).right.empty());
  CHECK_THROWS_AS(bias_view(t1, BiasKind::NamedEntity), ArgumentError);
  CHECK(bias_view(t1, BiasKind::NamedEntity, Tokens{"Ann"}).mention == Tokens{"Ann"});
  CHECK_THROWS_AS(make_bias_view_fn(BiasKind::NamedEntity), ArgumentError);
  CHECK_FALSE(make_bias_view_fn(BiasKind::Pronoun)(t1).has_value());
}

TEST_CASE("prediction thresholding") {
  const auto labels = LabelSpace::from_types(std::vector<std::string>{"a", "b", "c"});
  const std::vector<double> some = {2.0, -1.0, 0.5};
  CHECK(prediction_from_logits(labels, some).types == TypeSet{"a", "c"});
  const std::vector<double> none = {-2.0, -1.0, -3.0};
  CHECK(prediction_from_logits(labels, none).types == TypeSet{"b"});
  const std::vector<double> tie = {-1.0, -1.0, -4.0};
  CHECK(prediction_from_logits(labels, tie).types == TypeSet{"a"});
  // exactly 0.5 is not above the threshold
  const std::vector<double> half = {0.0, -1.0, -1.0};
  CHECK(prediction_from_logits(labels, half).types == TypeSet{"a"});
  const auto p = prediction_from_logits(labels, some);
  CHECK(p.scores.size() == 3);
  CHECK(p.scores.at("a") == doctest::Approx(logistic(2.0)).epsilon(1e-12));
}

TEST_CASE("logistic and softplus stay finite") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  for (double z : {-5.0, -0.3, 0.0, 1.7, 9.0})
    CHECK(std::log(logistic(z) / (1 - logistic(z))) == doctest::Approx(z).epsilon(1e-9));
}

TEST_CASE("training is deterministic and checkpoints round-trip") {
  const auto data = make_shortcut_dataset(200, 50, 5, 1.0, 4);
  const auto a = train_reference(data.train, data.labels, tiny(), 9);
  const auto b = train_reference(data.train, data.labels, tiny(), 9);
  CHECK(a.params() == b.params());
  const auto c = train_reference(data.train, data.labels, tiny(), 10);
  CHECK_FALSE(a.params() == c.params());

  auto zero = tiny();
  zero.epochs = 0;
  CHECK(train_reference(data.train, data.labels, zero, 9).params() ==
        ReferenceModel(data.labels, zero, 9).params());

  TempDir dir;
  a.save(dir / "m.json");
  const auto back = ReferenceModel::load(dir / "m.json");
  CHECK(back.params() == a.params());
  CHECK(back.config() == a.config());
  CHECK(back.labels().types() == a.labels().types());
  for (const auto& x : data.biased_test) CHECK(back.logits(x) == a.logits(x));

  auto j = a.to_json();
  j["format"] = "other";
  CHECK_THROWS_AS(ReferenceModel::from_json(j), ValidationError);
  j = a.to_json();
  j["params"]["null_bias"].erase(0);
  CHECK_THROWS_AS(ReferenceModel::from_json(j), ValidationError);
  CHECK_THROWS_AS(train_reference({}, data.labels, tiny(), 1), ArgumentError);
  CHECK_THROWS_AS(ReferenceModel(LabelSpace{}, tiny(), 1), ArgumentError);
}

TEST_CASE("scalar and avx2 training give identical models") {
  if (!kernels::available(kernels::Isa::Avx2)) return;
  const auto data = make_shortcut_dataset(150, 10, 4, 1.0, 2);
  const auto before = kernels::active().isa;
  kernels::select(kernels::Isa::Scalar);
  const auto s = train_reference(data.train, data.labels, tiny(), 3);
  kernels::select(kernels::Isa::Avx2);
  const auto v = train_reference(data.train, data.labels, tiny(), 3);
  kernels::select(before);
  CHECK(s.params() == v.params());
}

TEST_CASE("model config validation") {
  ModelConfig c;
  CHECK(ModelConfig::from_json(c.to_json()) == c);
  auto j = c.to_json();
  j["input_dropout"] = 0.9;
  CHECK_THROWS_AS(ModelConfig::from_json(j), ValidationError);
  j = c.to_json();
  j["dim"] = 0;
  CHECK_THROWS(ModelConfig::from_json(j));
}

TEST_CASE("token-free input reads the null bias") {
  const auto labels = LabelSpace::from_types(std::vector<std::string>{"a", "b"});
  ReferenceModel m(labels, tiny(), 1);
  m.params().null_bias = {0.7, -0.2};
  m.params().bias = {5.0, 5.0};
  const TypingInstance empty;
  CHECK(m.logits(empty) == std::vector<double>{0.7, -0.2});
  const auto x = make_instance("x", "", "word", "", {"a"});
  CHECK(m.logits(x) != std::vector<double>{0.7, -0.2});

  // without input dropout nothing trains it
  const auto data = make_shortcut_dataset(60, 5, 3, 1.0, 1);
  auto cfg = tiny();
  cfg.input_dropout = 0.0;
  const auto t = train_reference(data.train, data.labels, cfg, 2);
  for (double v : t.params().null_bias) CHECK(v == 0.0);
  cfg.input_dropout = 0.3;
  const auto u = train_reference(data.train, data.labels, cfg, 2);
  bool moved = false;
  for (double v : u.params().null_bias) moved |= v != 0.0;
  CHECK(moved);
}

TEST_CASE("reference gradients match finite differences") {
  for (const auto& line : gradient_suite()) {
    CAPTURE(line.name);
    CAPTURE(line.detail);
    CHECK(line.ok);
  }
}
