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

#include "doctest.h"
#include "support.hpp"
#include "typebias/prompting.hpp"
#include "typebias/synthetic.hpp"

using namespace typebias;
using namespace typebias::testing;

TEST_CASE("synthetic world round-trips") {
  const auto d = make_shortcut_dataset(50, 20, 6, 1.0, 3);
  TempDir dir;
  d.world.save(dir / "world.json");
  const auto back = SyntheticWorld::load(dir / "world.json");
  CHECK(back.to_json() == d.world.to_json());
  CHECK(back.label_space().types() == d.labels.types());
  // make_transport understands the saved world
  Oracles o;
  o.set(OracleKind::Ner, make_transport("synthetic:" + (dir / "world.json").string()));
  CHECK_NOTHROW(o.ner(d.train[0].sentence()));
}

TEST_CASE("synthetic oracles give well-formed answers") {
  const auto d = make_shortcut_dataset(60, 60, 5, 1.0, 9);
  const auto o = synthetic_oracles(d.world);
  for (const auto& x : d.debiased_test) {
    if (x.mention.size() > 1) {
      const auto p = o.depparse(x.mention, x.left, x.right);
      REQUIRE(p);
      CHECK(p->heads.size() == x.mention.size());
      CHECK_FALSE(p->roots().empty());
    }
    const auto fill = o.masked_fill(join_tokens(x.mention) + " is a type of <mask>.", 10);
    CHECK(fill.size() <= 10);
    for (std::size_t i = 1; i < fill.size(); ++i) CHECK(fill[i - 1].score >= fill[i].score);
    CHECK(filter_type_answers(fill, d.labels).size() <= fill.size());
  }
}

TEST_CASE("generation is seed-determined") {
  ShortcutConfig c;
  c.n_train = 100;
  c.n_test = 30;
  c.n_types = 4;
  c.seed = 12;
  const auto a = make_shortcut_dataset(c);
  const auto b = make_shortcut_dataset(c);
  CHECK(a.train == b.train);
  CHECK(a.debiased_test == b.debiased_test);
  c.seed = 13;
  CHECK_FALSE(make_shortcut_dataset(c).train == a.train);
}
