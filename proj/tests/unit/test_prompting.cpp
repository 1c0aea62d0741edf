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
#include "typebias/error.hpp"
#include "typebias/prompting.hpp"

using namespace typebias;
using namespace typebias::testing;

namespace {

LabelSpace space(std::vector<std::string> types) { return LabelSpace::from_types(types); }

MaskedFillResult fills(std::vector<std::string> tokens) {
  MaskedFillResult out;
  double s = 1.0;
  for (auto& t : tokens) out.push_back({t, s -= 0.05});
  return out;
}

}  // namespace

TEST_CASE("prompt templates") {
  const auto war = make_instance("w", "Then", "the war", "ended .", {"war"});
  CHECK(build_prompt(war, BiasKind::MentionContext) == "the war is a type of <mask>.");

  auto sub = war;
  sub.mention = {"the", "conflict"};
  CHECK(build_prompt(war, BiasKind::LexicalOverlapping, &sub) ==
        "Then the conflict ended . the conflict is a type of <mask>.");
  // a sentence without final punctuation gets one
  const auto bare = make_instance("b", "Then", "he", "left", {"person"});
  auto named = bare;
  named.mention = {"Judith"};
  CHECK(build_prompt(bare, BiasKind::Pronoun, &named) == "Then Judith left. Judith is a type of <mask>.");

  const auto ent = make_instance("e", "", "Jintara Poonlarp", "sang .", {"singer"});
  CHECK(build_prompt(ent, BiasKind::NamedEntity, nullptr, NerSpan{0, 2, NerType::Person}) ==
        "The person Jintara Poonlarp is a type of <mask>.");
  CHECK(build_prompt(ent, BiasKind::NamedEntity, nullptr, NerSpan{0, 2, NerType::WorkOfArt}) ==
        "The work of art Jintara Poonlarp is a type of <mask>.");

  CHECK_THROWS_AS(build_prompt(war, BiasKind::LexicalOverlapping), ArgumentError);
  CHECK_THROWS_AS(build_prompt(war, BiasKind::Pronoun), ArgumentError);
  CHECK_THROWS_AS(build_prompt(ent, BiasKind::NamedEntity), ArgumentError);
  CHECK_THROWS_AS(build_prompt(war, BiasKind::Dependency), ArgumentError);
}

TEST_CASE("filter_type_answers") {
  const auto pets = space({"bird", "cat", "rabbit", "dog"});
  CHECK(filter_type_answers(fills({"bird", "cat", "vampire", "rabbit", "dog"}), pets) ==
        TypeSet{"bird", "cat", "rabbit", "dog"});
  CHECK(filter_type_answers({}, pets).empty());
  // case and plural forms collapse onto one type
  CHECK(filter_type_answers(fills({"Cats", "cat", "DOG"}), pets) == TypeSet{"cat", "dog"});
}

TEST_CASE("threshold rule") {
  CHECK(apply_threshold(BiasKind::MentionContext, 0.75, 0.5) == Verdict::Biased);
  CHECK(apply_threshold(BiasKind::MentionContext, 0.0, 0.5) == Verdict::Unbiased);
  CHECK(apply_threshold(BiasKind::NamedEntity, 0.5, 0.5) == Verdict::Undecided);
  CHECK(apply_threshold(BiasKind::LexicalOverlapping, 0.2, 0.5) == Verdict::Biased);
  CHECK(apply_threshold(BiasKind::Pronoun, 0.9, 0.5) == Verdict::Unbiased);
  CHECK(apply_threshold(BiasKind::Pronoun, 0.5, 0.5) == Verdict::Undecided);
  // monotone in the threshold
  for (double f : {0.1, 0.4, 0.6}) {
    if (apply_threshold(BiasKind::MentionContext, f, 0.3) != Verdict::Biased)
      CHECK(apply_threshold(BiasKind::MentionContext, f, 0.7) != Verdict::Biased);
    if (apply_threshold(BiasKind::Pronoun, f, 0.3) == Verdict::Biased)
      CHECK(apply_threshold(BiasKind::Pronoun, f, 0.7) == Verdict::Biased);
  }
}

TEST_CASE("classify_bias on mention-only prompts") {
  const auto labels = space({"war", "battle", "conflict", "violence", "warfare", "injury", "shooting", "event",
                             "energy", "heat", "explosion", "fire", "gas"});
  auto stub = std::make_shared<StubTable>();
  stub->add(masked_fill_request("the war is a type of <mask>.", kFillTopK),
            {true, encode_fill(fills({"war", "battle", "conflict", "violence", "warfare"})), {}});
  stub->add(masked_fill_request("fire is a type of <mask>.", kFillTopK),
            {true, encode_fill(fills({"energy", "heat", "explosion", "fire", "gas"})), {}});
  Oracles o;
  o.set(OracleKind::MaskedFill, stub);

  const auto war = make_instance("w", "", "the war", "ended .", {"war", "battle", "conflict"});
  const auto v = classify_bias(war, BiasKind::MentionContext, o, labels);
  CHECK(v.verdict == Verdict::Biased);
  CHECK(v.plm_f1 == doctest::Approx(0.75));
  CHECK(v.plm_f1 == instance_prf(war.gold, v.plm_types).f1);
  REQUIRE(v.evidence.size() == 1);
  CHECK(v.evidence[0].prompt == "the war is a type of <mask>.");

  const auto fire = make_instance("f", "", "fire", "spread .", {"injury", "shooting", "event", "violence"});
  const auto u = classify_bias(fire, BiasKind::MentionContext, o, labels);
  CHECK(u.verdict == Verdict::Unbiased);
  CHECK(u.plm_f1 == 0.0);

  // raising the threshold above 0.75 flips the war instance
  CHECK(classify_bias(war, BiasKind::MentionContext, o, labels, 0.8).verdict == Verdict::Unbiased);
  CHECK(classify_bias(war, BiasKind::MentionContext, o, labels, v.plm_f1).verdict == Verdict::Undecided);
}

TEST_CASE("named-entity verdict without an entity is undecided") {
  const auto labels = space({"person"});
  auto ner = std::make_shared<StubTable>(StubMode::Lenient);
  Oracles o;
  o.set(OracleKind::Ner, ner);
  o.set(OracleKind::MaskedFill, std::make_shared<StubTable>(StubMode::Lenient));
  const auto x = make_instance("n", "", "the lake", "froze .", {"lake"});
  const auto v = classify_bias(x, BiasKind::NamedEntity, o, labels);
  CHECK(v.verdict == Verdict::Undecided);
  CHECK_FALSE(v.reason.empty());
}

TEST_CASE("mention_entity picks a span inside the mention") {
  const auto x = make_instance("m", "Yesterday", "Ann Lee", "met Bo .", {"person"});
  const std::vector<NerSpan> spans = {{0, 1, NerType::Date}, {1, 3, NerType::Person}, {4, 5, NerType::Person}};
  CHECK(mention_entity(x, spans) == NerSpan{1, 3, NerType::Person});
  CHECK(mention_entity(x, std::vector<NerSpan>{{4, 5, NerType::Person}}) == std::nullopt);
}

TEST_CASE("verdict json round trip") {
  BiasVerdict v;
  v.instance_id = "x";
  v.bias_kind = BiasKind::Pronoun;
  v.verdict = Verdict::Biased;
  v.plm_types = {"person", "woman"};
  v.plm_f1 = 0.25;
  v.evidence.push_back({"p <mask>.", {{"person", 0.5}}, {"person"}, 0.25});
  const auto back = verdict_from_json(verdict_to_json(v));
  CHECK(back.instance_id == "x");
  CHECK(back.bias_kind == BiasKind::Pronoun);
  CHECK(back.verdict == Verdict::Biased);
  CHECK(back.plm_types == v.plm_types);
  CHECK(back.plm_f1 == 0.25);
  CHECK(verdict_from_string("undecided") == Verdict::Undecided);
}
