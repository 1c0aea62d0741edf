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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "typebias/bias_kind.hpp"
#include "typebias/corpus.hpp"
#include "typebias/oracles.hpp"

namespace typebias {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr std::size_t kFillTopK = 10;

// Cloze templates:
//   MentionContext      "<mention> is a type of <mask>."
//   LexicalOverlapping  "<left> <new mention> <right>. <new mention> is a type of <mask>."
//   NamedEntity         "The <attribute> <entity> is a type of <mask>."
//   Pronoun             "<left> <name> <right>. <name> is a type of <mask>."
// Tokens are joined with single spaces. The sentence-final "." is only added
// when the sentence does not already end in terminal punctuation (closing
// quotes and brackets are looked through).
//
// `substitution` is required for LexicalOverlapping and Pronoun; `entity`
// (a span over instance.sentence()) is required for NamedEntity.
std::string build_prompt(const TypingInstance& instance, BiasKind kind,
                         const TypingInstance* substitution = nullptr,
                         const std::optional<NerSpan>& entity = std::nullopt);

// Fill tokens that resolve to a label-space type, mapped to canonical form.
TypeSet filter_type_answers(const MaskedFillResult& fill, const LabelSpace& label_space);

enum class Verdict { Biased, Unbiased, Undecided };

std::string_view to_string(Verdict verdict);
Verdict verdict_from_string(std::string_view name);

struct PromptEvidence {
  std::string prompt;
  MaskedFillResult fill;
  TypeSet types;
  double f1 = 0.0;
};

struct BiasVerdict {
  std::string instance_id;
  BiasKind bias_kind = BiasKind::MentionContext;
  Verdict verdict = Verdict::Undecided;
  // Types and F1 of the prompt; for kinds that average several substituted
  // prompts (LexicalOverlapping, Pronoun) plm_f1 is the mean over
  // `evidence` and plm_types is the union of the per-prompt types.
  TypeSet plm_types;
  double plm_f1 = 0.0;
  std::vector<PromptEvidence> evidence;
  std::string reason;
};

nlohmann::json verdict_to_json(const BiasVerdict& verdict);
BiasVerdict verdict_from_json(const nlohmann::json& j);

// The entity of the first NER span lying inside the mention, if any.
std::optional<NerSpan> mention_entity(const TypingInstance& instance, std::span<const NerSpan> spans);

// Threshold rule alone: ">" kinds (MentionContext, NamedEntity) are biased
// above the threshold, "<" kinds (LexicalOverlapping, Pronoun) below it.
// Equality is undecided.
Verdict apply_threshold(BiasKind kind, double plm_f1, double threshold);

// `perturbations` are the substituted instances for LexicalOverlapping
// (synonym candidates) and Pronoun (name or antecedent substitutions).
BiasVerdict classify_bias(const TypingInstance& instance, BiasKind kind, const Oracles& oracles,
                          const LabelSpace& label_space, double threshold = kDefaultThreshold,
                          std::span<const TypingInstance> perturbations = {});

// Single-prompt evaluation shared by classification and augmentation.
PromptEvidence run_prompt(const std::string& prompt, const TypeSet& gold, const Oracles& oracles,
                          const LabelSpace& label_space);

}  // namespace typebias
