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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "typebias/corpus.hpp"
#include "typebias/oracles.hpp"
#include "typebias/prompting.hpp"

// Counterfactual augmentation: label-preserving edits that remove the
// surface feature a biased instance could be typed from.
namespace typebias {

struct EntityGroups {
  std::set<std::string> informative;
  std::set<std::string> non_informative;
};

struct EntityPool {
  std::map<NerType, EntityGroups> groups;

  bool empty() const { return groups.empty(); }
  bool is_informative(NerType type, const std::string& entity) const;
  bool is_non_informative(NerType type, const std::string& entity) const;
};

struct NameLists {
  std::vector<std::string> masculine;
  std::vector<std::string> feminine;

  // names.masculine.txt / names.feminine.txt in `dir`, one name per line.
  static NameLists load(const std::filesystem::path& dir);
  // Throws ArgumentError when a list is empty or the lists share a name.
  void validate() const;
};

enum class Gender { Masculine, Feminine };

// he/him/his/himself, she/her/hers/herself (case-insensitive).
std::optional<Gender> pronoun_gender(const std::string& token);

// True when `word` names, or shares a word with, one of the gold types.
bool overlaps_gold(const std::string& word, const TypeSet& gold, const LabelSpace& label_space);

std::vector<std::size_t> find_label_overlap_tokens(const TypingInstance& instance,
                                                   const LabelSpace& label_space);

// Synonyms of sentence[index] as token lists, dropping the word itself,
// duplicates and any synonym sharing a word with the gold types. nullopt
// when the sense oracle has no answer.
std::optional<std::vector<Tokens>> usable_synonyms(const Tokens& sentence, std::size_t index, const TypeSet& gold,
                                    const Oracles& oracles, const LabelSpace& label_space);

// One candidate per surviving synonym of each overlapped mention word.
std::vector<TypingInstance> lexical_substitute(const TypingInstance& instance, const Oracles& oracles,
                                               const LabelSpace& label_space);

EntityPool build_entity_pool(std::span<const TypingInstance> instances, const Oracles& oracles,
                             const LabelSpace& label_space, double threshold = kDefaultThreshold);

enum class SubstitutionDirection { ToNonInformative, ToInformative };

struct NeSubstitution {
  std::optional<TypingInstance> instance;
  std::string reason;  // set when instance is absent
};

// Replaces the pooled entity inside the mention (and every other occurrence
// in the instance) by an entity of the same NER type drawn from the other
// group. `spans` are the NER spans over instance.sentence().
NeSubstitution ne_substitute(const TypingInstance& instance, std::span<const NerSpan> spans,
                             const EntityPool& pool, std::uint64_t seed,
                             SubstitutionDirection direction = SubstitutionDirection::ToNonInformative);

// Antecedent substitution when coreference finds one, otherwise up to
// `n_names` gender-matched names sampled without replacement.
std::vector<TypingInstance> pronoun_concretize(const TypingInstance& instance, const Oracles& oracles,
                                               const NameLists& names, std::uint64_t seed,
                                               std::size_t n_names = 5);

// Mention reduced to its dependency root.
std::optional<TypingInstance> headword_truncate(const TypingInstance& instance, const Oracles& oracles);

struct AugmentConfig {
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  std::size_t n_names = 5;
  bool lexical = true;
  bool named_entity = true;
  bool pronoun = true;
  bool dependency = true;
};

struct AugmentStats {
  std::size_t instances = 0;
  // (instance, strategy) attempts that needed an oracle, and how many failed.
  std::size_t attempts = 0;
  std::size_t oracle_failures = 0;
  std::map<BiasKind, std::size_t> candidates;
  std::map<BiasKind, std::size_t> kept;
};

struct AugmentResult {
  std::vector<TypingInstance> instances;
  AugmentStats stats;
};

// Oracle failures on one instance are logged, counted and skipped.
AugmentResult build_counterfactual_set(std::span<const TypingInstance> dataset, const Oracles& oracles,
                                       const LabelSpace& label_space, const NameLists& names,
                                       const AugmentConfig& config = {});

}  // namespace typebias
