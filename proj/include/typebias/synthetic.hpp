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
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "typebias/augment.hpp"
#include "typebias/corpus.hpp"
#include "typebias/oracles.hpp"

// Planted-shortcut benchmark: a tiny generated world whose mention head
// word gives the label away while a context cue word determines it.
namespace typebias {

struct SyntheticClass {
  std::string word;  // type name, also the shortcut mention token
  std::string cue;   // context keyword that determines the gold type
  Tier tier = Tier::UltraFine;
};

// Everything the synthetic oracles know. Saved next to generated data so
// `synthetic:<world.json>` can answer later runs.
struct SyntheticWorld {
  std::vector<SyntheticClass> classes;
  std::vector<std::string> fillers;
  std::vector<std::string> modifiers;
  std::vector<std::string> neutral_mentions;
  std::map<std::string, std::vector<std::string>> synonyms;
  NameLists names;

  LabelSpace label_space() const;
  nlohmann::json to_json() const;
  static SyntheticWorld from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SyntheticWorld load(const std::filesystem::path& path);
};

struct ShortcutConfig {
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;
  std::size_t n_types = 24;
  double shortcut_rate = 1.0;
  std::uint64_t seed = 0;
  // Share of mentions with no type word ("it", "this", ...).
  double neutral_rate = 0.1;
  // Share of mentions of the form <other type word> <type word>.
  double compound_rate = 0.05;
  double modifier_rate = 0.2;
  // Probability of a second, farther cue word of another type in the context.
  double distractor_rate = 1.0;
  // Exponent of the Zipf-like class prior; type 0 dominates.
  double zipf = 1.0;
};

struct ShortcutDataset {
  std::vector<TypingInstance> train;
  std::vector<TypingInstance> biased_test;
  std::vector<TypingInstance> debiased_test;
  SyntheticWorld world;
  LabelSpace labels;
};

// In train and biased_test the mention's last token is the type word of a
// gold type with probability `shortcut_rate` (otherwise another type's
// word); the cue next to the mention always determines the gold set. In
// debiased_test the mention's type word is drawn uniformly. Throws
// ArgumentError for n_types < 2, shortcut_rate outside (0, 1] or rates
// outside [0, 1].
ShortcutDataset make_shortcut_dataset(const ShortcutConfig& config);
ShortcutDataset make_shortcut_dataset(std::size_t n_train, std::size_t n_test, std::size_t n_types,
                                      double shortcut_rate, std::uint64_t seed);

// Answers every oracle kind from a SyntheticWorld:
//  masked_fill  the type named by the last word before "is a type of <mask>"
//  wsd          the world's synonym table
//  ner          person spans over known names
//  coref        never finds an antecedent
//  depparse     head-final mentions; the last token is the root
class SyntheticOracle : public OracleTransport {
 public:
  explicit SyntheticOracle(SyntheticWorld world);
  OracleResponse call(const OracleRequest& request) override;
  std::string describe() const override { return "synthetic"; }
  const SyntheticWorld& world() const { return world_; }

 private:
  SyntheticWorld world_;
  std::set<std::string> type_words_;
  std::set<std::string> modifiers_;
  std::set<std::string> neutral_;
  std::set<std::string> names_;
};

// Bundle with every oracle kind bound to one SyntheticOracle.
Oracles synthetic_oracles(const SyntheticWorld& world);

}  // namespace typebias
