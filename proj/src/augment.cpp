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

#include "typebias/augment.hpp"

#include <algorithm>
#include <fstream>

#include "typebias/error.hpp"
#include "typebias/log.hpp"
#include "typebias/rng.hpp"

namespace typebias {

namespace fs = std::filesystem;

bool EntityPool::is_informative(NerType type, const std::string& entity) const {
  auto it = groups.find(type);
  return it != groups.end() && it->second.informative.count(entity) != 0;
}

bool EntityPool::is_non_informative(NerType type, const std::string& entity) const {
  auto it = groups.find(type);
  return it != groups.end() && it->second.non_informative.count(entity) != 0;
}

namespace {

std::vector<std::string> read_names(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open name list " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Words of a type label: "solar_day" and "solar day" both give {solar, day}.
std::vector<std::string> type_words(const std::string& type) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : type) {
    if (c == ' ' || c == '_') {
      if (!cur.empty()) out.push_back(lowercase(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(lowercase(cur));
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Equal up to a naive plural suffix.
bool same_word(const std::string& a, const std::string& b) {
  if (a == b) return true;
  auto plural_of = [](const std::string& p, const std::string& s) {
    if (p == s + "s" || p == s + "es") return true;
    return ends_with(p, "ies") && ends_with(s, "y") && p.substr(0, p.size() - 3) == s.substr(0, s.size() - 1);
  };
  return plural_of(a, b) || plural_of(b, a);
}

Tokens synonym_tokens(const std::string& synonym) { return type_words(synonym); }

Tokens slice(const Tokens& tokens, std::size_t begin, std::size_t end) {
  return Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                tokens.begin() + static_cast<std::ptrdiff_t>(end));
}

TypingInstance make_perturbed(const TypingInstance& source, BiasKind strategy, std::vector<Edit> edits,
                              std::string id_suffix, std::optional<std::uint64_t> seed = std::nullopt,
                              std::string note = {}) {
  PerturbationRecord record;
  record.source_id = source.id;
  record.strategy = strategy;
  record.edits = std::move(edits);
  record.rng_seed = seed;
  record.note = std::move(note);
  return replay_provenance(source, record, source.id + "#" + id_suffix);
}

// Non-overlapping occurrences of `needle` in `hay`, left to right.
std::vector<std::size_t> occurrences(const Tokens& hay, const Tokens& needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > hay.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= hay.size();) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
      out.push_back(i);
      i += needle.size();
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace

NameLists NameLists::load(const fs::path& dir) {
  NameLists lists;
  lists.masculine = read_names(dir / "names.masculine.txt");
  lists.feminine = read_names(dir / "names.feminine.txt");
  lists.validate();
  return lists;
}

void NameLists::validate() const {
  if (masculine.empty() || feminine.empty()) throw ArgumentError("name lists must be non-empty");
  std::set<std::string> m(masculine.begin(), masculine.end());
  for (const auto& f : feminine) {
    if (m.count(f)) throw ArgumentError("name '" + f + "' appears in both name lists");
  }
}

std::optional<Gender> pronoun_gender(const std::string& token) {
  const std::string t = lowercase(token);
  if (t == "he" || t == "him" || t == "his" || t == "himself") return Gender::Masculine;
  if (t == "she" || t == "her" || t == "hers" || t == "herself") return Gender::Feminine;
  return std::nullopt;
}

bool overlaps_gold(const std::string& word, const TypeSet& gold, const LabelSpace& label_space) {
  const std::string w = lowercase(word);
  if (auto t = label_space.resolve(w); t && gold.count(*t)) return true;
  for (const auto& g : gold) {
    for (const auto& gw : type_words(g)) {
      if (same_word(w, gw)) return true;
    }
  }
  return false;
}

std::vector<std::size_t> find_label_overlap_tokens(const TypingInstance& instance,
                                                   const LabelSpace& label_space) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instance.mention.size(); ++i) {
    if (overlaps_gold(instance.mention[i], instance.gold, label_space)) out.push_back(i);
  }
  return out;
}

std::optional<std::vector<Tokens>> usable_synonyms(const Tokens& sentence, std::size_t index,
                                                   const TypeSet& gold, const Oracles& oracles,
                                                   const LabelSpace& label_space) {
  auto answer = oracles.wsd(sentence, index);
  if (!answer) return std::nullopt;
  std::vector<Tokens> out;
  std::set<std::string> seen{lowercase(sentence[index])};
  for (const auto& synonym : answer->synonyms) {
    Tokens tokens = synonym_tokens(synonym);
    if (tokens.empty()) continue;
    if (!seen.insert(lowercase(join_tokens(tokens))).second) continue;
    bool clash = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return overlaps_gold(t, gold, label_space);
    });
    if (!clash) out.push_back(std::move(tokens));
  }
  return out;
}

std::vector<TypingInstance> lexical_substitute(const TypingInstance& instance, const Oracles& oracles,
                                               const LabelSpace& label_space) {
  std::vector<TypingInstance> out;
  const auto positions = find_label_overlap_tokens(instance, label_space);
  if (positions.empty()) return out;
  const Tokens sentence = instance.sentence();
  for (std::size_t pos : positions) {
    auto synonyms = usable_synonyms(sentence, instance.left.size() + pos, instance.gold, oracles,
                                    label_space);
    if (!synonyms) {
      log_warning("no sense for '" + instance.mention[pos] + "' in " + instance.id + "; skipping");
      continue;
    }
    for (auto& tokens : *synonyms)
      out.push_back(make_perturbed(instance, BiasKind::LexicalOverlapping,
                                   {Edit{Region::Mention, pos, pos + 1, std::move(tokens)}},
                                   "lex" + std::to_string(out.size())));
  }
  return out;
}

EntityPool build_entity_pool(std::span<const TypingInstance> instances, const Oracles& oracles,
                             const LabelSpace& label_space, double threshold) {
  std::map<std::pair<NerType, std::string>, std::pair<double, std::size_t>> scores;
  for (const auto& inst : instances) {
    const Tokens sentence = inst.sentence();
    std::vector<NerSpan> spans;
    try {
      spans = oracles.ner(sentence);
    } catch (const OracleUnavailable& e) {
      log_warning("ner failed on " + inst.id + ": " + e.what());
      continue;
    } catch (const OracleMiss& e) {
      log_warning("ner failed on " + inst.id + ": " + e.what());
      continue;
    }
    const std::size_t begin = inst.left.size();
    const std::size_t end = begin + inst.mention.size();
    for (const auto& span : spans) {
      if (span.start < begin || span.end > end) continue;
      const std::string entity = join_tokens(slice(sentence, span.start, span.end));
      try {
        auto e = run_prompt(build_prompt(inst, BiasKind::NamedEntity, nullptr, span), inst.gold,
                            oracles, label_space);
        auto& acc = scores[{span.type, entity}];
        acc.first += e.f1;
        acc.second += 1;
      } catch (const OracleUnavailable& e) {
        log_warning("entity prompt failed for '" + entity + "': " + e.what());
      } catch (const OracleMiss& e) {
        log_warning("entity prompt failed for '" + entity + "': " + e.what());
      }
    }
  }
  EntityPool pool;
  for (const auto& [key, acc] : scores) {
    const double mean = acc.first / static_cast<double>(acc.second);
    auto& group = pool.groups[key.first];
    (mean > threshold ? group.informative : group.non_informative).insert(key.second);
  }
  return pool;
}

NeSubstitution ne_substitute(const TypingInstance& instance, std::span<const NerSpan> spans,
                             const EntityPool& pool, std::uint64_t seed,
                             SubstitutionDirection direction) {
  const bool forward = direction == SubstitutionDirection::ToNonInformative;
  const Tokens sentence = instance.sentence();
  const std::size_t begin = instance.left.size();
  const std::size_t end = begin + instance.mention.size();
  for (const auto& span : spans) {
    if (span.start < begin || span.end > end || span.end > sentence.size()) continue;
    const Tokens entity_tokens = slice(sentence, span.start, span.end);
    const std::string entity = join_tokens(entity_tokens);
    const bool in_source = forward ? pool.is_informative(span.type, entity)
                                   : pool.is_non_informative(span.type, entity);
    if (!in_source) continue;
    const auto& group = pool.groups.at(span.type);
    std::vector<std::string> targets;
    for (const auto& e : forward ? group.non_informative : group.informative) {
      if (e != entity) targets.push_back(e);
    }
    if (targets.empty()) {
      return {std::nullopt, std::string("no ") + (forward ? "non-informative" : "informative") +
                                " entity of type " + std::string(to_string(span.type))};
    }
    const std::uint64_t derived = derive_seed(seed, instance.id);
    Rng rng(derived);
    const Tokens replacement = split_tokens(targets[rng.index(targets.size())]);
    std::vector<Edit> edits;
    for (Region region : {Region::Left, Region::Mention, Region::Right}) {
      const Tokens& tokens = region == Region::Left      ? instance.left
                             : region == Region::Mention ? instance.mention
                                                         : instance.right;
      for (std::size_t at : occurrences(tokens, entity_tokens)) {
        edits.push_back(Edit{region, at, at + entity_tokens.size(), replacement});
      }
    }
    return {make_perturbed(instance, BiasKind::NamedEntity, std::move(edits), "ne", derived), {}};
  }
  return {std::nullopt, "mention holds no pooled entity to substitute"};
}

std::vector<TypingInstance> pronoun_concretize(const TypingInstance& instance, const Oracles& oracles,
                                               const NameLists& names, std::uint64_t seed,
                                               std::size_t n_names) {
  if (instance.mention.size() != 1) throw ArgumentError("pronoun mention must be a single token");
  auto gender = pronoun_gender(instance.mention.front());
  if (!gender) throw ArgumentError("'" + instance.mention.front() + "' is not a gender pronoun");
  std::vector<TypingInstance> out;
  const Tokens sentence = instance.sentence();
  const std::size_t at = instance.left.size();
  if (auto antecedent = oracles.coref(sentence, TokenSpan{at, at + 1})) {
    out.push_back(make_perturbed(instance, BiasKind::Pronoun,
                                 {Edit{Region::Mention, 0, 1, slice(sentence, antecedent->start, antecedent->end)}},
                                 "coref", std::nullopt, "coreference antecedent"));
    return out;
  }
  const auto& pool = *gender == Gender::Masculine ? names.masculine : names.feminine;
  const std::uint64_t derived = derive_seed(seed, instance.id);
  Rng rng(derived);
  const std::size_t n = std::min(n_names, pool.size());
  std::size_t i = 0;
  for (std::size_t pick : rng.sample_without_replacement(pool.size(), n)) {
    out.push_back(make_perturbed(instance, BiasKind::Pronoun,
                                 {Edit{Region::Mention, 0, 1, split_tokens(pool[pick])}},
                                 "name" + std::to_string(i++), derived));
  }
  return out;
}

std::optional<TypingInstance> headword_truncate(const TypingInstance& instance, const Oracles& oracles) {
  const std::size_t n = instance.mention.size();
  if (n < 2) return std::nullopt;
  auto parse = oracles.depparse(instance.mention, instance.left, instance.right);
  if (!parse) {
    log_warning("no dependency parse for " + instance.id);
    return std::nullopt;
  }
  auto roots = parse->roots();
  std::size_t head = roots.front();
  std::string note;
  if (roots.size() > 1) {
    head = n - 1;
    for (std::size_t i = n; i-- > 0;) {
      if (i < parse->pos.size() && (parse->pos[i] == "NOUN" || parse->pos[i] == "PROPN")) {
        head = i;
        break;
      }
    }
    note = "multi-root parse; headword is the last noun";
  }
  std::vector<Edit> edits;
  if (head + 1 < n) edits.push_back(Edit{Region::Mention, head + 1, n, {}});
  if (head > 0) edits.push_back(Edit{Region::Mention, 0, head, {}});
  return make_perturbed(instance, BiasKind::Dependency, std::move(edits), "head", std::nullopt,
                        std::move(note));
}

namespace {

template <typename Fn>
void guarded(const TypingInstance& inst, BiasKind kind, AugmentStats& stats, Fn&& fn) {
  ++stats.attempts;
  try {
    fn();
  } catch (const OracleUnavailable& e) {
    ++stats.oracle_failures;
    log_warning(std::string(to_string(kind)) + " augmentation skipped for " + inst.id + ": " + e.what());
  } catch (const OracleMiss& e) {
    ++stats.oracle_failures;
    log_warning(std::string(to_string(kind)) + " augmentation skipped for " + inst.id + ": " + e.what());
  }
}

}  // namespace

AugmentResult build_counterfactual_set(std::span<const TypingInstance> dataset, const Oracles& oracles,
                                       const LabelSpace& label_space, const NameLists& names,
                                       const AugmentConfig& config) {
  AugmentResult result;
  AugmentStats& stats = result.stats;
  stats.instances = dataset.size();
  EntityPool pool;
  if (config.named_entity) pool = build_entity_pool(dataset, oracles, label_space, config.threshold);

  for (const auto& inst : dataset) {
    if (inst.is_empty_probe()) continue;
    if (config.lexical && !find_label_overlap_tokens(inst, label_space).empty()) {
      guarded(inst, BiasKind::LexicalOverlapping, stats, [&] {
        std::vector<TypingInstance> kept;
        auto candidates = lexical_substitute(inst, oracles, label_space);
        stats.candidates[BiasKind::LexicalOverlapping] += candidates.size();
        for (auto& c : candidates) {
          auto e = run_prompt(build_prompt(inst, BiasKind::LexicalOverlapping, &c), inst.gold, oracles,
                              label_space);
          if (e.f1 < config.threshold) kept.push_back(std::move(c));
        }
        stats.kept[BiasKind::LexicalOverlapping] += kept.size();
        std::move(kept.begin(), kept.end(), std::back_inserter(result.instances));
      });
    }
    if (config.named_entity && !pool.empty()) {
      guarded(inst, BiasKind::NamedEntity, stats, [&] {
        auto spans = oracles.ner(inst.sentence());
        auto sub = ne_substitute(inst, spans, pool, config.seed);
        if (sub.instance) {
          stats.candidates[BiasKind::NamedEntity] += 1;
          stats.kept[BiasKind::NamedEntity] += 1;
          result.instances.push_back(std::move(*sub.instance));
        }
      });
    }
    if (config.pronoun && inst.mention.size() == 1 && pronoun_gender(inst.mention.front())) {
      guarded(inst, BiasKind::Pronoun, stats, [&] {
        std::vector<TypingInstance> kept;
        auto candidates = pronoun_concretize(inst, oracles, names, config.seed, config.n_names);
        stats.candidates[BiasKind::Pronoun] += candidates.size();
        for (auto& c : candidates) {
          auto e = run_prompt(build_prompt(inst, BiasKind::Pronoun, &c), inst.gold, oracles, label_space);
          if (e.f1 < config.threshold) kept.push_back(std::move(c));
        }
        stats.kept[BiasKind::Pronoun] += kept.size();
        std::move(kept.begin(), kept.end(), std::back_inserter(result.instances));
      });
    }
    if (config.dependency && inst.mention.size() >= 2) {
      guarded(inst, BiasKind::Dependency, stats, [&] {
        if (auto head = headword_truncate(inst, oracles)) {
          stats.candidates[BiasKind::Dependency] += 1;
          stats.kept[BiasKind::Dependency] += 1;
          result.instances.push_back(std::move(*head));
        }
      });
    }
  }
  return result;
}

}  // namespace typebias
