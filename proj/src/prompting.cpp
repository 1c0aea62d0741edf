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

#include "typebias/prompting.hpp"

#include <set>

#include "typebias/error.hpp"
#include "typebias/metrics.hpp"

namespace typebias {

using nlohmann::json;

namespace {

constexpr std::string_view kTail = " is a type of <mask>.";

bool is_closing(const std::string& token) {
  static const std::set<std::string, std::less<>> closers = {
      "''", "\"", "'", ")", "]", "}", "-RRB-", "-RSB-", "-RCB-", "’", "”"};
  return closers.count(token) != 0;
}

bool is_terminal(const std::string& token) { return token == "." || token == "!" || token == "?"; }

std::string sentence_prompt(const TypingInstance& sub) {
  Tokens sentence = sub.sentence();
  std::string text = join_tokens(sentence);
  bool terminated = false;
  for (auto it = sentence.rbegin(); it != sentence.rend(); ++it) {
    if (is_closing(*it)) continue;
    terminated = is_terminal(*it);
    break;
  }
  if (!terminated) text += ".";
  return text + " " + join_tokens(sub.mention) + std::string(kTail);
}

}  // namespace

std::string build_prompt(const TypingInstance& instance, BiasKind kind,
                         const TypingInstance* substitution, const std::optional<NerSpan>& entity) {
  switch (kind) {
    case BiasKind::MentionContext:
      if (instance.mention.empty()) throw ArgumentError("mention-context prompt needs a mention");
      return join_tokens(instance.mention) + std::string(kTail);
    case BiasKind::LexicalOverlapping:
    case BiasKind::Pronoun:
      if (!substitution) {
        throw ArgumentError(std::string(to_string(kind)) + " prompt needs a substituted instance");
      }
      return sentence_prompt(*substitution);
    case BiasKind::NamedEntity: {
      if (!entity) throw ArgumentError("named-entity prompt needs an entity span");
      Tokens sentence = instance.sentence();
      if (entity->start >= entity->end || entity->end > sentence.size()) {
        throw ArgumentError("entity span out of range");
      }
      std::span<const std::string> tokens(sentence.data() + entity->start, entity->end - entity->start);
      return "The " + std::string(to_string(entity->type)) + " " + join_tokens(tokens) +
             std::string(kTail);
    }
    default:
      throw ArgumentError("no cloze prompt for bias kind " + std::string(to_string(kind)));
  }
}

TypeSet filter_type_answers(const MaskedFillResult& fill, const LabelSpace& label_space) {
  TypeSet out;
  for (const auto& c : fill) {
    if (auto type = label_space.resolve(c.token)) out.insert(*type);
  }
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Biased: return "biased";
    case Verdict::Unbiased: return "unbiased";
    case Verdict::Undecided: return "undecided";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view name) {
  if (name == "biased") return Verdict::Biased;
  if (name == "unbiased") return Verdict::Unbiased;
  if (name == "undecided") return Verdict::Undecided;
  throw ArgumentError("unknown verdict '" + std::string(name) + "'");
}

json verdict_to_json(const BiasVerdict& v) {
  json prompts = json::array();
  for (const auto& e : v.evidence) {
    json fills = json::array();
    for (const auto& f : e.fill) fills.push_back({{"token", f.token}, {"score", f.score}});
    prompts.push_back({{"prompt", e.prompt},
                       {"fills", fills},
                       {"types", std::vector<std::string>(e.types.begin(), e.types.end())},
                       {"f1", e.f1}});
  }
  json j = {{"instance_id", v.instance_id},
            {"bias_kind", std::string(to_string(v.bias_kind))},
            {"verdict", std::string(to_string(v.verdict))},
            {"plm_f1", v.plm_f1},
            {"plm_types", std::vector<std::string>(v.plm_types.begin(), v.plm_types.end())},
            {"prompts", prompts}};
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

BiasVerdict verdict_from_json(const json& j) {
  BiasVerdict v;
  v.instance_id = j.at("instance_id").get<std::string>();
  v.bias_kind = bias_kind_from_string(j.at("bias_kind").get<std::string>());
  v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  v.plm_f1 = j.at("plm_f1").get<double>();
  for (const auto& t : j.at("plm_types")) v.plm_types.insert(t.get<std::string>());
  for (const auto& p : j.at("prompts")) {
    PromptEvidence e;
    e.prompt = p.at("prompt").get<std::string>();
    for (const auto& f : p.at("fills")) e.fill.push_back({f.at("token"), f.at("score")});
    for (const auto& t : p.at("types")) e.types.insert(t.get<std::string>());
    e.f1 = p.at("f1").get<double>();
    v.evidence.push_back(std::move(e));
  }
  v.reason = j.value("reason", "");
  return v;
}

std::optional<NerSpan> mention_entity(const TypingInstance& instance, std::span<const NerSpan> spans) {
  const std::size_t begin = instance.left.size();
  const std::size_t end = begin + instance.mention.size();
  for (const auto& s : spans) {
    if (s.start >= begin && s.end <= end) return s;
  }
  return std::nullopt;
}

Verdict apply_threshold(BiasKind kind, double plm_f1, double threshold) {
  if (plm_f1 == threshold) return Verdict::Undecided;
  switch (kind) {
    case BiasKind::MentionContext:
    case BiasKind::NamedEntity:
      return plm_f1 > threshold ? Verdict::Biased : Verdict::Unbiased;
    case BiasKind::LexicalOverlapping:
    case BiasKind::Pronoun:
      return plm_f1 < threshold ? Verdict::Biased : Verdict::Unbiased;
    default:
      throw ArgumentError("bias kind " + std::string(to_string(kind)) + " is not prompt-diagnosable");
  }
}

PromptEvidence run_prompt(const std::string& prompt, const TypeSet& gold, const Oracles& oracles,
                          const LabelSpace& label_space) {
  PromptEvidence e;
  e.prompt = prompt;
  e.fill = oracles.masked_fill(prompt, kFillTopK);
  e.types = filter_type_answers(e.fill, label_space);
  e.f1 = instance_prf(gold, e.types).f1;
  return e;
}

BiasVerdict classify_bias(const TypingInstance& instance, BiasKind kind, const Oracles& oracles,
                          const LabelSpace& label_space, double threshold,
                          std::span<const TypingInstance> perturbations) {
  BiasVerdict v;
  v.instance_id = instance.id;
  v.bias_kind = kind;
  switch (kind) {
    case BiasKind::MentionContext:
      v.evidence.push_back(
          run_prompt(build_prompt(instance, kind), instance.gold, oracles, label_space));
      break;
    case BiasKind::NamedEntity: {
      auto entity = mention_entity(instance, oracles.ner(instance.sentence()));
      if (!entity) {
        v.reason = "no named entity inside the mention";
        return v;
      }
      v.evidence.push_back(run_prompt(build_prompt(instance, kind, nullptr, entity), instance.gold,
                                      oracles, label_space));
      break;
    }
    case BiasKind::LexicalOverlapping:
    case BiasKind::Pronoun:
      if (perturbations.empty()) {
        v.reason = "no substituted instance available";
        return v;
      }
      for (const auto& p : perturbations) {
        v.evidence.push_back(
            run_prompt(build_prompt(instance, kind, &p), instance.gold, oracles, label_space));
      }
      break;
    default:
      throw ArgumentError("bias kind " + std::string(to_string(kind)) + " is not prompt-diagnosable");
  }
  double sum = 0.0;
  for (const auto& e : v.evidence) {
    sum += e.f1;
    v.plm_types.insert(e.types.begin(), e.types.end());
  }
  v.plm_f1 = sum / static_cast<double>(v.evidence.size());
  v.verdict = apply_threshold(kind, v.plm_f1, threshold);
  return v;
}

}  // namespace typebias
