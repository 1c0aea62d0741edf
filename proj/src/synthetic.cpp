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

#include "typebias/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "typebias/error.hpp"
#include "typebias/rng.hpp"

namespace typebias {

namespace {

struct ClassSeed {
  const char* word;
  const char* cue;
  Tier tier;
};

constexpr ClassSeed kClasses[] = {
    {"person", "born", Tier::General},          {"location", "map", Tier::General},
    {"organization", "founded", Tier::General}, {"city", "mayor", Tier::Fine},
    {"animal", "zoo", Tier::Fine},              {"food", "recipe", Tier::Fine},
    {"river", "flows", Tier::UltraFine},        {"company", "shares", Tier::Fine},
    {"song", "chorus", Tier::UltraFine},        {"vehicle", "engine", Tier::UltraFine},
    {"disease", "symptoms", Tier::UltraFine},   {"sport", "league", Tier::UltraFine},
    {"country", "border", Tier::Fine},          {"tool", "workshop", Tier::UltraFine},
    {"plant", "garden", Tier::UltraFine},       {"building", "floors", Tier::UltraFine},
    {"book", "chapters", Tier::UltraFine},      {"film", "premiere", Tier::UltraFine},
    {"game", "players", Tier::UltraFine},       {"drug", "dosage", Tier::UltraFine},
    {"language", "grammar", Tier::UltraFine},   {"instrument", "orchestra", Tier::UltraFine},
    {"weapon", "armory", Tier::UltraFine},      {"mineral", "quarry", Tier::UltraFine},
};

const std::vector<std::string> kFillers = {
    "the",  "a",     "of",     "in",     "on",    "was",    "said",      "year",
    "new",  "people", "report", "today", "after", "during", "near",      "with",
    "from", "also",  "week",   "some",   "many",  "story",  "officials", "area"};

const std::vector<std::string> kModifiers = {"big", "famous", "old", "small"};

const std::vector<std::string> kNeutral = {"it", "this", "something"};

const std::map<std::string, std::vector<std::string>> kFixedSynonyms = {
    {"said", {"stated"}},       {"year", {"twelvemonth"}},  {"report", {"account"}},
    {"today", {"nowadays"}},    {"near", {"close"}},        {"week", {"hebdomad"}},
    {"story", {"tale"}},        {"area", {"region"}},       {"people", {"citizenry"}},
    {"officials", {"functionaries"}}, {"big", {"large"}},   {"famous", {"celebrated"}},
    {"old", {"aged"}},          {"small", {"little"}}};

const std::vector<std::string> kTypeWordSynonyms = {"thing", "item"};

NameLists default_names() {
  NameLists n;
  n.masculine = {"Arthur", "Bruno", "Carlos", "Dmitri", "Elias", "Felix"};
  n.feminine = {"Alma", "Beatrix", "Clara", "Dalia", "Edith", "Freya"};
  return n;
}

std::string pad(std::size_t i) {
  std::ostringstream os;
  os << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError(std::string(name) + " must lie in [0, 1]");
}

class Generator {
 public:
  Generator(const ShortcutConfig& cfg, const SyntheticWorld& world)
      : cfg_(cfg), world_(world), k_(world.classes.size()) {
    double total = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      total += 1.0 / std::pow(static_cast<double>(c + 1), cfg.zipf);
      cumulative_.push_back(total);
    }
    for (auto& v : cumulative_) v /= total;
  }

  std::vector<TypingInstance> split(const std::string& name, std::size_t n, bool debiased) {
    Rng rng(derive_seed(cfg_.seed, "synthetic-" + name));
    std::vector<TypingInstance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(instance(rng, name + "-" + pad(i), debiased));
    return out;
  }

 private:
  std::size_t draw_class(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), k_ - 1);
  }

  std::size_t other_than(Rng& rng, std::size_t c) const {
    std::size_t o = rng.index(k_ - 1);
    return o >= c ? o + 1 : o;
  }

  const std::string& filler(Rng& rng) const { return world_.fillers[rng.index(world_.fillers.size())]; }

  TypingInstance instance(Rng& rng, std::string id, bool debiased) const {
    TypingInstance x;
    x.id = std::move(id);
    const std::size_t c = draw_class(rng);
    x.gold = {world_.classes[c].word};

    if (rng.bernoulli(cfg_.neutral_rate)) {
      x.mention = {world_.neutral_mentions[rng.index(world_.neutral_mentions.size())]};
    } else {
      std::size_t head;
      if (debiased)
        head = rng.index(k_);
      else
        head = rng.bernoulli(cfg_.shortcut_rate) ? c : other_than(rng, c);
      x.mention = {world_.classes[head].word};
      if (rng.bernoulli(cfg_.compound_rate))
        x.mention.insert(x.mention.begin(), world_.classes[other_than(rng, head)].word);
      else if (rng.bernoulli(cfg_.modifier_rate))
        x.mention.insert(x.mention.begin(), world_.modifiers[rng.index(world_.modifiers.size())]);
    }

    const std::size_t n_left = 2 + rng.index(4);
    const std::size_t n_right = 2 + rng.index(4);
    for (std::size_t i = 0; i < n_left; ++i) x.left.push_back(filler(rng));
    for (std::size_t i = 0; i < n_right; ++i) x.right.push_back(filler(rng));
    const bool cue_left = rng.bernoulli(0.5);
    const std::string& cue = world_.classes[c].cue;
    if (cue_left)
      x.left.push_back(cue);
    else
      x.right.insert(x.right.begin(), cue);
    if (rng.bernoulli(cfg_.distractor_rate)) {
      std::size_t dc = draw_class(rng);
      while (dc == c) dc = draw_class(rng);
      const std::string& d = world_.classes[dc].cue;
      if (cue_left)
        x.right.push_back(d);
      else
        x.left.insert(x.left.begin(), d);
    }
    x.right.push_back(".");
    return x;
  }

  const ShortcutConfig& cfg_;
  const SyntheticWorld& world_;
  std::size_t k_;
  std::vector<double> cumulative_;
};

SyntheticWorld make_world(std::size_t n_types) {
  SyntheticWorld w;
  for (std::size_t c = 0; c < n_types; ++c) {
    if (c < std::size(kClasses)) {
      w.classes.push_back({kClasses[c].word, kClasses[c].cue, kClasses[c].tier});
    } else {
      w.classes.push_back({"kind" + std::to_string(c), "cue" + std::to_string(c), Tier::UltraFine});
    }
  }
  w.fillers = kFillers;
  w.modifiers = kModifiers;
  w.neutral_mentions = kNeutral;
  w.synonyms = kFixedSynonyms;
  for (const auto& cls : w.classes) w.synonyms[cls.word] = kTypeWordSynonyms;
  w.names = default_names();
  return w;
}

}  // namespace

LabelSpace SyntheticWorld::label_space() const {
  std::vector<std::string> types;
  std::map<std::string, Tier> tiers;
  for (const auto& c : classes) {
    types.push_back(c.word);
    tiers[c.word] = c.tier;
  }
  return LabelSpace::from_types(types, tiers);
}

nlohmann::json SyntheticWorld::to_json() const {
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes)
    cls.push_back({{"word", c.word}, {"cue", c.cue}, {"tier", std::string(to_string(c.tier))}});
  return {{"classes", cls},
          {"fillers", fillers},
          {"modifiers", modifiers},
          {"neutral_mentions", neutral_mentions},
          {"synonyms", synonyms},
          {"names", {{"masculine", names.masculine}, {"feminine", names.feminine}}}};
}

SyntheticWorld SyntheticWorld::from_json(const nlohmann::json& j) {
  try {
    SyntheticWorld w;
    for (const auto& c : j.at("classes"))
      w.classes.push_back({c.at("word").get<std::string>(), c.at("cue").get<std::string>(),
                           tier_from_string(c.value("tier", std::string("ultra-fine")))});
    w.fillers = j.at("fillers").get<std::vector<std::string>>();
    w.modifiers = j.value("modifiers", std::vector<std::string>{});
    w.neutral_mentions = j.value("neutral_mentions", std::vector<std::string>{});
    w.synonyms = j.value("synonyms", std::map<std::string, std::vector<std::string>>{});
    if (j.contains("names")) {
      w.names.masculine = j.at("names").value("masculine", std::vector<std::string>{});
      w.names.feminine = j.at("names").value("feminine", std::vector<std::string>{});
    }
    if (w.classes.size() < 2) throw ValidationError("synthetic world needs at least two types");
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("malformed synthetic world: ") + e.what());
  }
}

void SyntheticWorld::save(const std::filesystem::path& path) const {
  atomic_write(path, to_json().dump(2) + "\n");
}

SyntheticWorld SyntheticWorld::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, path.string() + ": " + e.what());
  }
}

ShortcutDataset make_shortcut_dataset(const ShortcutConfig& config) {
  if (config.n_types < 2) throw ArgumentError("n_types must be at least 2");
  if (!(config.shortcut_rate > 0.0 && config.shortcut_rate <= 1.0))
    throw ArgumentError("shortcut_rate must lie in (0, 1]");
  check_rate(config.neutral_rate, "neutral_rate");
  check_rate(config.compound_rate, "compound_rate");
  check_rate(config.modifier_rate, "modifier_rate");
  check_rate(config.distractor_rate, "distractor_rate");
  if (!(config.zipf >= 0.0)) throw ArgumentError("zipf exponent must be non-negative");

  ShortcutDataset d;
  d.world = make_world(config.n_types);
  d.labels = d.world.label_space();
  Generator gen(config, d.world);
  d.train = gen.split("train", config.n_train, false);
  d.biased_test = gen.split("biased", config.n_test, false);
  d.debiased_test = gen.split("debiased", config.n_test, true);
  return d;
}

ShortcutDataset make_shortcut_dataset(std::size_t n_train, std::size_t n_test, std::size_t n_types,
                                      double shortcut_rate, std::uint64_t seed) {
  ShortcutConfig c;
  c.n_train = n_train;
  c.n_test = n_test;
  c.n_types = n_types;
  c.shortcut_rate = shortcut_rate;
  c.seed = seed;
  return make_shortcut_dataset(c);
}

SyntheticOracle::SyntheticOracle(SyntheticWorld world) : world_(std::move(world)) {
  for (const auto& c : world_.classes) type_words_.insert(lowercase(c.word));
  modifiers_.insert(world_.modifiers.begin(), world_.modifiers.end());
  neutral_.insert(world_.neutral_mentions.begin(), world_.neutral_mentions.end());
  names_.insert(world_.names.masculine.begin(), world_.names.masculine.end());
  names_.insert(world_.names.feminine.begin(), world_.names.feminine.end());
}

OracleResponse SyntheticOracle::call(const OracleRequest& request) {
  const auto& p = request.payload;
  try {
    switch (request.kind) {
      case OracleKind::MaskedFill: {
        const auto prompt = p.at("prompt").get<std::string>();
        MaskedFillResult fills;
        const auto pos = prompt.rfind(" is a type of <mask>");
        if (pos != std::string::npos) {
          const auto before = prompt.substr(0, pos);
          const auto sp = before.rfind(' ');
          const auto word = lowercase(sp == std::string::npos ? before : before.substr(sp + 1));
          if (type_words_.contains(word)) fills.push_back({word, 0.9});
        }
        if (request.k && fills.size() > static_cast<std::size_t>(*request.k))
          fills.resize(static_cast<std::size_t>(*request.k));
        return {true, encode_fill(fills), {}};
      }
      case OracleKind::Wsd: {
        const auto tokens = p.at("tokens").get<Tokens>();
        const auto index = p.at("index").get<std::size_t>();
        if (index >= tokens.size()) return {false, nullptr, "index out of range"};
        const auto word = lowercase(tokens[index]);
        auto it = world_.synonyms.find(word);
        if (it == world_.synonyms.end()) return OracleResponse::no_answer();
        WsdAnswer a{word + ".n.01", {word}};
        a.synonyms.insert(a.synonyms.end(), it->second.begin(), it->second.end());
        return {true, encode_wsd(a), {}};
      }
      case OracleKind::Ner: {
        const auto tokens = p.at("tokens").get<Tokens>();
        std::vector<NerSpan> spans;
        for (std::size_t i = 0; i < tokens.size(); ++i)
          if (names_.contains(tokens[i])) spans.push_back({i, i + 1, NerType::Person});
        return {true, encode_ner(spans), {}};
      }
      case OracleKind::Coref:
        return {true, encode_coref(std::nullopt), {}};
      case OracleKind::DepParse: {
        const auto mention = p.at("mention").get<Tokens>();
        if (mention.empty()) return {false, nullptr, "empty mention"};
        DependencyParse parse;
        parse.heads.assign(mention.size(), mention.size() - 1);
        for (const auto& t : mention) {
          const auto w = lowercase(t);
          if (modifiers_.contains(w))
            parse.pos.push_back("ADJ");
          else if (neutral_.contains(w))
            parse.pos.push_back("PRON");
          else if (names_.contains(t))
            parse.pos.push_back("PROPN");
          else
            parse.pos.push_back("NOUN");
        }
        return {true, encode_depparse(parse), {}};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return {false, nullptr, std::string("bad request: ") + e.what()};
  }
  return {false, nullptr, "unsupported oracle kind"};
}

Oracles synthetic_oracles(const SyntheticWorld& world) {
  auto oracle = std::make_shared<SyntheticOracle>(world);
  Oracles o;
  for (auto kind : kAllOracleKinds) o.set(kind, oracle);
  return o;
}

}  // namespace typebias
