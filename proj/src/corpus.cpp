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

#include "typebias/corpus.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <system_error>

#include "typebias/error.hpp"

namespace typebias {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Region region) {
  switch (region) {
    case Region::Left: return "left";
    case Region::Mention: return "mention";
    case Region::Right: return "right";
  }
  return "?";
}

namespace {

Region region_from_string(std::string_view name) {
  if (name == "left") return Region::Left;
  if (name == "mention") return Region::Mention;
  if (name == "right") return Region::Right;
  throw ArgumentError("unknown region '" + std::string(name) + "'");
}

Tokens& region_of(TypingInstance& instance, Region region) {
  switch (region) {
    case Region::Left: return instance.left;
    case Region::Mention: return instance.mention;
    case Region::Right: return instance.right;
  }
  return instance.mention;
}

const Tokens& region_of(const TypingInstance& instance, Region region) {
  return region_of(const_cast<TypingInstance&>(instance), region);
}

}  // namespace

Tokens TypingInstance::sentence() const {
  Tokens out;
  out.reserve(left.size() + mention.size() + right.size());
  out.insert(out.end(), left.begin(), left.end());
  out.insert(out.end(), mention.begin(), mention.end());
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

TypingInstance empty_probe() {
  TypingInstance probe;
  probe.id = "<empty>";
  return probe;
}

TypingInstance apply_edits(const TypingInstance& source, std::span<const Edit> edits) {
  TypingInstance out = source;
  std::vector<Edit> ordered(edits.begin(), edits.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const Edit& a, const Edit& b) {
    if (a.region != b.region) return a.region < b.region;
    return a.begin > b.begin;
  });
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const Edit& e = ordered[i];
    const Tokens& src = region_of(source, e.region);
    if (e.begin > e.end || e.end > src.size()) {
      throw ArgumentError("edit span out of range in region " + std::string(to_string(e.region)));
    }
    if (i > 0 && ordered[i - 1].region == e.region && e.end > ordered[i - 1].begin) {
      throw ArgumentError("overlapping edits in region " + std::string(to_string(e.region)));
    }
    Tokens& dst = region_of(out, e.region);
    dst.erase(dst.begin() + static_cast<std::ptrdiff_t>(e.begin),
              dst.begin() + static_cast<std::ptrdiff_t>(e.end));
    dst.insert(dst.begin() + static_cast<std::ptrdiff_t>(e.begin), e.replacement.begin(),
               e.replacement.end());
  }
  return out;
}

TypingInstance replay_provenance(const TypingInstance& source, const PerturbationRecord& record,
                                 std::string_view id) {
  TypingInstance out = apply_edits(source, record.edits);
  out.id = std::string(id);
  out.bias_tags = {record.strategy};
  out.provenance = record;
  return out;
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::General: return "general";
    case Tier::Fine: return "fine";
    case Tier::UltraFine: return "ultra-fine";
  }
  return "?";
}

Tier tier_from_string(std::string_view name) {
  std::string n = lowercase(name);
  if (n == "general" || n == "coarse") return Tier::General;
  if (n == "fine") return Tier::Fine;
  if (n == "ultra-fine" || n == "ultrafine" || n == "ultra_fine") return Tier::UltraFine;
  throw ArgumentError("unknown tier '" + std::string(name) + "'");
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Tokens split_tokens(std::string_view text) {
  Tokens out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t stop = text.find(' ', start);
    if (stop == std::string_view::npos) stop = text.size();
    if (stop > start) out.emplace_back(text.substr(start, stop - start));
    start = stop + 1;
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

namespace {

// Plural variants registered for naive singular/plural matching.
std::vector<std::string> plural_variants(const std::string& lower) {
  std::vector<std::string> out{lower + "s"};
  auto ends_with = [&](std::string_view suffix) {
    return lower.size() >= suffix.size() &&
           lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("s") || ends_with("x") || ends_with("ch") || ends_with("sh")) {
    out.push_back(lower + "es");
  }
  if (lower.size() > 1 && ends_with("y")) {
    out.push_back(lower.substr(0, lower.size() - 1) + "ies");
  }
  return out;
}

}  // namespace

LabelSpace LabelSpace::from_types(std::span<const std::string> types,
                                  const std::map<std::string, Tier>& tiers) {
  LabelSpace space;
  space.types_.assign(types.begin(), types.end());
  std::sort(space.types_.begin(), space.types_.end());
  space.types_.erase(std::unique(space.types_.begin(), space.types_.end()), space.types_.end());
  for (const auto& t : space.types_) {
    if (t.empty()) throw ArgumentError("empty type string in label space");
    auto it = tiers.find(t);
    space.tiers_.emplace(t, it == tiers.end() ? Tier::UltraFine : it->second);
  }
  // Exact lowercase forms take priority over variants of other types.
  for (const auto& t : space.types_) space.normalized_.emplace(lowercase(t), t);
  for (const auto& t : space.types_) {
    for (const auto& v : plural_variants(lowercase(t))) space.normalized_.emplace(v, t);
  }
  return space;
}

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

LabelSpace LabelSpace::load(const fs::path& types_path, const std::optional<fs::path>& tiers_path) {
  std::vector<std::string> types;
  for (auto& line : read_lines(types_path)) {
    if (!line.empty()) types.push_back(line);
  }
  std::map<std::string, Tier> tiers;
  if (tiers_path) {
    std::size_t n = 0;
    for (auto& line : read_lines(*tiers_path)) {
      ++n;
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError(n, "expected type<TAB>tier");
      tiers[line.substr(0, tab)] = tier_from_string(line.substr(tab + 1));
    }
  }
  return from_types(types, tiers);
}

void LabelSpace::save(const fs::path& types_path, const std::optional<fs::path>& tiers_path) const {
  std::string body;
  for (const auto& t : types_) body += t + "\n";
  atomic_write(types_path, body);
  if (tiers_path) {
    std::string tiers;
    for (const auto& t : types_) tiers += t + "\t" + std::string(to_string(tier(t))) + "\n";
    atomic_write(*tiers_path, tiers);
  }
}

bool LabelSpace::contains(std::string_view type) const { return tiers_.find(type) != tiers_.end(); }

std::optional<std::size_t> LabelSpace::index_of(std::string_view type) const {
  auto it = std::lower_bound(types_.begin(), types_.end(), type);
  if (it == types_.end() || *it != type) return std::nullopt;
  return static_cast<std::size_t>(it - types_.begin());
}

Tier LabelSpace::tier(std::string_view type) const {
  auto it = tiers_.find(type);
  if (it == tiers_.end()) throw ArgumentError("type not in label space: " + std::string(type));
  return it->second;
}

std::optional<std::string> LabelSpace::resolve(std::string_view word) const {
  std::string lower = lowercase(word);
  if (auto it = normalized_.find(lower); it != normalized_.end()) return it->second;
  return std::nullopt;
}

json instance_to_json(const TypingInstance& instance) {
  json j;
  j["id"] = instance.id;
  j["mention_span"] = join_tokens(instance.mention);
  j["left_context_token"] = instance.left;
  j["right_context_token"] = instance.right;
  j["y_str"] = std::vector<std::string>(instance.gold.begin(), instance.gold.end());
  if (!instance.bias_tags.empty()) {
    json tags = json::array();
    for (BiasKind k : instance.bias_tags) tags.push_back(std::string(to_string(k)));
    j["bias_tags"] = tags;
  }
  if (instance.provenance) {
    const auto& p = *instance.provenance;
    json edits = json::array();
    for (const auto& e : p.edits) {
      edits.push_back({{"region", std::string(to_string(e.region))},
                       {"begin", e.begin},
                       {"end", e.end},
                       {"tokens", e.replacement}});
    }
    j["provenance"] = {{"source_id", p.source_id},
                       {"strategy", std::string(to_string(p.strategy))},
                       {"edits", edits},
                       {"rng_seed", p.rng_seed ? json(*p.rng_seed) : json(nullptr)}};
    if (!p.note.empty()) j["provenance"]["note"] = p.note;
  }
  return j;
}

namespace {

Tokens token_array(const json& record, const char* field) {
  const auto it = record.find(field);
  if (it == record.end()) throw ArgumentError(std::string("missing field '") + field + "'");
  if (!it->is_array()) throw ArgumentError(std::string("field '") + field + "' must be an array");
  Tokens out;
  for (const auto& t : *it) {
    if (!t.is_string()) throw ArgumentError(std::string("field '") + field + "' must hold strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

}  // namespace

TypingInstance instance_from_json(const json& record, const std::string& fallback_id) {
  if (!record.is_object()) throw ArgumentError("record is not a JSON object");
  TypingInstance inst;
  inst.id = record.contains("id") ? record.at("id").get<std::string>() : fallback_id;
  const auto mention = record.find("mention_span");
  if (mention == record.end() || !mention->is_string()) {
    throw ArgumentError("missing string field 'mention_span'");
  }
  inst.mention = split_tokens(mention->get<std::string>());
  inst.left = token_array(record, "left_context_token");
  inst.right = token_array(record, "right_context_token");
  for (const auto& t : token_array(record, "y_str")) inst.gold.insert(t);
  if (inst.mention.empty() && !(inst.left.empty() && inst.right.empty())) {
    throw ArgumentError("empty mention with non-empty context");
  }
  if (auto tags = record.find("bias_tags"); tags != record.end()) {
    for (const auto& t : *tags) inst.bias_tags.insert(bias_kind_from_string(t.get<std::string>()));
  }
  if (auto prov = record.find("provenance"); prov != record.end() && !prov->is_null()) {
    PerturbationRecord p;
    p.source_id = prov->at("source_id").get<std::string>();
    p.strategy = bias_kind_from_string(prov->at("strategy").get<std::string>());
    for (const auto& e : prov->at("edits")) {
      Edit edit;
      edit.region = region_from_string(e.at("region").get<std::string>());
      edit.begin = e.at("begin").get<std::size_t>();
      edit.end = e.at("end").get<std::size_t>();
      edit.replacement = e.at("tokens").get<Tokens>();
      p.edits.push_back(std::move(edit));
    }
    if (auto seed = prov->find("rng_seed"); seed != prov->end() && !seed->is_null()) {
      p.rng_seed = seed->get<std::uint64_t>();
    }
    p.note = prov->value("note", "");
    inst.provenance = std::move(p);
  }
  return inst;
}

std::vector<TypingInstance> load_dataset(const fs::path& path, const LabelSpace* label_space) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  const std::string stem = path.filename().string();
  std::vector<TypingInstance> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    const std::size_t line_no = ++index;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      out.push_back(instance_from_json(record, stem + ":" + std::to_string(line_no - 1)));
    } catch (const ArgumentError& e) {
      throw ParseError(line_no, e.what());
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (label_space) validate_against(out, *label_space);
  return out;
}

void validate_against(std::span<const TypingInstance> instances, const LabelSpace& label_space) {
  std::set<std::string> offenders;
  for (const auto& inst : instances) {
    for (const auto& t : inst.gold) {
      if (!label_space.contains(t)) offenders.insert(t);
    }
  }
  if (!offenders.empty()) {
    std::string msg = "gold types not in label space:";
    for (const auto& t : offenders) msg += " " + t;
    throw ValidationError(msg, {offenders.begin(), offenders.end()});
  }
}

void write_dataset(std::span<const TypingInstance> instances, const fs::path& path) {
  std::string body;
  for (const auto& inst : instances) {
    for (const auto& t : inst.mention) {
      if (t.empty() || t.find(' ') != std::string::npos) {
        throw ArgumentError("mention token '" + t + "' in " + inst.id +
                            " cannot be represented in mention_span");
      }
    }
    body += instance_to_json(inst).dump();
    body += '\n';
  }
  atomic_write(path, body);
}

void atomic_write(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  static std::atomic<unsigned long> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace typebias
