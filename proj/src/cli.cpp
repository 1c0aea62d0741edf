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


#include "typebias/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "typebias/augment.hpp"
#include "typebias/debias.hpp"
#include "typebias/diagnose.hpp"
#include "typebias/error.hpp"
#include "typebias/hash.hpp"
#include "typebias/log.hpp"
#include "typebias/oracles.hpp"
#include "typebias/synthetic.hpp"
#include "typebias/typers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace typebias {

namespace {

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string num(std::size_t v) { return std::to_string(v); }

std::string boolean(bool b) { return b ? "true" : "false"; }

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> table = [] {
    const ModelConfig m;
    const DebiasConfig d;
    const AfliteConfig a;
    const ShortcutConfig s;
    return std::vector<std::pair<std::string, std::string>>{
        {"seed", "0"},
        {"out", "run"},
        {"threshold", num(kDefaultThreshold)},
        {"method", "baseline"},
        {"bias", ""},
        // inputs
        {"train", ""},
        {"test", ""},
        {"augmented_test", ""},
        {"counterfactual", ""},
        {"labels", ""},
        {"tiers", ""},
        {"names", ""},
        {"checkpoint", ""},
        // oracles
        {"oracle.masked_fill", ""},
        {"oracle.wsd", ""},
        {"oracle.ner", ""},
        {"oracle.coref", ""},
        {"oracle.depparse", ""},
        {"oracle.cache", ""},
        {"oracle.lenient", "false"},
        {"oracle.max_failure_rate", "0.1"},
        // diagnosis and augmentation
        {"n_names", "5"},
        {"top_k", "10"},
        {"diagnose.location", "true"},
        // model
        {"model.dim", num(m.dim)},
        {"model.buckets", num(m.buckets)},
        {"model.salt", "0x" + hex64(m.salt)},
        {"model.epochs", num(m.epochs)},
        {"model.batch_size", num(m.batch_size)},
        {"model.learning_rate", num(m.learning_rate)},
        {"model.init_scale", num(m.init_scale)},
        {"model.context_dropout", num(m.context_dropout)},
        {"model.input_dropout", num(m.input_dropout)},
        // debiasing
        {"debias.gamma", num(d.gamma)},
        {"debias.lambda", num(d.lambda)},
        {"debias.tau", num(d.tau)},
        {"debias.beta", num(d.beta)},
        {"debias.alpha", num(d.alpha)},
        {"debias.warm_start", boolean(d.warm_start)},
        {"aflite.probes", num(a.probes)},
        {"aflite.tau", num(a.tau)},
        {"aflite.drop_rate", num(a.drop_rate)},
        {"aflite.target_rate", num(a.target_rate)},
        {"aflite.train_share", num(a.train_share)},
        {"aflite.probe_epochs", num(a.probe_epochs)},
        {"aflite.probe_learning_rate", num(a.probe_learning_rate)},
        // synthetic generator
        {"synthetic.n_train", num(s.n_train)},
        {"synthetic.n_test", num(s.n_test)},
        {"synthetic.n_types", num(s.n_types)},
        {"synthetic.shortcut_rate", num(s.shortcut_rate)},
        {"synthetic.neutral_rate", num(s.neutral_rate)},
        {"synthetic.compound_rate", num(s.compound_rate)},
        {"synthetic.modifier_rate", num(s.modifier_rate)},
        {"synthetic.distractor_rate", num(s.distractor_rate)},
        {"synthetic.zipf", num(s.zipf)},
    };
  }();
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

// ---- RunConfig -------------------------------------------------------------

RunConfig::RunConfig() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& kv : defaults()) out.push_back(kv.first);
    return out;
  }();
  return keys;
}

std::string RunConfig::env_name(std::string_view key) {
  std::string out = "TYPEBIAS_";
  for (char c : key) out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

void RunConfig::set(const std::string& key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'", {key});
  it->second = std::move(value);
}

bool RunConfig::is_set(const std::string& key) const { return !get(key).empty(); }

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ArgumentError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const auto& s = get(key);
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "' expects a number, got '" + s + "'", {key});
  return v;
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  const auto& s = get(key);
  std::uint64_t v = 0;
  const bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
  const char* b = s.data() + (hex ? 2 : 0);
  auto r = std::from_chars(b, s.data() + s.size(), v, hex ? 16 : 10);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "' expects a non-negative integer, got '" + s + "'", {key});
  return v;
}

std::size_t RunConfig::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

bool RunConfig::flag(const std::string& key) const {
  const std::string s = lowercase(get(key));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("config key '" + key + "' expects true or false, got '" + get(key) + "'", {key});
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::string_view s = get(key);
  while (!s.empty()) {
    auto comma = s.find(',');
    auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

RunConfig resolve_config(const std::optional<std::string>& file_text, const EnvLookup& env,
                         const std::map<std::string, std::string>& flags) {
  RunConfig config;
  if (file_text) {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : parse_config_text(*file_text)) {
      if (config.values().count(k)) config.set(k, v);
      else unknown.push_back(k);
    }
    if (!unknown.empty()) {
      std::string msg = "unknown config keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw ValidationError(msg, unknown);
    }
  }
  if (env) {
    for (const auto& key : RunConfig::known_keys())
      if (auto v = env(RunConfig::env_name(key))) config.set(key, *v);
  }
  for (const auto& [k, v] : flags) config.set(k, v);
  return config;
}

// ---- commands --------------------------------------------------------------

namespace {

class OracleRateExceeded : public Error {
 public:
  explicit OracleRateExceeded(const std::string& message) : Error("oracle-failure-rate", message) {}
};

struct Run {
  const RunConfig& config;
  std::ostream& out;
  fs::path dir;
  std::vector<std::string> artifacts;

  void write(const std::string& name, std::string_view body) {
    atomic_write(dir / name, body);
    artifacts.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

const std::vector<std::string> kPathKeys = {"train",  "test",  "augmented_test", "counterfactual",
                                            "labels", "tiers", "checkpoint"};

std::string file_digest(const fs::path& p) { return hex64(fnv1a64(read_file(p))); }

json input_digests(const RunConfig& config) {
  json j = json::object();
  for (const auto& key : kPathKeys) {
    if (!config.is_set(key)) continue;
    const fs::path p = config.get(key);
    if (fs::is_regular_file(p)) j[key] = {{"path", p.string()}, {"fnv1a64", file_digest(p)}};
  }
  if (config.is_set("names")) {
    const fs::path dir = config.get("names");
    for (const char* f : {"names.masculine.txt", "names.feminine.txt"})
      if (fs::is_regular_file(dir / f))
        j[std::string("names/") + f] = {{"path", (dir / f).string()}, {"fnv1a64", file_digest(dir / f)}};
  }
  for (const auto& key : RunConfig::known_keys()) {
    if (key.rfind("oracle.", 0) != 0 || !config.is_set(key)) continue;
    const std::string& spec = config.get(key);
    auto colon = spec.find(':');
    if (colon == std::string::npos) continue;
    const std::string scheme = spec.substr(0, colon);
    if (scheme != "stub" && scheme != "stub-lenient" && scheme != "synthetic") continue;
    const fs::path p = spec.substr(colon + 1);
    if (fs::is_regular_file(p)) j[key] = {{"path", p.string()}, {"fnv1a64", file_digest(p)}};
  }
  return j;
}

void require(const RunConfig& config, const std::string& key, std::string_view command) {
  if (!config.is_set(key))
    throw ValidationError(std::string(command) + " needs '" + key + "' (flag --" + key + " or config key)", {key});
}

LabelSpace load_labels(const RunConfig& config) {
  std::optional<fs::path> tiers;
  if (config.is_set("tiers")) tiers = config.get("tiers");
  return LabelSpace::load(config.get("labels"), tiers);
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.dim = c.count("model.dim");
  m.buckets = c.count("model.buckets");
  m.salt = c.u64("model.salt");
  m.epochs = c.count("model.epochs");
  m.batch_size = c.count("model.batch_size");
  m.learning_rate = c.number("model.learning_rate");
  m.init_scale = c.number("model.init_scale");
  m.context_dropout = c.number("model.context_dropout");
  if (m.dim == 0 || m.buckets == 0 || m.batch_size == 0)
    throw ValidationError("model.dim, model.buckets and model.batch_size must be positive");
  if (m.context_dropout < 0.0 || m.context_dropout >= 1.0)
    throw ValidationError("model.context_dropout must be in [0, 1)", {"model.context_dropout"});
  m.input_dropout = c.number("model.input_dropout");
  if (m.input_dropout < 0.0 || m.input_dropout + m.context_dropout >= 1.0)
    throw ValidationError("model.input_dropout must be non-negative with input + context dropout below 1",
                          {"model.input_dropout"});
  return m;
}

Oracles build_oracles(const RunConfig& config, const fs::path& out_dir) {
  Oracles oracles;
  const StubMode mode = config.flag("oracle.lenient") ? StubMode::Lenient : StubMode::Strict;
  const std::string cache = config.get("oracle.cache");
  const bool caching = lowercase(cache) != "off" && lowercase(cache) != "none";
  const fs::path cache_dir = cache.empty() ? out_dir / ".oracle-cache" : fs::path(cache);
  for (OracleKind kind : {OracleKind::MaskedFill, OracleKind::Wsd, OracleKind::Ner, OracleKind::Coref,
                          OracleKind::DepParse}) {
    const std::string key = "oracle." + std::string(to_string(kind));
    if (!config.is_set(key)) continue;
    const std::string& spec = config.get(key);
    auto transport = make_transport(spec, mode);
    // Replay tables and the synthetic oracle answer locally; only remote
    // models are worth caching.
    const bool remote = spec.rfind("process:", 0) == 0 || spec.rfind("http", 0) == 0;
    if (remote && caching)
      transport = std::make_shared<CachedTransport>(transport, cache_dir / std::string(to_string(kind)));
    oracles.set(kind, std::move(transport));
  }
  return oracles;
}

void require_oracle(const Oracles& oracles, OracleKind kind, std::string_view why) {
  if (!oracles.has(kind))
    throw ValidationError(std::string(why) + " needs oracle." + std::string(to_string(kind)),
                          {"oracle." + std::string(to_string(kind))});
}

void check_failure_rate(const RunConfig& config, std::size_t failures, std::size_t attempts) {
  if (attempts == 0 || failures == 0) return;
  const double rate = static_cast<double>(failures) / static_cast<double>(attempts);
  const double cap = config.number("oracle.max_failure_rate");
  if (rate > cap)
    throw OracleRateExceeded(std::to_string(failures) + " of " + std::to_string(attempts) +
                             " oracle-dependent steps failed (rate " + num(rate) + " > cap " + num(cap) + ")");
  log_warning(std::to_string(failures) + " of " + std::to_string(attempts) +
              " oracle-dependent steps failed; within the configured cap");
}

// Checkpoint plus optional sidecar describing how to apply it.
struct LoadedModel {
  ReferenceModel base;
  std::unique_ptr<CounterfactualModel> counterfactual;
  const TypingModel& model() const {
    return counterfactual ? static_cast<const TypingModel&>(*counterfactual) : base;
  }
};

fs::path meta_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".meta.json");
  return p;
}

std::unique_ptr<LoadedModel> load_model(const RunConfig& config) {
  const fs::path path = config.get("checkpoint");
  auto loaded = std::make_unique<LoadedModel>(LoadedModel{ReferenceModel::load(path), nullptr});
  const fs::path meta = meta_path(path);
  if (fs::is_regular_file(meta)) {
    json j;
    try {
      j = json::parse(read_file(meta));
    } catch (const json::exception& e) {
      throw ParseError(1, meta.string() + ": " + e.what());
    }
    if (j.value("method", "") == to_string(DebiasMethod::CounterfactualInference)) {
      const BiasKind kind = bias_kind_from_string(j.at("bias_kind").get<std::string>());
      loaded->counterfactual = std::make_unique<CounterfactualModel>(
          loaded->base, make_bias_view_fn(kind), j.value("alpha", 1.0));
    }
  }
  return loaded;
}

// diagnose ------------------------------------------------------------------

void cmd_diagnose(Run& run) {
  const RunConfig& c = run.config;
  for (const char* k : {"checkpoint", "test", "labels"}) require(c, k, "diagnose");
  const LabelSpace labels = load_labels(c);
  const auto test = load_dataset(c.get("test"), &labels);
  auto loaded = load_model(c);
  const TypingModel& model = loaded->model();
  const Oracles oracles = build_oracles(c, run.dir);

  std::optional<NameLists> names;
  if (c.is_set("names")) names = NameLists::load(c.get("names"));

  // Requested kinds, or every kind whose inputs are configured.
  std::vector<std::string> requested = c.list("bias");
  const bool explicit_request = !requested.empty();
  bool want_location = c.flag("diagnose.location");
  if (!explicit_request) {
    for (BiasKind k : kAllBiasKinds) requested.push_back(std::string(to_string(k)));
  } else {
    want_location = false;
  }
  std::vector<BiasKind> kinds;
  for (const auto& name : requested) {
    if (lowercase(name) == "location") {
      want_location = true;
      continue;
    }
    const BiasKind kind = bias_kind_from_string(name);
    std::vector<std::pair<bool, std::string>> needs;
    switch (kind) {
      case BiasKind::MentionContext:
        needs = {{oracles.has(OracleKind::MaskedFill), "oracle.masked_fill"}};
        break;
      case BiasKind::LexicalOverlapping:
        needs = {{oracles.has(OracleKind::MaskedFill), "oracle.masked_fill"},
                 {oracles.has(OracleKind::Wsd), "oracle.wsd"}};
        break;
      case BiasKind::NamedEntity:
        needs = {{oracles.has(OracleKind::MaskedFill), "oracle.masked_fill"},
                 {oracles.has(OracleKind::Ner), "oracle.ner"}};
        break;
      case BiasKind::Pronoun:
        needs = {{oracles.has(OracleKind::MaskedFill), "oracle.masked_fill"},
                 {oracles.has(OracleKind::Coref), "oracle.coref"},
                 {names.has_value(), "names"}};
        break;
      case BiasKind::Dependency:
        needs = {{oracles.has(OracleKind::DepParse), "oracle.depparse"}};
        break;
      case BiasKind::Overgeneralization:
        break;
    }
    std::vector<std::string> missing;
    for (const auto& [ok, key] : needs)
      if (!ok) missing.push_back(key);
    if (missing.empty()) {
      kinds.push_back(kind);
    } else if (explicit_request) {
      std::string msg = std::string(to_string(kind)) + " diagnosis needs";
      for (const auto& m : missing) msg += " " + m;
      throw ValidationError(msg, missing);
    } else {
      log_info("skipping " + std::string(to_string(kind)) + " diagnosis: " + missing.front() + " not configured");
    }
  }
  if (want_location && !oracles.has(OracleKind::Wsd)) {
    if (explicit_request) require_oracle(oracles, OracleKind::Wsd, "location control");
    want_location = false;
  }

  FullReport report;
  std::vector<BiasVerdict> verdicts;
  DiagnosisOptions options;
  options.threshold = c.number("threshold");
  options.seed = c.u64("seed");
  options.names = names ? &*names : nullptr;
  options.n_names = c.count("n_names");
  options.verdicts = &verdicts;
  std::size_t failures = 0;
  std::size_t attempts = 0;
  for (BiasKind kind : kinds) {
    switch (kind) {
      case BiasKind::Dependency:
        report.dependency = run_dependency_diagnosis(model, test, oracles);
        break;
      case BiasKind::Overgeneralization:
        report.overgeneralization = run_overgeneralization_diagnosis(model, test, labels, c.count("top_k"));
        break;
      default:
        report.bias.push_back(run_bias_diagnosis(model, test, kind, oracles, labels, options));
        failures += report.bias.back().n_oracle_failures;
        attempts += test.size();
    }
  }
  if (want_location) {
    report.location = perturbation_location_control(model, test, oracles, labels);
    failures += report.location->n_oracle_failures;
    attempts += test.size();
  }

  std::string verdict_lines;
  for (const auto& v : verdicts) verdict_lines += verdict_to_json(v).dump() + "\n";
  run.write("verdicts.jsonl", verdict_lines);

  std::string prediction_lines;
  auto emit_rows = [&](const std::string& diagnosis, const std::vector<PredictionRow>& rows) {
    for (const auto& r : rows)
      prediction_lines += json{{"diagnosis", diagnosis}, {"id", r.instance_id}, {"split", r.split},
                               {"form", r.form},         {"gold", r.gold},      {"pred", r.pred},
                               {"f1", r.f1}}
                              .dump() +
                          "\n";
  };
  for (const auto& b : report.bias) emit_rows(std::string(to_string(b.bias_kind)), b.rows);
  if (report.dependency) emit_rows("Dependency", report.dependency->rows);
  if (report.overgeneralization) emit_rows("Overgeneralization", report.overgeneralization->rows);
  run.write("predictions.jsonl", prediction_lines);

  const std::string text = render_report(report, ReportFormat::Text);
  run.write("report.json", render_report(report, ReportFormat::Json));
  run.write("report.txt", text);
  run.out << text;
  check_failure_rate(c, failures, attempts);
}

// augment -------------------------------------------------------------------

void cmd_augment(Run& run) {
  const RunConfig& c = run.config;
  for (const char* k : {"train", "labels"}) require(c, k, "augment");
  const LabelSpace labels = load_labels(c);
  const auto data = load_dataset(c.get("train"), &labels);
  const Oracles oracles = build_oracles(c, run.dir);
  require_oracle(oracles, OracleKind::MaskedFill, "augmentation");

  AugmentConfig ac;
  ac.threshold = c.number("threshold");
  ac.seed = c.u64("seed");
  ac.n_names = c.count("n_names");
  auto strategies = c.list("bias");
  if (!strategies.empty()) {
    ac.lexical = ac.named_entity = ac.pronoun = ac.dependency = false;
    for (const auto& s : strategies) {
      switch (bias_kind_from_string(s)) {
        case BiasKind::LexicalOverlapping: ac.lexical = true; break;
        case BiasKind::NamedEntity: ac.named_entity = true; break;
        case BiasKind::Pronoun: ac.pronoun = true; break;
        case BiasKind::Dependency: ac.dependency = true; break;
        default: throw ValidationError("bias kind '" + s + "' has no augmentation strategy", {"bias"});
      }
    }
  }
  // Strategies whose oracle is missing are switched off, unless requested.
  auto gate = [&](bool& on, OracleKind kind, const char* what) {
    if (!on || oracles.has(kind)) return;
    if (!strategies.empty()) require_oracle(oracles, kind, what);
    log_info(std::string("skipping ") + what + ": oracle." + std::string(to_string(kind)) + " not configured");
    on = false;
  };
  gate(ac.lexical, OracleKind::Wsd, "lexical substitution");
  gate(ac.named_entity, OracleKind::Ner, "named-entity substitution");
  gate(ac.pronoun, OracleKind::Coref, "pronoun substitution");
  gate(ac.dependency, OracleKind::DepParse, "headword truncation");
  NameLists names;
  if (ac.pronoun) {
    if (c.is_set("names")) {
      names = NameLists::load(c.get("names"));
    } else if (!strategies.empty()) {
      require(c, "names", "pronoun augmentation");
    } else {
      log_info("skipping pronoun substitution: names not configured");
      ac.pronoun = false;
    }
  }

  auto result = build_counterfactual_set(data, oracles, labels, names, ac);
  const fs::path path = run.dir / "augmented.jsonl";
  write_dataset(result.instances, path);
  run.artifacts.push_back("augmented.jsonl");
  json stats{{"instances", result.stats.instances},
             {"attempts", result.stats.attempts},
             {"oracle_failures", result.stats.oracle_failures},
             {"produced", result.instances.size()}};
  for (const auto& [k, n] : result.stats.candidates) stats["candidates"][std::string(to_string(k))] = n;
  for (const auto& [k, n] : result.stats.kept) stats["kept"][std::string(to_string(k))] = n;
  run.write_json("augment_stats.json", stats);
  run.out << "augmented " << result.instances.size() << " instances from " << data.size() << " -> "
          << path.string() << "\n";
  check_failure_rate(c, result.stats.oracle_failures, result.stats.attempts);
}

// train ---------------------------------------------------------------------

DebiasConfig debias_config(const RunConfig& c) {
  DebiasConfig d;
  d.method = debias_method_from_string(c.get("method"));
  auto kinds = c.list("bias");
  if (kinds.size() > 1) throw ValidationError("train takes a single bias kind", {"bias"});
  if (!kinds.empty()) d.bias_kind = bias_kind_from_string(kinds.front());
  d.model = model_config(c);
  d.gamma = c.number("debias.gamma");
  d.lambda = c.number("debias.lambda");
  d.tau = c.number("debias.tau");
  d.beta = c.number("debias.beta");
  d.alpha = c.number("debias.alpha");
  d.warm_start = c.flag("debias.warm_start");
  d.aflite.probes = c.count("aflite.probes");
  d.aflite.tau = c.number("aflite.tau");
  d.aflite.drop_rate = c.number("aflite.drop_rate");
  d.aflite.target_rate = c.number("aflite.target_rate");
  d.aflite.train_share = c.number("aflite.train_share");
  d.aflite.probe_epochs = c.count("aflite.probe_epochs");
  d.aflite.probe_learning_rate = c.number("aflite.probe_learning_rate");
  d.validate();
  return d;
}

void cmd_train(Run& run) {
  const RunConfig& c = run.config;
  for (const char* k : {"train", "labels"}) require(c, k, "train");
  const DebiasConfig config = debias_config(c);
  const LabelSpace labels = load_labels(c);
  const auto train = load_dataset(c.get("train"), &labels);
  std::vector<TypingInstance> counterfactual;
  if (config.method == DebiasMethod::Augmentation) require(c, "counterfactual", "augmentation training");
  if (c.is_set("counterfactual")) counterfactual = load_dataset(c.get("counterfactual"), &labels);

  DebiasInputs inputs;
  inputs.train_set = train;
  inputs.counterfactual_set = counterfactual;
  inputs.labels = &labels;
  TrainLog log;
  ReferenceModel model = train_debiased(inputs, config, c.u64("seed"), &log);

  model.save(run.dir / "model.json");
  run.artifacts.push_back("model.json");
  json meta{{"method", std::string(to_string(config.method))}, {"alpha", config.alpha}};
  meta["bias_kind"] = config.bias_kind ? json(std::string(to_string(*config.bias_kind))) : json(nullptr);
  run.write_json("model.meta.json", meta);
  run.write_json("train_log.json", {{"method", std::string(to_string(config.method))},
                                    {"config", config.to_json()},
                                    {"steps", log.steps},
                                    {"epoch_loss", log.epoch_loss},
                                    {"train_instances", train.size()},
                                    {"counterfactual_instances", counterfactual.size()}});
  run.out << "trained " << to_string(config.method) << " on " << train.size() << " instances -> "
          << (run.dir / "model.json").string() << "\n";
}

// evaluate ------------------------------------------------------------------

void cmd_evaluate(Run& run) {
  const RunConfig& c = run.config;
  for (const char* k : {"checkpoint", "test", "augmented_test", "labels"}) require(c, k, "evaluate");
  const LabelSpace labels = load_labels(c);
  const auto test = load_dataset(c.get("test"), &labels);
  const auto augmented = load_dataset(c.get("augmented_test"), &labels);
  if (test.empty() || augmented.empty()) throw ValidationError("evaluate needs non-empty test sets");
  auto loaded = load_model(c);
  std::string method = "model";
  const fs::path meta = meta_path(c.get("checkpoint"));
  if (fs::is_regular_file(meta)) method = json::parse(read_file(meta)).value("method", method);
  MitigationReport report;
  report.rows.push_back({method, evaluate_model(loaded->model(), test), evaluate_model(loaded->model(), augmented)});
  const std::string table = render_mitigation_table(report);
  run.write_json("mitigation.json", report.to_json());
  run.write("mitigation.txt", table);
  run.out << table;
}

// probe-empty ---------------------------------------------------------------

void cmd_probe_empty(Run& run) {
  const RunConfig& c = run.config;
  require(c, "checkpoint", "probe-empty");
  auto loaded = load_model(c);
  auto prediction = predict(loaded->model(), empty_probe());
  auto report = empty_input_report(prediction.scores, c.count("top_k"));
  auto scored = [](const std::vector<ScoredType>& v) {
    json out = json::array();
    for (const auto& s : v) out.push_back({{"type", s.type}, {"probability", s.probability}});
    return out;
  };
  run.write_json("empty_input.json", {{"top", scored(report.top_types)},
                                      {"bottom", scored(report.bottom_types)},
                                      {"uniform_divergence", report.uniform_divergence}});
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::string text = "top:";
  for (const auto& s : report.top_types) text += " " + s.type + " (" + fixed(s.probability) + ")";
  text += "\nbottom:";
  for (const auto& s : report.bottom_types) text += " " + s.type + " (" + fixed(s.probability) + ")";
  text += "\nuniform divergence: " + fixed(report.uniform_divergence) + "\n";
  run.write("empty_input.txt", text);
  run.out << text;
}

// gen-synthetic -------------------------------------------------------------

void cmd_gen_synthetic(Run& run) {
  const RunConfig& c = run.config;
  ShortcutConfig s;
  s.seed = c.u64("seed");
  s.n_train = c.count("synthetic.n_train");
  s.n_test = c.count("synthetic.n_test");
  s.n_types = c.count("synthetic.n_types");
  s.shortcut_rate = c.number("synthetic.shortcut_rate");
  s.neutral_rate = c.number("synthetic.neutral_rate");
  s.compound_rate = c.number("synthetic.compound_rate");
  s.modifier_rate = c.number("synthetic.modifier_rate");
  s.distractor_rate = c.number("synthetic.distractor_rate");
  s.zipf = c.number("synthetic.zipf");
  const ShortcutDataset d = make_shortcut_dataset(s);

  auto dataset = [&](const char* name, const std::vector<TypingInstance>& v) {
    write_dataset(v, run.dir / name);
    run.artifacts.push_back(name);
  };
  dataset("train.jsonl", d.train);
  dataset("biased_test.jsonl", d.biased_test);
  dataset("debiased_test.jsonl", d.debiased_test);
  d.labels.save(run.dir / "labels.txt", run.dir / "tiers.tsv");
  run.artifacts.push_back("labels.txt");
  run.artifacts.push_back("tiers.tsv");
  d.world.save(run.dir / "world.json");
  run.artifacts.push_back("world.json");
  fs::create_directories(run.dir / "names");
  std::string masc;
  for (const auto& n : d.world.names.masculine) masc += n + "\n";
  std::string fem;
  for (const auto& n : d.world.names.feminine) fem += n + "\n";
  run.write("names/names.masculine.txt", masc);
  run.write("names/names.feminine.txt", fem);
  run.out << "wrote " << d.train.size() << " train, " << d.biased_test.size() << " biased and "
          << d.debiased_test.size() << " debiased instances to " << run.dir.string()
          << " (oracles: synthetic:" << (run.dir / "world.json").string() << ")\n";
}

// ---- driver ----------------------------------------------------------------

int exit_code_for(const Error& e) {
  const std::string& k = e.kind();
  if (k == "argument" || k == "validation" || k == "parse") return kExitConfig;
  if (k == "io") return kExitIo;
  if (k == "oracle-failure-rate") return kExitOracleRate;
  if (k == "oracle-unavailable" || k == "oracle-miss") return kExitOracle;
  return kExitInternal;
}

void emit_error(std::ostream& err, const std::string& command, const std::string& kind,
                const std::string& message, const std::vector<std::string>& offenders = {}) {
  json j{{"error", kind}, {"message", message}};
  if (!command.empty()) j["command"] = command;
  if (!offenders.empty()) j["offenders"] = offenders;
  err << j.dump() << "\n";
}

struct CommandSpec {
  const char* name;
  const char* help;
  void (*fn)(Run&);
};

const CommandSpec kCommands[] = {
    {"diagnose", "split a test set by prompt verdicts and score a model on perturbed inputs", cmd_diagnose},
    {"augment", "build a counterfactual augmented dataset", cmd_augment},
    {"train", "train a typing model with a debiasing method", cmd_train},
    {"evaluate", "score a checkpoint on original and augmented test sets", cmd_evaluate},
    {"probe-empty", "query a checkpoint with the empty input", cmd_probe_empty},
    {"gen-synthetic", "generate the planted-shortcut dataset", cmd_gen_synthetic},
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"typebias: bias diagnosis and mitigation for entity typing models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // Flag values per command; only options given on the command line count.
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<CLI::Option*, std::string>> flag_options;
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"seed", "random seed"},
      {"out", "run directory"},
      {"threshold", "prompt verdict threshold"},
      {"method", "debiasing method"},
      {"bias", "bias kind(s), comma separated"},
      {"train", "training dataset (JSON Lines)"},
      {"test", "test dataset"},
      {"augmented_test", "counterfactual test dataset"},
      {"counterfactual", "counterfactual training instances"},
      {"labels", "label space, one type per line"},
      {"tiers", "type<TAB>tier file"},
      {"names", "directory with names.masculine.txt and names.feminine.txt"},
      {"checkpoint", "model checkpoint"},
      {"oracle.masked_fill", "masked-fill oracle (stub:PATH, synthetic:PATH, process:CMD, http://HOST:PORT)"},
      {"oracle.wsd", "sense oracle"},
      {"oracle.ner", "named-entity oracle"},
      {"oracle.coref", "coreference oracle"},
      {"oracle.depparse", "dependency oracle"},
  };
  for (const auto& spec : kCommands) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--set", sets, "KEY=VALUE override, repeatable");
    for (const auto& [key, help] : flag_keys) {
      std::string name = "--" + key;
      std::replace(name.begin() + 2, name.end(), '_', '-');
      if (key.rfind("oracle.", 0) == 0) name = "--" + key;
      flag_options.emplace_back(sub->add_option(name, flag_values[key], help), key);
    }
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    emit_error(err, "", "usage", e.what());
    return kExitConfig;
  }

  const CLI::App* active = app.get_subcommands().front();
  const std::string command = active->get_name();
  try {
    std::map<std::string, std::string> flags;
    for (const auto& [opt, key] : flag_options)
      if (opt->count() > 0) flags[key] = flag_values[key];
    for (const auto& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects KEY=VALUE, got '" + s + "'");
      flags[trim(std::string_view(s).substr(0, eq))] = trim(std::string_view(s).substr(eq + 1));
    }
    std::optional<std::string> file_text;
    if (!config_path.empty()) file_text = read_file(config_path);
    const RunConfig config = resolve_config(file_text, env, flags);

    Run run{config, out, fs::path(config.get("out")), {}};
    fs::create_directories(run.dir);
    if (file_text) atomic_write(run.dir / "config.source.txt", *file_text);
    atomic_write(run.dir / "config.txt", config.serialize());
    atomic_write(run.dir / "seed.txt", std::to_string(config.u64("seed")) + "\n");
    atomic_write(run.dir / "inputs.json", input_digests(config).dump(2) + "\n");

    for (const auto& spec : kCommands)
      if (command == spec.name) spec.fn(run);

    json manifest{{"command", command}, {"status", "ok"}, {"artifacts", run.artifacts}};
    atomic_write(run.dir / "run.json", manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const ValidationError& e) {
    emit_error(err, command, e.kind(), e.what(), e.offenders());
    return exit_code_for(e);
  } catch (const Error& e) {
    emit_error(err, command, e.kind(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    emit_error(err, command, "internal", e.what());
    return kExitInternal;
  }
}

}  // namespace typebias
