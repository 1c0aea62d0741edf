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

#include "typebias/diagnose.hpp"

#include <cmath>
#include <cstdio>

#include "typebias/error.hpp"
#include "typebias/log.hpp"

namespace typebias {

namespace {

double round6(double x) {
  double r = std::round(x * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

PRF rounded(PRF p) {
  p.precision = round6(p.precision);
  p.recall = round6(p.recall);
  p.f1 = round6(p.f1);
  return p;
}

GridCell make_cell(const std::vector<GoldPred>& pairs) {
  GridCell cell;
  cell.n = pairs.size();
  if (!pairs.empty()) cell.prf = rounded(macro_prf(pairs));
  return cell;
}

std::optional<double> cell_delta(const std::vector<GoldPred>& before, const std::vector<GoldPred>& after) {
  if (before.empty() || after.empty()) return std::nullopt;
  try {
    return round6(relative_delta(macro_prf(before).f1, macro_prf(after).f1));
  } catch (const UndefinedDelta&) {
    return std::nullopt;
  }
}

PredictionRow score_row(const TypingModel& model, const TypingInstance& input, const std::string& id,
                        std::string split, std::string form) {
  PredictionRow row;
  row.instance_id = id;
  row.split = std::move(split);
  row.form = std::move(form);
  row.gold = input.gold;
  row.pred = predict(model, input).types;
  row.f1 = round6(instance_prf(row.gold, row.pred).f1);
  return row;
}

bool is_oracle_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const OracleUnavailable&) {
    return true;
  } catch (const OracleMiss&) {
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace

std::string_view expected_direction(BiasKind kind) {
  return kind == BiasKind::MentionContext ? "↑" : "↓";
}

DiagnosisReport run_bias_diagnosis(const TypingModel& model, std::span<const TypingInstance> test_set,
                                   BiasKind bias_kind, const Oracles& oracles,
                                   const LabelSpace& label_space, const DiagnosisOptions& options) {
  switch (bias_kind) {
    case BiasKind::MentionContext:
    case BiasKind::LexicalOverlapping:
    case BiasKind::NamedEntity:
      break;
    case BiasKind::Pronoun:
      if (!options.names) throw ArgumentError("pronoun diagnosis needs name lists");
      break;
    default:
      throw ArgumentError("bias kind " + std::string(to_string(bias_kind)) + " has no verdict-split diagnosis");
  }

  DiagnosisReport report;
  report.bias_kind = bias_kind;
  report.direction = std::string(expected_direction(bias_kind));

  EntityPool pool;
  if (bias_kind == BiasKind::NamedEntity)
    pool = build_entity_pool(test_set, oracles, label_space, options.threshold);

  std::array<std::array<std::vector<GoldPred>, 2>, 2> pairs;
  for (const auto& inst : test_set) {
    BiasVerdict verdict;
    verdict.instance_id = inst.id;
    verdict.bias_kind = bias_kind;
    std::optional<TypingInstance> perturbed;
    try {
      switch (bias_kind) {
        case BiasKind::MentionContext:
          verdict = classify_bias(inst, bias_kind, oracles, label_space, options.threshold);
          if (!inst.mention.empty()) perturbed = bias_view(inst, bias_kind);
          break;
        case BiasKind::LexicalOverlapping: {
          auto candidates = lexical_substitute(inst, oracles, label_space);
          verdict = classify_bias(inst, bias_kind, oracles, label_space, options.threshold, candidates);
          if (!candidates.empty()) perturbed = std::move(candidates.front());
          break;
        }
        case BiasKind::NamedEntity: {
          verdict = classify_bias(inst, bias_kind, oracles, label_space, options.threshold);
          if (verdict.verdict == Verdict::Undecided) break;
          auto spans = oracles.ner(inst.sentence());
          auto direction = verdict.verdict == Verdict::Biased ? SubstitutionDirection::ToNonInformative
                                                              : SubstitutionDirection::ToInformative;
          auto sub = ne_substitute(inst, spans, pool, options.seed, direction);
          if (sub.instance) perturbed = std::move(sub.instance);
          break;
        }
        case BiasKind::Pronoun: {
          std::vector<TypingInstance> candidates;
          if (inst.mention.size() == 1 && pronoun_gender(inst.mention.front()))
            candidates = pronoun_concretize(inst, oracles, *options.names, options.seed, options.n_names);
          verdict = classify_bias(inst, bias_kind, oracles, label_space, options.threshold, candidates);
          if (!candidates.empty()) perturbed = std::move(candidates.front());
          break;
        }
        default:
          break;
      }
    } catch (...) {
      auto e = std::current_exception();
      if (!is_oracle_failure(e)) throw;
      ++report.n_oracle_failures;
      verdict = BiasVerdict{};
      verdict.instance_id = inst.id;
      verdict.bias_kind = bias_kind;
      try {
        std::rethrow_exception(e);
      } catch (const Error& err) {
        verdict.reason = std::string("oracle failure: ") + err.what();
      }
      log_warning(std::string(to_string(bias_kind)) + " diagnosis: " + inst.id + " undecided, " +
                  verdict.reason);
      perturbed.reset();
    }

    const std::string split(to_string(verdict.verdict));
    report.rows.push_back(score_row(model, inst, inst.id, split, "original"));
    if (verdict.verdict == Verdict::Undecided) {
      ++report.n_undecided;
    } else {
      const int s = verdict.verdict == Verdict::Biased ? 0 : 1;
      ++(s == 0 ? report.n_biased : report.n_unbiased);
      if (perturbed) {
        const auto& orig = report.rows.back();
        pairs[s][0].push_back(GoldPred{orig.gold, orig.pred});
        report.rows.push_back(score_row(model, *perturbed, inst.id, split, "perturbed"));
        pairs[s][1].push_back(GoldPred{report.rows.back().gold, report.rows.back().pred});
      } else {
        ++report.n_unperturbed;
      }
    }
    if (options.verdicts) options.verdicts->push_back(std::move(verdict));
  }

  for (int s = 0; s < 2; ++s)
    for (int f = 0; f < 2; ++f) report.grid[s][f] = make_cell(pairs[s][f]);
  report.delta_biased = cell_delta(pairs[0][0], pairs[0][1]);
  report.delta_unbiased = cell_delta(pairs[1][0], pairs[1][1]);
  return report;
}

DependencyReport run_dependency_diagnosis(const TypingModel& model,
                                          std::span<const TypingInstance> test_set,
                                          const Oracles& oracles) {
  DependencyReport report;
  std::vector<GoldPred> mention_pairs;
  std::vector<GoldPred> head_pairs;
  for (const auto& inst : test_set) {
    if (inst.mention.size() < 2) continue;
    std::optional<TypingInstance> head;
    try {
      head = headword_truncate(inst, oracles);
    } catch (...) {
      if (!is_oracle_failure(std::current_exception())) throw;
      log_warning("dependency diagnosis: parse failed for " + inst.id);
    }
    if (!head) {
      ++report.n_failed;
      continue;
    }
    ++report.n_total;
    auto orig = score_row(model, inst, inst.id, "", "mention");
    auto trunc = score_row(model, *head, inst.id, "", "headword");
    const bool improved = instance_prf(trunc.gold, trunc.pred).f1 > instance_prf(orig.gold, orig.pred).f1;
    orig.split = trunc.split = improved ? "improved" : "other";
    if (improved) {
      ++report.n_improved;
      mention_pairs.push_back(GoldPred{orig.gold, orig.pred});
      head_pairs.push_back(GoldPred{trunc.gold, trunc.pred});
    }
    report.rows.push_back(std::move(orig));
    report.rows.push_back(std::move(trunc));
  }
  report.mention = make_cell(mention_pairs);
  report.headword = make_cell(head_pairs);
  report.delta = cell_delta(mention_pairs, head_pairs);
  return report;
}

OvergeneralizationReport run_overgeneralization_diagnosis(const TypingModel& model,
                                                          std::span<const TypingInstance> test_set,
                                                          const LabelSpace& label_space,
                                                          std::size_t top_k) {
  OvergeneralizationReport report;
  std::vector<GoldPred> general;
  std::vector<GoldPred> ultra;
  for (const auto& inst : test_set) {
    if (inst.gold.empty()) continue;
    auto all_tier = [&](Tier t) {
      for (const auto& g : inst.gold)
        if (label_space.tier(g) != t) return false;
      return true;
    };
    std::string split;
    if (all_tier(Tier::General)) split = "general";
    else if (all_tier(Tier::UltraFine)) split = "ultra-fine";
    else continue;
    auto row = score_row(model, inst, inst.id, split, "original");
    (split == "general" ? general : ultra).push_back(GoldPred{row.gold, row.pred});
    report.rows.push_back(std::move(row));
  }
  report.general = make_cell(general);
  report.ultra_fine = make_cell(ultra);
  auto probe = predict(model, empty_probe());
  report.empty_input = empty_input_report(probe.scores, top_k);
  for (auto& t : report.empty_input.top_types) t.probability = round6(t.probability);
  for (auto& t : report.empty_input.bottom_types) t.probability = round6(t.probability);
  report.empty_input.uniform_divergence = round6(report.empty_input.uniform_divergence);
  return report;
}

LocationReport perturbation_location_control(const TypingModel& model,
                                             std::span<const TypingInstance> test_set,
                                             const Oracles& oracles, const LabelSpace& label_space) {
  LocationReport report;
  report.rows[0].location = "mention-overlap";
  report.rows[1].location = "mention-other";
  report.rows[2].location = "context";
  std::array<std::vector<GoldPred>, 3> before;
  std::array<std::vector<GoldPred>, 3> after;

  for (const auto& inst : test_set) {
    if (inst.is_empty_probe()) continue;
    const Tokens sentence = inst.sentence();
    const std::size_t lo = inst.left.size();
    const std::size_t hi = lo + inst.mention.size();
    // Candidate sentence positions per row, in reading order.
    std::array<std::vector<std::size_t>, 3> positions;
    for (std::size_t i = lo; i < hi; ++i)
      positions[overlaps_gold(sentence[i], inst.gold, label_space) ? 0 : 1].push_back(i);
    for (std::size_t i = 0; i < sentence.size(); ++i)
      if (i < lo || i >= hi) positions[2].push_back(i);

    std::optional<PredictionRow> original;
    for (std::size_t r = 0; r < 3; ++r) {
      std::optional<TypingInstance> substituted;
      try {
        for (std::size_t pos : positions[r]) {
          auto synonyms = usable_synonyms(sentence, pos, inst.gold, oracles, label_space);
          if (!synonyms || synonyms->empty()) continue;
          Edit edit;
          if (pos < lo) {
            edit = Edit{Region::Left, pos, pos + 1, synonyms->front()};
          } else if (pos < hi) {
            edit = Edit{Region::Mention, pos - lo, pos - lo + 1, synonyms->front()};
          } else {
            edit = Edit{Region::Right, pos - hi, pos - hi + 1, synonyms->front()};
          }
          substituted = apply_edits(inst, std::span<const Edit>(&edit, 1));
          break;
        }
      } catch (...) {
        if (!is_oracle_failure(std::current_exception())) throw;
        ++report.n_oracle_failures;
        log_warning("location control: sense lookup failed for " + inst.id);
        continue;
      }
      if (!substituted) continue;
      if (!original) original = score_row(model, inst, inst.id, "", "original");
      auto changed = score_row(model, *substituted, inst.id, "", "perturbed");
      before[r].push_back(GoldPred{original->gold, original->pred});
      after[r].push_back(GoldPred{changed.gold, changed.pred});
    }
  }
  for (std::size_t r = 0; r < 3; ++r) {
    report.rows[r].before = make_cell(before[r]);
    report.rows[r].after = make_cell(after[r]);
    report.rows[r].delta = cell_delta(before[r], after[r]);
  }
  return report;
}

// ---- serialization ---------------------------------------------------------

namespace {

using nlohmann::json;

json opt_double(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json cell_json(const GridCell& c) {
  json j{{"n", c.n}};
  if (c.prf)
    j["prf"] = {{"precision", c.prf->precision}, {"recall", c.prf->recall}, {"f1", c.prf->f1}};
  else
    j["prf"] = nullptr;
  return j;
}

GridCell cell_from(const json& j) {
  GridCell c;
  c.n = j.at("n").get<std::size_t>();
  if (!j.at("prf").is_null()) {
    PRF p;
    p.precision = j.at("prf").at("precision").get<double>();
    p.recall = j.at("prf").at("recall").get<double>();
    p.f1 = j.at("prf").at("f1").get<double>();
    c.prf = p;
  }
  return c;
}

json rows_json(const std::vector<PredictionRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"id", r.instance_id},
                   {"split", r.split},
                   {"form", r.form},
                   {"gold", r.gold},
                   {"pred", r.pred},
                   {"f1", r.f1}});
  return out;
}

std::vector<PredictionRow> rows_from(const json& j) {
  std::vector<PredictionRow> rows;
  for (const auto& r : j) {
    PredictionRow row;
    row.instance_id = r.at("id").get<std::string>();
    row.split = r.at("split").get<std::string>();
    row.form = r.at("form").get<std::string>();
    row.gold = r.at("gold").get<TypeSet>();
    row.pred = r.at("pred").get<TypeSet>();
    row.f1 = r.at("f1").get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

json scored_json(const std::vector<ScoredType>& v) {
  json out = json::array();
  for (const auto& s : v) out.push_back({{"type", s.type}, {"probability", s.probability}});
  return out;
}

std::vector<ScoredType> scored_from(const json& j) {
  std::vector<ScoredType> out;
  for (const auto& s : j) out.push_back({s.at("type").get<std::string>(), s.at("probability").get<double>()});
  return out;
}

const char* kSplitNames[2] = {"biased", "unbiased"};
const char* kFormNames[2] = {"original", "perturbed"};

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "json") return ReportFormat::Json;
  throw ArgumentError("unknown report format '" + std::string(name) + "' (expected text or json)");
}

json report_to_json(const FullReport& report) {
  json j{{"format", "typebias-diagnosis"}, {"version", kReportSchemaVersion}};
  json bias = json::array();
  for (const auto& b : report.bias) {
    json grid;
    for (int s = 0; s < 2; ++s)
      for (int f = 0; f < 2; ++f) grid[kSplitNames[s]][kFormNames[f]] = cell_json(b.grid[s][f]);
    bias.push_back({{"bias_kind", std::string(to_string(b.bias_kind))},
                    {"direction", b.direction},
                    {"n_biased", b.n_biased},
                    {"n_unbiased", b.n_unbiased},
                    {"n_undecided", b.n_undecided},
                    {"n_unperturbed", b.n_unperturbed},
                    {"n_oracle_failures", b.n_oracle_failures},
                    {"grid", grid},
                    {"delta_biased", opt_double(b.delta_biased)},
                    {"delta_unbiased", opt_double(b.delta_unbiased)},
                    {"rows", rows_json(b.rows)}});
  }
  j["bias"] = bias;
  if (report.dependency) {
    const auto& d = *report.dependency;
    j["dependency"] = {{"n_total", d.n_total},     {"n_improved", d.n_improved},
                       {"n_failed", d.n_failed},   {"mention", cell_json(d.mention)},
                       {"headword", cell_json(d.headword)}, {"delta", opt_double(d.delta)},
                       {"rows", rows_json(d.rows)}};
  } else {
    j["dependency"] = nullptr;
  }
  if (report.overgeneralization) {
    const auto& o = *report.overgeneralization;
    j["overgeneralization"] = {
        {"general", cell_json(o.general)},
        {"ultra_fine", cell_json(o.ultra_fine)},
        {"empty_input",
         {{"top", scored_json(o.empty_input.top_types)},
          {"bottom", scored_json(o.empty_input.bottom_types)},
          {"uniform_divergence", o.empty_input.uniform_divergence}}},
        {"rows", rows_json(o.rows)}};
  } else {
    j["overgeneralization"] = nullptr;
  }
  if (report.location) {
    json rows = json::array();
    for (const auto& r : report.location->rows)
      rows.push_back({{"location", r.location},
                      {"before", cell_json(r.before)},
                      {"after", cell_json(r.after)},
                      {"delta", opt_double(r.delta)}});
    j["location"] = {{"rows", rows}, {"n_oracle_failures", report.location->n_oracle_failures}};
  } else {
    j["location"] = nullptr;
  }
  return j;
}

FullReport report_from_json(const json& j) {
  try {
    if (j.at("format") != "typebias-diagnosis") throw ParseError(1, "not a diagnosis report");
    if (j.at("version").get<int>() != kReportSchemaVersion)
      throw ParseError(1, "unsupported report version " + j.at("version").dump());
    FullReport report;
    for (const auto& b : j.at("bias")) {
      DiagnosisReport d;
      d.bias_kind = bias_kind_from_string(b.at("bias_kind").get<std::string>());
      d.direction = b.at("direction").get<std::string>();
      d.n_biased = b.at("n_biased").get<std::size_t>();
      d.n_unbiased = b.at("n_unbiased").get<std::size_t>();
      d.n_undecided = b.at("n_undecided").get<std::size_t>();
      d.n_unperturbed = b.at("n_unperturbed").get<std::size_t>();
      d.n_oracle_failures = b.at("n_oracle_failures").get<std::size_t>();
      for (int s = 0; s < 2; ++s)
        for (int f = 0; f < 2; ++f) d.grid[s][f] = cell_from(b.at("grid").at(kSplitNames[s]).at(kFormNames[f]));
      d.delta_biased = get_opt_double(b, "delta_biased");
      d.delta_unbiased = get_opt_double(b, "delta_unbiased");
      d.rows = rows_from(b.at("rows"));
      report.bias.push_back(std::move(d));
    }
    if (!j.at("dependency").is_null()) {
      const auto& dj = j.at("dependency");
      DependencyReport d;
      d.n_total = dj.at("n_total").get<std::size_t>();
      d.n_improved = dj.at("n_improved").get<std::size_t>();
      d.n_failed = dj.at("n_failed").get<std::size_t>();
      d.mention = cell_from(dj.at("mention"));
      d.headword = cell_from(dj.at("headword"));
      d.delta = get_opt_double(dj, "delta");
      d.rows = rows_from(dj.at("rows"));
      report.dependency = std::move(d);
    }
    if (!j.at("overgeneralization").is_null()) {
      const auto& oj = j.at("overgeneralization");
      OvergeneralizationReport o;
      o.general = cell_from(oj.at("general"));
      o.ultra_fine = cell_from(oj.at("ultra_fine"));
      o.empty_input.top_types = scored_from(oj.at("empty_input").at("top"));
      o.empty_input.bottom_types = scored_from(oj.at("empty_input").at("bottom"));
      o.empty_input.uniform_divergence = oj.at("empty_input").at("uniform_divergence").get<double>();
      o.rows = rows_from(oj.at("rows"));
      report.overgeneralization = std::move(o);
    }
    if (!j.at("location").is_null()) {
      LocationReport l;
      const auto& rows = j.at("location").at("rows");
      if (rows.size() != 3) throw ParseError(1, "location report needs three rows");
      for (std::size_t r = 0; r < 3; ++r) {
        l.rows[r].location = rows[r].at("location").get<std::string>();
        l.rows[r].before = cell_from(rows[r].at("before"));
        l.rows[r].after = cell_from(rows[r].at("after"));
        l.rows[r].delta = get_opt_double(rows[r], "delta");
      }
      l.n_oracle_failures = j.at("location").at("n_oracle_failures").get<std::size_t>();
      report.location = std::move(l);
    }
    return report;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("malformed diagnosis report: ") + e.what());
  }
}

// ---- text rendering --------------------------------------------------------

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // Arrows are multi-byte; pad by code points.
  std::size_t cols = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++cols;
  if (cols < width) s.append(width - cols, ' ');
  return s;
}

std::string cell_cols(const GridCell& c) {
  std::string out = pad(std::to_string(c.n), 7);
  if (!c.prf) return out + pad("-", 8) + pad("-", 8) + pad("-", 8);
  return out + pad(fmt("%.3f", c.prf->precision), 8) + pad(fmt("%.3f", c.prf->recall), 8) +
         pad(fmt("%.3f", c.prf->f1), 8);
}

std::string delta_col(const std::optional<double>& d) { return d ? fmt("%+.2f%%", *d) : "-"; }

std::string trim_right(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

std::string render_report(const FullReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";
  std::string out = "typebias diagnosis report v" + std::to_string(kReportSchemaVersion) + "\n";
  const std::string head = pad("n", 7) + pad("prec", 8) + pad("rec", 8) + pad("f1", 8) + "delta";
  for (const auto& b : report.bias) {
    out += "\n[" + std::string(to_string(b.bias_kind)) + "] expected " + b.direction +
           "  biased=" + std::to_string(b.n_biased) + " unbiased=" + std::to_string(b.n_unbiased) +
           " undecided=" + std::to_string(b.n_undecided) + "\n";
    out += pad("split", 10) + pad("input", 11) + head + "\n";
    for (int s = 0; s < 2; ++s) {
      const auto delta = s == 0 ? b.delta_biased : b.delta_unbiased;
      for (int f = 0; f < 2; ++f) {
        std::string line = pad(kSplitNames[s], 10) + pad(kFormNames[f], 11) + cell_cols(b.grid[s][f]);
        if (f == 1) line += delta_col(delta);
        out += trim_right(line) + "\n";
      }
    }
  }
  if (report.dependency) {
    const auto& d = *report.dependency;
    out += "\n[dependency] improved=" + std::to_string(d.n_improved) + " total=" + std::to_string(d.n_total) +
           " failed=" + std::to_string(d.n_failed) + "\n";
    out += pad("input", 11) + head + "\n";
    out += trim_right(pad("mention", 11) + cell_cols(d.mention)) + "\n";
    out += trim_right(pad("headword", 11) + cell_cols(d.headword) + delta_col(d.delta)) + "\n";
  }
  if (report.overgeneralization) {
    const auto& o = *report.overgeneralization;
    out += "\n[overgeneralization] general=" + std::to_string(o.general.n) +
           " ultra-fine=" + std::to_string(o.ultra_fine.n) + "\n";
    out += pad("split", 11) + trim_right(head.substr(0, head.size() - 5)) + "\n";
    out += trim_right(pad("general", 11) + cell_cols(o.general)) + "\n";
    out += trim_right(pad("ultra-fine", 11) + cell_cols(o.ultra_fine)) + "\n";
    auto list = [](const std::vector<ScoredType>& v) {
      std::string s;
      for (const auto& t : v) s += (s.empty() ? "" : ", ") + t.type + " (" + fmt("%.3f", t.probability) + ")";
      return s.empty() ? std::string("-") : s;
    };
    out += "empty input top: " + list(o.empty_input.top_types) + "\n";
    out += "empty input bottom: " + list(o.empty_input.bottom_types) + "\n";
    out += "empty input divergence: " + fmt("%.6f", o.empty_input.uniform_divergence) + "\n";
  }
  if (report.location) {
    out += "\n[location]\n";
    out += pad("location", 17) + pad("n", 7) + pad("f1", 8) + pad("f1'", 8) + "delta\n";
    for (const auto& r : report.location->rows) {
      auto f1 = [](const GridCell& c) { return c.prf ? fmt("%.3f", c.prf->f1) : std::string("-"); };
      out += trim_right(pad(r.location, 17) + pad(std::to_string(r.before.n), 7) + pad(f1(r.before), 8) +
                        pad(f1(r.after), 8) + delta_col(r.delta)) +
             "\n";
    }
  }
  return out;
}

std::string render_report(const FullReport& report, std::string_view format) {
  return render_report(report, report_format_from_string(format));
}

}  // namespace typebias
