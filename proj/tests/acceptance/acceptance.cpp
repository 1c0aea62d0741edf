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


// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "typebias/cli.hpp"
#include "typebias/diagnose.hpp"
#include "typebias/metrics.hpp"
#include "typebias/prompting.hpp"
#include "typebias/synthetic.hpp"

namespace fs = std::filesystem;
using namespace typebias;
using namespace typebias::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::vector<std::string> notes;
  void check(bool cond, const std::string& note) {
    if (!cond) ok = false;
    notes.push_back((cond ? "" : "!") + note);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double macro_f1(const TypingModel& model, std::span<const TypingInstance> xs) {
  return evaluate_model(model, xs).f1;
}

// ---- 1, 2: metrics ---------------------------------------------------------

Outcome metric_oracle() {
  struct Row {
    const char* id;
    TypeSet gold, pred;
    double expected;
  };
  const TypeSet t3 = {"day", "time", "event", "date", "year"};
  const TypeSet t5 = {"politician", "leader", "person"};
  const TypeSet t7 = {"woman", "performer", "adult", "female", "entertainer", "person", "actress"};
  const TypeSet t9 = {"subject", "topic"};
  const std::vector<Row> rows = {
      {"T1", {"injury", "shooting", "event", "violence"}, {"event", "object", "fire"}, 0.285},
      {"T3", t3, {"day", "time", "date"}, 0.749},
      {"T5", t5, {"politician", "leader", "person"}, 1.0},
      {"T6", t5, {"person", "scholar", "writer"}, 0.333},
      {"T7", t7, {"woman", "female", "actress", "person", "artist"}, 0.666},
      {"T8", t7, {"person"}, 0.25},
      {"T10", t9, {"object", "concept", "subject"}, 0.4},
      {"T12",
       {"behavior", "wrongdoing", "difficulty", "misconduct", "trouble", "use", "activity", "problem",
        "concept", "abuse"},
       {"behavior", "event"},
       0.166},
  };
  Outcome o;
  for (const auto& r : rows) {
    const double f1 = instance_prf(r.gold, r.pred).f1;
    o.check(std::abs(truncate3(f1) - r.expected) < 1e-9, std::string(r.id) + "=" + fmt("%.3f", truncate3(f1)));
  }
  return o;
}

Outcome harmonic_rule() {
  struct Row {
    double p, r, f;
  };
  Outcome o;
  for (const auto& row : {Row{0.602, 0.283, 0.385}, Row{0.668, 0.640, 0.654}}) {
    const double f = harmonic_f1(row.p, row.r);
    o.check(std::abs(f - row.f) <= 0.001, fmt("%.3f", row.p) + "/" + fmt("%.3f", row.r) + "->" + fmt("%.4f", f));
  }
  // macro_prf reduces to the same rule on per-instance averages.
  const std::vector<GoldPred> pairs = {{{"a", "b"}, {"a"}}, {{"a", "b", "c"}, {"a", "d"}}};
  const PRF m = macro_prf(pairs);
  o.check(std::abs(m.f1 - harmonic_f1(0.75, 5.0 / 12.0)) < 1e-12, "macro " + fmt("%.4f", m.f1));
  return o;
}

// ---- 3, 4: prompts and augmentation ------------------------------------------

const char* kS3 =
    "Next twenty-four hour period , after the Slovaks captured Rymanow Zdroj and the Germans seized "
    "Krosno , the Brigade was ordered to withdraw to Sanok and leave Dukla . Next twenty-four hour "
    "period is a type of <mask>.";
const char* kS6 =
    "Judith other film credits include `` The Four Feathers , '' `` Dr. T & amp ; the Women '' and "
    "`` 200 Cigarettes . '' Judith is a type of <mask>.";

TypingInstance substituted(const TypingInstance& x, const std::string& mention) {
  auto y = x;
  y.mention = split_tokens(mention);
  return y;
}

Outcome prompt_fidelity(const WorkedFixture& f) {
  const auto& t3 = f.by_id("T3");
  const auto& t5 = f.by_id("T5");
  const auto& t7 = f.by_id("T7");
  const auto& jintara = f.by_id("jintara");
  const auto t4 = substituted(t3, "Next twenty-four hour period");
  const auto t8 = substituted(t7, "Judith");
  const std::vector<std::pair<std::string, std::string>> cases = {
      {build_prompt(f.by_id("T1"), BiasKind::MentionContext), "fire is a type of <mask>."},
      {build_prompt(f.by_id("S2"), BiasKind::MentionContext), "the war is a type of <mask>."},
      {build_prompt(t3, BiasKind::LexicalOverlapping, &t4), kS3},
      {build_prompt(t5, BiasKind::NamedEntity, nullptr, NerSpan{0, 2, NerType::Person}),
       "The person Benjamin Netanyahu is a type of <mask>."},
      {build_prompt(jintara, BiasKind::NamedEntity, nullptr, NerSpan{0, 2, NerType::Person}),
       "The person Jintara Poonlarp is a type of <mask>."},
      {build_prompt(t7, BiasKind::Pronoun, &t8), kS6},
  };
  Outcome o;
  for (std::size_t i = 0; i < cases.size(); ++i)
    o.check(cases[i].first == cases[i].second, "S" + std::to_string(i + 1));
  return o;
}

Outcome augmentation_examples(const WorkedFixture& f) {
  AugmentConfig config;
  config.seed = f.seed;
  const auto result = build_counterfactual_set(f.instances, f.oracles, f.labels, f.names, config);
  const std::map<std::string, std::string> expected = {
      {"T4",
       "Next twenty-four hour period , after the Slovaks captured Rymanow Zdroj and the Germans seized "
       "Krosno , the Brigade was ordered to withdraw to Sanok and leave Dukla ."},
      {"T6", "Jintara Poonlarp asserted that Amin al-Husseini had been one of the masterminds of the Holocaust ."},
      {"T8",
       "Judith other film credits include `` The Four Feathers , '' `` Dr. T & amp ; the Women '' and `` "
       "200 Cigarettes . ''"},
      {"T10",
       "Dubois contributed an article on anatomy to a book by the Dutch zoologist , Max Weber , and , "
       "inspired by the fresh discovery of new Neanderthal fossils at the Belgian town of Spy , he spent "
       "his vacation fossil hunting in the vicinity of his birthplace ."},
  };
  Outcome o;
  o.check(result.stats.oracle_failures == 0, std::to_string(result.instances.size()) + " instances");
  for (const auto& [name, text] : expected) {
    const Tokens want = split_tokens(text);
    bool found = false;
    for (const auto& x : result.instances) found = found || x.sentence() == want;
    o.check(found, name);
  }
  return o;
}

// ---- 5, 6: training internals ------------------------------------------------

Outcome from_lines(const std::vector<CheckLine>& lines) {
  Outcome o;
  for (const auto& l : lines) o.check(l.ok, l.name + " (" + l.detail + ")");
  return o;
}

// ---- 7, 9, 10: planted shortcut --------------------------------------------------

constexpr std::uint64_t kSeed = 1;

struct Shortcut {
  ShortcutDataset data;
  ReferenceModel baseline;
  std::vector<TypingInstance> augmented;
};

Outcome planted_shortcut(const Shortcut& s, double elapsed_before) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& d = s.data;
  Outcome o;
  const double base_b = macro_f1(s.baseline, d.biased_test);
  const double base_d = macro_f1(s.baseline, d.debiased_test);
  o.check(base_b >= 0.9, "baseline biased " + fmt("%.3f", base_b));
  o.check(base_d <= 0.5, "baseline debiased " + fmt("%.3f", base_d));

  auto train = [&](DebiasMethod method) {
    DebiasConfig c;
    c.method = method;
    c.bias_kind = BiasKind::MentionContext;
    DebiasInputs in{d.train, s.augmented, &d.labels, {}};
    return train_debiased(in, c, kSeed);
  };
  {
    const auto m = train(DebiasMethod::Augmentation);
    const double b = macro_f1(m, d.biased_test), a = macro_f1(m, d.debiased_test);
    o.check(a - base_d >= 0.2, "augmentation debiased " + fmt("%+.3f", a - base_d));
    o.check(base_b - b <= 0.05, "augmentation biased " + fmt("%+.3f", b - base_b));
  }
  for (auto method : {DebiasMethod::Aflite, DebiasMethod::Poe, DebiasMethod::Focal}) {
    const double a = macro_f1(train(method), d.debiased_test);
    o.check(a - base_d >= 0.05, std::string(to_string(method)) + " debiased " + fmt("%+.3f", a - base_d));
  }
  const double secs =
      elapsed_before + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs <= 300.0, "runtime " + fmt("%.1f", secs) + "s");
  return o;
}

Outcome shape_checks(const Shortcut& s) {
  const auto& d = s.data;
  const auto oracles = synthetic_oracles(d.world);
  DiagnosisOptions options;
  options.seed = kSeed;
  options.names = &d.world.names;
  Outcome o;
  const auto mc = run_bias_diagnosis(s.baseline, d.biased_test, BiasKind::MentionContext, oracles, d.labels, options);
  o.check(mc.delta_biased && *mc.delta_biased >= -1.0, "mention-context " + fmt("%+.2f%%", mc.delta_biased.value_or(NAN)));
  const auto lex =
      run_bias_diagnosis(s.baseline, d.biased_test, BiasKind::LexicalOverlapping, oracles, d.labels, options);
  o.check(lex.delta_biased && *lex.delta_biased <= -30.0, "lexical " + fmt("%+.2f%%", lex.delta_biased.value_or(NAN)));

  const auto dep = run_dependency_diagnosis(s.baseline, d.biased_test, oracles);
  const double before = dep.mention.prf ? dep.mention.prf->f1 : 0.0;
  const double after = dep.headword.prf ? dep.headword.prf->f1 : 0.0;
  o.check(dep.n_improved > 0 && after > before,
          "dependency improved " + std::to_string(dep.n_improved) + "/" + std::to_string(dep.n_total) + " f1 " +
              fmt("%.3f", before) + "->" + fmt("%.3f", after));

  const auto loc = perturbation_location_control(s.baseline, d.biased_test, oracles, d.labels);
  auto mag = [](const LocationRow& r) { return r.delta ? std::abs(*r.delta) : 0.0; };
  const bool have = loc.rows[0].delta.has_value();
  o.check(have && mag(loc.rows[0]) > mag(loc.rows[1]) && mag(loc.rows[0]) > mag(loc.rows[2]),
          "location " + fmt("%+.2f", loc.rows[0].delta.value_or(NAN)) + " / " +
              fmt("%+.2f", loc.rows[1].delta.value_or(NAN)) + " / " + fmt("%+.2f", loc.rows[2].delta.value_or(NAN)));
  return o;
}

Outcome empty_probe(const Shortcut& s) {
  const auto& d = s.data;
  std::map<std::string, std::size_t> freq;
  for (const auto& x : d.train)
    for (const auto& t : x.gold) ++freq[t];
  std::string dominant;
  std::size_t best = 0;
  for (const auto& [t, n] : freq)
    if (n > best) best = n, dominant = t;

  Outcome o;
  const auto report = run_overgeneralization_diagnosis(s.baseline, d.biased_test, d.labels).empty_input;
  const std::string top = report.top_types.empty() ? "-" : report.top_types.front().type;
  o.check(top == dominant, "top " + top + ", most frequent " + dominant);
  o.check(report.uniform_divergence > 0.0, "divergence " + fmt("%.4f", report.uniform_divergence));

  ReferenceModel uniform(d.labels, ModelConfig{}, kSeed);
  std::fill(uniform.params().weights.begin(), uniform.params().weights.end(), 0.0);
  std::fill(uniform.params().bias.begin(), uniform.params().bias.end(), 0.0);
  std::fill(uniform.params().null_bias.begin(), uniform.params().null_bias.end(), 0.0);
  const auto flat = run_overgeneralization_diagnosis(uniform, d.biased_test, d.labels).empty_input;
  o.check(std::abs(flat.uniform_divergence) <= 1e-9, "uniform head " + fmt("%.1e", flat.uniform_divergence));
  return o;
}

// ---- 8: golden diagnosis ------------------------------------------------------

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err, [](const std::string&) { return std::nullopt; });
  if (rc != 0) std::cerr << err.str();
  if (out_text) *out_text = out.str();
  return rc;
}

Outcome golden_diagnosis() {
  Outcome o;
  TempDir tmp("accept");
  const fs::path cwd = fs::current_path();
  fs::current_path(source_dir());
  const std::string conf = "data/worked/diagnose.conf";
  const std::string model = (tmp / "train" / "model.json").string();
  int rc = cli({"train", "--config", conf, "--out", (tmp / "train").string()});
  for (const char* run : {"d1", "d2"})
    rc |= cli({"diagnose", "--config", conf, "--checkpoint", model, "--out", (tmp / run).string()});
  fs::current_path(cwd);
  o.check(rc == 0, "exit status " + std::to_string(rc));
  if (rc != 0) return o;

  const fs::path golden = source_dir() / "tests" / "golden";
  for (const char* name : {"report.json", "report.txt"}) {
    const auto a = read_file(tmp / "d1" / name), b = read_file(tmp / "d2" / name);
    o.check(a == b, std::string(name) + " repeatable");
    o.check(a == read_file(golden / name), std::string(name) + " matches golden");
  }
  return o;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](std::string title, Outcome o) {
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << results.size() + 1 << ": " << title << " ["
              << notes << "]" << std::endl;
    results.emplace_back(std::move(title), std::move(o));
  };

  try {
    const auto fixture = load_worked_fixture();
    record("per-instance F1 on worked examples", metric_oracle());
    record("harmonic F1 of macro averages", harmonic_rule());
    record("cloze prompts byte-identical", prompt_fidelity(fixture));
    record("counterfactual examples from replay oracles", augmentation_examples(fixture));
    record("degenerate settings reduce to baseline", from_lines(degenerate_suite()));
    record("analytic vs finite-difference gradients", from_lines(gradient_suite()));

    const auto t0 = std::chrono::steady_clock::now();
    ShortcutConfig sc;
    sc.seed = kSeed;
    auto data = make_shortcut_dataset(sc);
    auto baseline = train_reference(data.train, data.labels, ModelConfig{}, kSeed);
    AugmentConfig ac;
    ac.seed = kSeed;
    auto augmented =
        build_counterfactual_set(data.train, synthetic_oracles(data.world), data.labels, data.world.names, ac)
            .instances;
    const Shortcut shortcut{std::move(data), std::move(baseline), std::move(augmented)};
    const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    record("planted-shortcut mitigation", planted_shortcut(shortcut, setup));
    record("diagnosis report matches golden", golden_diagnosis());
    record("diagnosis shape on planted shortcut", shape_checks(shortcut));
    record("empty-input probe", empty_probe(shortcut));
  } catch (const std::exception& e) {
    std::cout << "FAIL criterion " << results.size() + 1 << ": aborted [" << e.what() << "]" << std::endl;
    return 1;
  }
  bool all = true;
  for (const auto& r : results) all = all && r.second.ok;
  return all && results.size() == 10 ? 0 : 1;
}
