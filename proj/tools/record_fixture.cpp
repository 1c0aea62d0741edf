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


// Records the replay tables under data/worked from the hand-written answers
// in answers.json. Prompts without a listed answer get an empty fill; words
// without a listed sense get no answer; the parse default is a head-final
// mention. Coreference links a pronoun mention to the nearest person entity
// before it.
//
//   typebias_record_fixture <data/worked> <data/names> [seed]

#include <iostream>
#include <map>
#include <set>

#include "json.hpp"
#include "typebias/augment.hpp"
#include "typebias/error.hpp"
#include "typebias/corpus.hpp"
#include "typebias/diagnose.hpp"
#include "typebias/oracles.hpp"
#include "typebias/typers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace typebias;

namespace {

struct Entity {
  Tokens tokens;
  NerType type;
};

class FixtureOracle : public OracleTransport {
 public:
  explicit FixtureOracle(const json& answers) : answers_(answers) {
    for (const auto& e : answers.at("entities")) {
      auto type = parse_ner_type(e.at("type").get<std::string>());
      if (!type) throw ArgumentError("bad entity type " + e.at("type").dump());
      entities_.push_back({e.at("tokens").get<Tokens>(), *type});
    }
  }

  OracleResponse call(const OracleRequest& request) override {
    const auto& p = request.payload;
    switch (request.kind) {
      case OracleKind::MaskedFill: {
        MaskedFillResult fill;
        const auto& fills = answers_.at("fills");
        if (auto it = fills.find(p.at("prompt").get<std::string>()); it != fills.end())
          for (const auto& f : *it) fill.push_back({f[0].get<std::string>(), f[1].get<double>()});
        return {true, encode_fill(fill), {}};
      }
      case OracleKind::Wsd: {
        const auto tokens = p.at("tokens").get<Tokens>();
        const auto word = lowercase(tokens.at(p.at("index").get<std::size_t>()));
        const auto& senses = answers_.at("senses");
        auto it = senses.find(word);
        if (it == senses.end()) return OracleResponse::no_answer();
        return {true, encode_wsd({it->at("sense").get<std::string>(), it->at("synonyms").get<Tokens>()}), {}};
      }
      case OracleKind::Ner:
        return {true, encode_ner(find_entities(p.at("tokens").get<Tokens>())), {}};
      case OracleKind::Coref: {
        const auto tokens = p.at("tokens").get<Tokens>();
        const auto start = p.at("mention")[0].get<std::size_t>();
        std::optional<TokenSpan> antecedent;
        for (const auto& s : find_entities(tokens))
          if (s.type == NerType::Person && s.end <= start) antecedent = TokenSpan{s.start, s.end};
        return {true, encode_coref(antecedent), {}};
      }
      case OracleKind::DepParse: {
        const auto mention = p.at("mention").get<Tokens>();
        const auto& parses = answers_.at("parses");
        DependencyParse parse;
        if (auto it = parses.find(join_tokens(mention)); it != parses.end()) {
          parse.heads = it->at("heads").get<std::vector<std::size_t>>();
          parse.pos = it->at("pos").get<std::vector<std::string>>();
        } else {
          parse.heads.assign(mention.size(), mention.size() - 1);
        }
        return {true, encode_depparse(parse), {}};
      }
    }
    return {false, nullptr, "unsupported"};
  }

  std::string describe() const override { return "fixture"; }

 private:
  std::vector<NerSpan> find_entities(const Tokens& tokens) const {
    std::vector<NerSpan> spans;
    for (std::size_t i = 0; i < tokens.size();) {
      bool hit = false;
      for (const auto& e : entities_) {
        const std::size_t n = e.tokens.size();
        if (i + n <= tokens.size() && std::equal(e.tokens.begin(), e.tokens.end(), tokens.begin() + i)) {
          spans.push_back({i, i + n, e.type});
          i += n;
          hit = true;
          break;
        }
      }
      if (!hit) ++i;
    }
    return spans;
  }

  json answers_;
  std::vector<Entity> entities_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: typebias_record_fixture <fixture dir> <names dir> [seed]\n";
    return 2;
  }
  try {
    const fs::path dir = argv[1];
    const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 0;
    const LabelSpace labels = LabelSpace::load(dir / "labels.txt", dir / "tiers.tsv");
    const auto data = load_dataset(dir / "instances.jsonl", &labels);
    const NameLists names = NameLists::load(argv[2]);
    auto oracle = std::make_shared<FixtureOracle>(json::parse(read_file(dir / "answers.json")));

    Oracles oracles;
    std::map<OracleKind, std::shared_ptr<RecordingTransport>> recorders;
    for (OracleKind k : {OracleKind::MaskedFill, OracleKind::Wsd, OracleKind::Ner, OracleKind::Coref,
                         OracleKind::DepParse}) {
      recorders[k] = std::make_shared<RecordingTransport>(oracle);
      oracles.set(k, recorders[k]);
    }

    AugmentConfig ac;
    ac.seed = seed;
    build_counterfactual_set(data, oracles, labels, names, ac);

    // The diagnoses query the same oracles whatever the model, so an
    // untrained one is enough to drive them.
    ReferenceModel model(labels, ModelConfig{}, seed);
    DiagnosisOptions options;
    options.seed = seed;
    options.names = &names;
    for (BiasKind k : {BiasKind::MentionContext, BiasKind::LexicalOverlapping, BiasKind::NamedEntity,
                       BiasKind::Pronoun})
      run_bias_diagnosis(model, data, k, oracles, labels, options);
    run_dependency_diagnosis(model, data, oracles);
    perturbation_location_control(model, data, oracles, labels);

    for (const auto& [k, rec] : recorders) {
      const fs::path out = dir / ("stub." + std::string(to_string(k)) + ".jsonl");
      rec->table().save(out);
      std::cout << out.string() << ": " << rec->table().size() << " entries\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
