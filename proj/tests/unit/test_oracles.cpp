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

#include <fstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "support.hpp"
#include "typebias/error.hpp"
#include "typebias/oracles.hpp"

using namespace typebias;
using namespace typebias::testing;
using nlohmann::json;

namespace {

// Counts calls and answers every fill request with "person".
class CountingOracle : public OracleTransport {
 public:
  OracleResponse call(const OracleRequest& request) override {
    ++calls;
    if (fail) return {false, nullptr, "boom"};
    if (request.kind == OracleKind::MaskedFill) return {true, encode_fill({{"person", 0.9}}), {}};
    return OracleResponse::no_answer();
  }
  std::string describe() const override { return "counting"; }
  int calls = 0;
  bool fail = false;
};

}  // namespace

TEST_CASE("request canonical form and hash") {
  OracleRequest a{OracleKind::Wsd, {{"sentence", {"a", "b"}}, {"index", 1}}, std::nullopt};
  OracleRequest b{OracleKind::Wsd, {{"index", 1}, {"sentence", {"a", "b"}}}, std::nullopt};
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  b.k = 3;
  CHECK(a.hash() != b.hash());
  const auto back = OracleRequest::from_json(b.to_json());
  CHECK(back.canonical() == b.canonical());
  CHECK(oracle_kind_from_string("depparse") == OracleKind::DepParse);
  CHECK_THROWS(oracle_kind_from_string("tagger"));
}

TEST_CASE("stub tables: strict, lenient, save and load") {
  auto strict = std::make_shared<StubTable>(StubMode::Strict);
  const auto req = masked_fill_request("He is a <mask> .", 10);
  strict->add(req, {true, encode_fill({{"writer", 0.4}, {"person", 0.6}}), {}});
  CHECK(strict->size() == 1);

  Oracles o;
  o.set(OracleKind::MaskedFill, strict);
  const auto fill = o.masked_fill("He is a <mask> .", 10);
  REQUIRE(fill.size() == 2);
  CHECK(fill[0].token == "person");  // sorted by score
  CHECK_THROWS_AS(o.masked_fill("She is a <mask> .", 10), OracleMiss);
  CHECK_THROWS_AS(o.masked_fill("no mask here", 10), ArgumentError);
  CHECK_THROWS_AS(o.masked_fill("<mask> and <mask>", 10), ArgumentError);

  TempDir dir;
  strict->save(dir / "t.jsonl");
  auto lenient = StubTable::load(dir / "t.jsonl", StubMode::Lenient);
  CHECK(lenient->size() == 1);
  o.set(OracleKind::MaskedFill, lenient);
  CHECK(o.masked_fill("He is a <mask> .", 10).size() == 2);
  CHECK(o.masked_fill("She is a <mask> .", 10).empty());

  std::ofstream(dir / "bad.jsonl") << "{\"request\": 1}\n";
  CHECK_THROWS_AS(StubTable::load(dir / "bad.jsonl"), ParseError);
  CHECK_THROWS_AS(StubTable::load(dir / "absent.jsonl"), IoError);
}

TEST_CASE("typed decoding rejects malformed results") {
  auto t = std::make_shared<StubTable>();
  const Tokens s = {"Ann", "met", "Bo"};
  t->add(ner_request(s), {true, json{{"spans", {{{"start", 0}, {"end", 5}, {"type", "person"}}}}}, {}});
  t->add(coref_request(s, {2, 3}), {true, encode_coref(TokenSpan{0, 1}), {}});
  t->add(depparse_request({"car", "spoilers"}, {}, {}), {true, encode_depparse({{1, 1}, {}}), {}});
  t->add(depparse_request({"a", "b"}, {}, {}), {true, encode_depparse({{1, 0}, {}}), {}});
  t->add(wsd_request(s, 1), {false, nullptr, "down"});
  Oracles o;
  for (auto k : kAllOracleKinds) o.set(k, t);
  CHECK_THROWS_AS(o.ner(s), OracleUnavailable);
  CHECK(o.coref(s, {2, 3}) == TokenSpan{0, 1});
  const auto parse = o.depparse({"car", "spoilers"}, {}, {});
  REQUIRE(parse);
  CHECK(parse->roots() == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(o.depparse({"a", "b"}, {}, {}), OracleUnavailable);  // no root
  CHECK_THROWS_AS(o.wsd(s, 1), OracleUnavailable);
  CHECK_THROWS_AS(o.wsd(s, 9), ArgumentError);
  Oracles none;
  CHECK_THROWS_AS(none.ner(s), OracleUnavailable);
}

TEST_CASE("ner type names") {
  CHECK(to_string(NerType::GeopoliticalArea) == "geopolitical area");
  CHECK(parse_ner_type("work of art") == NerType::WorkOfArt);
  CHECK(parse_ner_type("weapon") == std::nullopt);
}

TEST_CASE("cached transport stores successful responses only") {
  TempDir dir;
  auto inner = std::make_shared<CountingOracle>();
  CachedTransport cache(inner, dir / "cache");
  const auto req = masked_fill_request("A <mask> .", 5);
  CHECK(cache.call(req).ok);
  CHECK(cache.call(req).ok);
  CHECK(inner->calls == 1);
  CHECK(cache.hits() == 1);

  // a second cache over the same directory sees the entry
  CachedTransport again(inner, dir / "cache");
  CHECK(again.call(req).result == encode_fill({{"person", 0.9}}));
  CHECK(inner->calls == 1);

  inner->fail = true;
  const auto other = masked_fill_request("B <mask> .", 5);
  CHECK_FALSE(cache.call(other).ok);
  CHECK_FALSE(cache.call(other).ok);
  CHECK(inner->calls == 3);
}

TEST_CASE("recording transport captures a replayable table") {
  auto inner = std::make_shared<CountingOracle>();
  auto rec = std::make_shared<RecordingTransport>(inner);
  Oracles o;
  o.set(OracleKind::MaskedFill, rec);
  o.masked_fill("X is a <mask> .", 3);
  o.masked_fill("Y is a <mask> .", 3);
  CHECK(rec->table().size() == 2);

  TempDir dir;
  rec->table().save(dir / "r.jsonl");
  Oracles replay;
  replay.set(OracleKind::MaskedFill, StubTable::load(dir / "r.jsonl"));
  CHECK(replay.masked_fill("Y is a <mask> .", 3).front().token == "person");
}

TEST_CASE("process transport speaks line-delimited json") {
  TempDir dir;
  const auto script = dir / "oracle.sh";
  std::ofstream(script) << "while read line; do\n"
                           "  echo '{\"ok\":true,\"result\":{\"spans\":[{\"start\":0,\"end\":1,\"type\":\"person\"}]}}'\n"
                           "done\n";
  Oracles o;
  o.set(OracleKind::Ner, make_transport("process:sh " + script.string()));
  for (int i = 0; i < 3; ++i) {
    const auto spans = o.ner({"Ann", "sleeps"});
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == NerSpan{0, 1, NerType::Person});
  }

  ProcessTransport dead("exit 0");
  CHECK_THROWS_AS(dead.call(ner_request({"a"})), OracleUnavailable);
  ProcessTransport garbage("read line; echo not-json");
  CHECK_THROWS_AS(garbage.call(ner_request({"a"})), OracleUnavailable);
}

TEST_CASE("http transport posts json") {
  httplib::Server server;
  server.Post("/oracle", [](const httplib::Request& req, httplib::Response& res) {
    const auto r = OracleRequest::from_json(json::parse(req.body));
    const OracleResponse out{true, encode_wsd({"s" + std::to_string(r.payload.at("index").get<int>()), {"alt"}}), {}};
    res.set_content(out.to_json().dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  Oracles o;
  o.set(OracleKind::Wsd, make_transport("http://127.0.0.1:" + std::to_string(port)));
  const auto a = o.wsd({"the", "bank"}, 1);
  REQUIRE(a);
  CHECK(a->sense == "s1");
  CHECK(a->synonyms == std::vector<std::string>{"alt"});

  o.set(OracleKind::Wsd, make_transport("http:127.0.0.1:" + std::to_string(port) + "/broken"));
  CHECK_THROWS_AS(o.wsd({"the", "bank"}, 1), OracleUnavailable);

  server.stop();
  th.join();
}

TEST_CASE("make_transport rejects bad specs") {
  CHECK_THROWS_AS(make_transport("nocolon"), ArgumentError);
  CHECK_THROWS_AS(make_transport("ftp:somewhere"), ArgumentError);
  CHECK_THROWS_AS(make_transport("http:localhost"), ArgumentError);
  CHECK_THROWS_AS(make_transport("http:localhost:port"), ArgumentError);
  CHECK(make_transport("stub:" + (worked_dir() / "stub.ner.jsonl").string())->describe().find("stub") !=
        std::string::npos);
}
