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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "typebias/corpus.hpp"

// Clients for the external NLP capabilities used by diagnosis and
// augmentation: masked fill-in, word-sense disambiguation, NER, coreference
// and dependency parsing. All five speak one JSON request/response protocol
// so any transport can host any of them.
namespace typebias {

enum class OracleKind { MaskedFill, Wsd, Ner, Coref, DepParse };

inline constexpr std::array<OracleKind, 5> kAllOracleKinds = {
    OracleKind::MaskedFill, OracleKind::Wsd, OracleKind::Ner, OracleKind::Coref,
    OracleKind::DepParse};

std::string_view to_string(OracleKind kind);
OracleKind oracle_kind_from_string(std::string_view name);

struct OracleRequest {
  OracleKind kind = OracleKind::MaskedFill;
  nlohmann::json payload = nlohmann::json::object();
  std::optional<int> k;

  nlohmann::json to_json() const;
  static OracleRequest from_json(const nlohmann::json& j);
  // Key-sorted compact dump; equal requests give equal strings.
  std::string canonical() const;
  std::string hash() const;
};

// ok && result.is_null() is a typed "no answer".
struct OracleResponse {
  bool ok = true;
  nlohmann::json result;
  std::string error;

  nlohmann::json to_json() const;
  static OracleResponse from_json(const nlohmann::json& j);
  static OracleResponse no_answer() { return {true, nullptr, {}}; }
};

class OracleTransport {
 public:
  virtual ~OracleTransport() = default;
  // Throws OracleUnavailable on transport failure.
  virtual OracleResponse call(const OracleRequest& request) = 0;
  virtual std::string describe() const = 0;
};

enum class StubMode { Strict, Lenient };

// Recorded replay table: JSON Lines of {"request-hash", "request", "response"}.
// Strict tables throw OracleMiss for unknown requests; lenient ones answer
// with no-answer.
class StubTable : public OracleTransport {
 public:
  explicit StubTable(StubMode mode = StubMode::Strict) : mode_(mode) {}
  static std::shared_ptr<StubTable> load(const std::filesystem::path& path,
                                         StubMode mode = StubMode::Strict);

  void add(const OracleRequest& request, const OracleResponse& response);
  void merge(const StubTable& other);
  void save(const std::filesystem::path& path) const;
  std::size_t size() const;

  OracleResponse call(const OracleRequest& request) override;
  std::string describe() const override;

 private:
  struct Entry {
    nlohmann::json request;
    OracleResponse response;
  };
  StubMode mode_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

// Line-delimited JSON over the stdin/stdout of a child process
// (`/bin/sh -c command`). Calls are serialized.
class ProcessTransport : public OracleTransport {
 public:
  explicit ProcessTransport(std::string command);
  ~ProcessTransport() override;
  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  OracleResponse call(const OracleRequest& request) override;
  std::string describe() const override { return "process:" + command_; }

 private:
  void start();
  void stop();
  std::string command_;
  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

// JSON POST to http://host:port/path. Calls are serialized.
class HttpTransport : public OracleTransport {
 public:
  HttpTransport(std::string host, int port, std::string path = "/oracle");
  OracleResponse call(const OracleRequest& request) override;
  std::string describe() const override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  std::mutex mutex_;
};

// On-disk response cache keyed by request hash, one file per request,
// written with write-then-rename. Failed responses are never cached.
class CachedTransport : public OracleTransport {
 public:
  CachedTransport(std::shared_ptr<OracleTransport> inner, std::filesystem::path dir);
  OracleResponse call(const OracleRequest& request) override;
  std::string describe() const override;
  std::size_t hits() const { return hits_; }

 private:
  std::shared_ptr<OracleTransport> inner_;
  std::filesystem::path dir_;
  std::size_t hits_ = 0;
};

// Records every exchange with the wrapped transport into a StubTable.
class RecordingTransport : public OracleTransport {
 public:
  explicit RecordingTransport(std::shared_ptr<OracleTransport> inner)
      : inner_(std::move(inner)), table_(std::make_shared<StubTable>()) {}
  OracleResponse call(const OracleRequest& request) override;
  std::string describe() const override { return "record:" + inner_->describe(); }
  const StubTable& table() const { return *table_; }

 private:
  std::shared_ptr<OracleTransport> inner_;
  std::shared_ptr<StubTable> table_;
};

// "stub:PATH", "stub-lenient:PATH", "synthetic:WORLD_JSON", "process:COMMAND",
// "http:HOST:PORT[/PATH]" or "http://HOST:PORT[/PATH]". Other schemes throw
// ArgumentError.
std::shared_ptr<OracleTransport> make_transport(std::string_view spec,
                                                StubMode stub_mode = StubMode::Strict);

// ---- typed results ---------------------------------------------------------

inline constexpr std::string_view kMask = "<mask>";

struct FillCandidate {
  std::string token;
  double score = 0.0;
  friend bool operator==(const FillCandidate&, const FillCandidate&) = default;
};

// Ranked, scores non-increasing.
using MaskedFillResult = std::vector<FillCandidate>;

enum class NerType {
  Person,
  GeopoliticalArea,
  Location,
  Organization,
  Group,
  Date,
  Facility,
  WorkOfArt,
  OrdinalNumber,
  Event,
  Product,
  Time,
};

inline constexpr std::size_t kNerTypeCount = 12;

// Lowercase attribute name, e.g. "geopolitical area".
std::string_view to_string(NerType type);
std::optional<NerType> parse_ner_type(std::string_view name);

struct NerSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  NerType type = NerType::Person;
  friend bool operator==(const NerSpan&, const NerSpan&) = default;
};

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct WsdAnswer {
  std::string sense;
  std::vector<std::string> synonyms;
};

struct DependencyParse {
  // heads[i] is the in-mention index of token i's head; a root points to itself.
  std::vector<std::size_t> heads;
  // Optional coarse part-of-speech tags ("NOUN", "ADJ", ...), one per token.
  std::vector<std::string> pos;

  std::vector<std::size_t> roots() const;
};

class Oracles {
 public:
  Oracles() = default;
  void set(OracleKind kind, std::shared_ptr<OracleTransport> transport);
  bool has(OracleKind kind) const;
  std::shared_ptr<OracleTransport> transport(OracleKind kind) const;

  // The prompt must contain exactly one mask placeholder.
  MaskedFillResult masked_fill(const std::string& prompt, std::size_t k) const;
  std::optional<WsdAnswer> wsd(const Tokens& sentence, std::size_t index) const;
  std::vector<NerSpan> ner(const Tokens& sentence) const;
  std::optional<TokenSpan> coref(const Tokens& sentence, TokenSpan mention) const;
  std::optional<DependencyParse> depparse(const Tokens& mention, const Tokens& left,
                                          const Tokens& right) const;

 private:
  OracleResponse call(const OracleRequest& request) const;
  std::map<OracleKind, std::shared_ptr<OracleTransport>> transports_;
};

// Request builders shared with servers and fixture generators.
OracleRequest masked_fill_request(const std::string& prompt, std::size_t k);
OracleRequest wsd_request(const Tokens& sentence, std::size_t index);
OracleRequest ner_request(const Tokens& sentence);
OracleRequest coref_request(const Tokens& sentence, TokenSpan mention);
OracleRequest depparse_request(const Tokens& mention, const Tokens& left, const Tokens& right);

// Result encoders, the inverse of what Oracles decodes.
nlohmann::json encode_fill(const MaskedFillResult& fill);
nlohmann::json encode_wsd(const WsdAnswer& answer);
nlohmann::json encode_ner(const std::vector<NerSpan>& spans);
nlohmann::json encode_coref(const std::optional<TokenSpan>& antecedent);
nlohmann::json encode_depparse(const DependencyParse& parse);

}  // namespace typebias
