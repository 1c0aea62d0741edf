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

#include "typebias/oracles.hpp"
#include "typebias/synthetic.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "httplib.h"
#include "typebias/error.hpp"
#include "typebias/hash.hpp"

namespace typebias {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::MaskedFill: return "masked_fill";
    case OracleKind::Wsd: return "wsd";
    case OracleKind::Ner: return "ner";
    case OracleKind::Coref: return "coref";
    case OracleKind::DepParse: return "depparse";
  }
  return "?";
}

OracleKind oracle_kind_from_string(std::string_view name) {
  for (OracleKind k : kAllOracleKinds) {
    if (to_string(k) == name) return k;
  }
  if (name == "masked-fill") return OracleKind::MaskedFill;
  throw ArgumentError("unknown oracle kind '" + std::string(name) + "'");
}

json OracleRequest::to_json() const {
  json j = {{"kind", std::string(to_string(kind))}, {"payload", payload}};
  if (k) j["k"] = *k;
  return j;
}

OracleRequest OracleRequest::from_json(const json& j) {
  OracleRequest r;
  r.kind = oracle_kind_from_string(j.at("kind").get<std::string>());
  r.payload = j.value("payload", json::object());
  if (auto it = j.find("k"); it != j.end() && !it->is_null()) r.k = it->get<int>();
  return r;
}

std::string OracleRequest::canonical() const { return to_json().dump(); }

std::string OracleRequest::hash() const { return hex64(fnv1a64(canonical())); }

json OracleResponse::to_json() const {
  json j = {{"ok", ok}, {"result", result}};
  if (!error.empty()) j["error"] = error;
  return j;
}

OracleResponse OracleResponse::from_json(const json& j) {
  OracleResponse r;
  r.ok = j.at("ok").get<bool>();
  r.result = j.value("result", json());
  if (auto it = j.find("error"); it != j.end() && it->is_string()) r.error = it->get<std::string>();
  return r;
}

// ---- stub table ------------------------------------------------------------

std::shared_ptr<StubTable> StubTable::load(const fs::path& path, StubMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stub table " + path.string());
  auto table = std::make_shared<StubTable>(mode);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json row = json::parse(line);
      OracleRequest request = OracleRequest::from_json(row.at("request"));
      const std::string recorded = row.value("request-hash", request.hash());
      if (recorded != request.hash()) {
        throw ParseError(n, "request-hash does not match request in " + path.string());
      }
      table->add(request, OracleResponse::from_json(row.at("response")));
    } catch (const json::exception& e) {
      throw ParseError(n, std::string("bad stub row: ") + e.what());
    }
  }
  return table;
}

void StubTable::add(const OracleRequest& request, const OracleResponse& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[request.hash()] = Entry{request.to_json(), response};
}

void StubTable::merge(const StubTable& other) {
  std::scoped_lock lock(mutex_, other.mutex_);
  for (const auto& [hash, entry] : other.entries_) entries_[hash] = entry;
}

void StubTable::save(const fs::path& path) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::string body;
  for (const auto& [hash, entry] : entries_) {
    json row = {{"request-hash", hash}, {"request", entry.request}, {"response", entry.response.to_json()}};
    body += row.dump() + "\n";
  }
  atomic_write(path, body);
}

std::size_t StubTable::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

OracleResponse StubTable::call(const OracleRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string key = request.hash();
  auto it = entries_.find(key);
  if (it != entries_.end() && it->second.request == request.to_json()) return it->second.response;
  if (mode_ == StubMode::Lenient) return OracleResponse::no_answer();
  throw OracleMiss("stub table has no answer for " + request.canonical());
}

std::string StubTable::describe() const {
  return std::string("stub(") + (mode_ == StubMode::Strict ? "strict" : "lenient") + ")";
}

// ---- subprocess ------------------------------------------------------------

ProcessTransport::ProcessTransport(std::string command) : command_(std::move(command)) { start(); }

ProcessTransport::~ProcessTransport() { stop(); }

void ProcessTransport::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw OracleUnavailable("pipe() failed: " + std::string(std::strerror(errno)));
  }
  pid_t pid = fork();
  if (pid < 0) throw OracleUnavailable("fork() failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

void ProcessTransport::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

OracleResponse ProcessTransport::call(const OracleRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (pid_ <= 0) throw OracleUnavailable("oracle process is not running");
  std::string line = request.canonical() + "\n";
  // A dead child turns writes into EPIPE instead of killing us.
  struct sigaction ignore {};
  struct sigaction previous {};
  ignore.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore, &previous);
  std::size_t sent = 0;
  while (sent < line.size()) {
    ssize_t w = write(to_child_, line.data() + sent, line.size() - sent);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) {
      sigaction(SIGPIPE, &previous, nullptr);
      throw OracleUnavailable("write to oracle process failed");
    }
    sent += static_cast<std::size_t>(w);
  }
  sigaction(SIGPIPE, &previous, nullptr);
  for (;;) {
    auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      try {
        return OracleResponse::from_json(json::parse(reply));
      } catch (const json::exception& e) {
        throw OracleUnavailable(std::string("malformed reply from oracle process: ") + e.what());
      }
    }
    char buf[4096];
    ssize_t r = read(from_child_, buf, sizeof(buf));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) throw OracleUnavailable("oracle process closed its output");
    pending_.append(buf, static_cast<std::size_t>(r));
  }
}

// ---- http ------------------------------------------------------------------

HttpTransport::HttpTransport(std::string host, int port, std::string path)
    : host_(std::move(host)), port_(port), path_(std::move(path)) {}

OracleResponse HttpTransport::call(const OracleRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  httplib::Client client(host_, port_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(120, 0);
  auto res = client.Post(path_, request.canonical(), "application/json");
  if (!res) throw OracleUnavailable("HTTP request to " + describe() + " failed");
  if (res->status != 200) {
    throw OracleUnavailable("HTTP " + std::to_string(res->status) + " from " + describe());
  }
  try {
    return OracleResponse::from_json(json::parse(res->body));
  } catch (const json::exception& e) {
    throw OracleUnavailable(std::string("malformed HTTP reply: ") + e.what());
  }
}

std::string HttpTransport::describe() const {
  return "http://" + host_ + ":" + std::to_string(port_) + path_;
}

// ---- cache -----------------------------------------------------------------

CachedTransport::CachedTransport(std::shared_ptr<OracleTransport> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create oracle cache " + dir_.string());
}

OracleResponse CachedTransport::call(const OracleRequest& request) {
  const fs::path file = dir_ / (to_string(request.kind).data() + std::string("-") + request.hash() + ".json");
  if (fs::exists(file)) {
    try {
      json cached = json::parse(read_file(file));
      if (cached.at("request") == request.to_json()) {
        ++hits_;
        return OracleResponse::from_json(cached.at("response"));
      }
    } catch (const std::exception&) {
      // A corrupt entry is refetched and overwritten.
    }
  }
  OracleResponse response = inner_->call(request);
  if (response.ok) {
    json entry = {{"request", request.to_json()}, {"response", response.to_json()}};
    atomic_write(file, entry.dump());
  }
  return response;
}

std::string CachedTransport::describe() const {
  return "cache(" + dir_.string() + "):" + inner_->describe();
}

OracleResponse RecordingTransport::call(const OracleRequest& request) {
  OracleResponse response = inner_->call(request);
  table_->add(request, response);
  return response;
}

std::shared_ptr<OracleTransport> make_transport(std::string_view spec, StubMode stub_mode) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw ArgumentError("oracle spec '" + std::string(spec) + "' lacks a transport prefix");
  }
  const std::string scheme(spec.substr(0, colon));
  std::string rest(spec.substr(colon + 1));
  if (scheme == "stub") return StubTable::load(rest, stub_mode);
  if (scheme == "stub-lenient") return StubTable::load(rest, StubMode::Lenient);
  if (scheme == "stub-strict") return StubTable::load(rest, StubMode::Strict);
  if (scheme == "process") return std::make_shared<ProcessTransport>(rest);
  if (scheme == "synthetic") return std::make_shared<SyntheticOracle>(SyntheticWorld::load(rest));
  if (scheme == "http") {
    if (rest.rfind("//", 0) == 0) rest.erase(0, 2);
    std::string path = "/oracle";
    if (auto slash = rest.find('/'); slash != std::string::npos) {
      path = rest.substr(slash);
      rest.resize(slash);
    }
    auto pc = rest.rfind(':');
    if (pc == std::string::npos) throw ArgumentError("http oracle spec needs host:port");
    int port = 0;
    try {
      port = std::stoi(rest.substr(pc + 1));
    } catch (const std::exception&) {
      throw ArgumentError("bad port in oracle spec '" + std::string(spec) + "'");
    }
    return std::make_shared<HttpTransport>(rest.substr(0, pc), port, path);
  }
  throw ArgumentError("unknown oracle transport '" + scheme + "'");
}

// ---- typed layer -----------------------------------------------------------

namespace {

constexpr std::array<std::string_view, kNerTypeCount> kNerNames = {
    "person", "geopolitical area", "location", "organization", "group", "date",
    "facility", "work of art", "ordinal number", "event", "product", "time",
};

std::size_t count_masks(std::string_view prompt) {
  std::size_t n = 0;
  for (auto pos = prompt.find(kMask); pos != std::string_view::npos;
       pos = prompt.find(kMask, pos + kMask.size())) {
    ++n;
  }
  return n;
}

[[noreturn]] void malformed(OracleKind kind, const std::string& what) {
  throw OracleUnavailable("malformed " + std::string(to_string(kind)) + " response: " + what);
}

}  // namespace

std::string_view to_string(NerType type) { return kNerNames[static_cast<std::size_t>(type)]; }

std::optional<NerType> parse_ner_type(std::string_view name) {
  std::string lower = lowercase(name);
  for (std::size_t i = 0; i < kNerNames.size(); ++i) {
    if (kNerNames[i] == lower) return static_cast<NerType>(i);
  }
  // OntoNotes-style labels emitted by common NER models.
  static const std::map<std::string, NerType, std::less<>> aliases = {
      {"per", NerType::Person},         {"gpe", NerType::GeopoliticalArea},
      {"loc", NerType::Location},       {"org", NerType::Organization},
      {"norp", NerType::Group},         {"fac", NerType::Facility},
      {"work_of_art", NerType::WorkOfArt}, {"ordinal", NerType::OrdinalNumber},
  };
  if (auto it = aliases.find(lower); it != aliases.end()) return it->second;
  return std::nullopt;
}

std::vector<std::size_t> DependencyParse::roots() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] == i) out.push_back(i);
  }
  return out;
}

OracleRequest masked_fill_request(const std::string& prompt, std::size_t k) {
  return {OracleKind::MaskedFill, {{"prompt", prompt}}, static_cast<int>(k)};
}

OracleRequest wsd_request(const Tokens& sentence, std::size_t index) {
  return {OracleKind::Wsd, {{"tokens", sentence}, {"index", index}}, std::nullopt};
}

OracleRequest ner_request(const Tokens& sentence) {
  return {OracleKind::Ner, {{"tokens", sentence}}, std::nullopt};
}

OracleRequest coref_request(const Tokens& sentence, TokenSpan mention) {
  return {OracleKind::Coref,
          {{"tokens", sentence}, {"mention", {mention.start, mention.end}}},
          std::nullopt};
}

OracleRequest depparse_request(const Tokens& mention, const Tokens& left, const Tokens& right) {
  return {OracleKind::DepParse, {{"mention", mention}, {"left", left}, {"right", right}}, std::nullopt};
}

json encode_fill(const MaskedFillResult& fill) {
  json arr = json::array();
  for (const auto& c : fill) arr.push_back({{"token", c.token}, {"score", c.score}});
  return {{"fills", arr}};
}

json encode_wsd(const WsdAnswer& answer) {
  return {{"sense", answer.sense}, {"synonyms", answer.synonyms}};
}

json encode_ner(const std::vector<NerSpan>& spans) {
  json arr = json::array();
  for (const auto& s : spans) {
    arr.push_back({{"start", s.start}, {"end", s.end}, {"type", std::string(to_string(s.type))}});
  }
  return {{"spans", arr}};
}

json encode_coref(const std::optional<TokenSpan>& antecedent) {
  if (!antecedent) return {{"antecedent", nullptr}};
  return {{"antecedent", {antecedent->start, antecedent->end}}};
}

json encode_depparse(const DependencyParse& parse) {
  json j = {{"heads", parse.heads}};
  if (!parse.pos.empty()) j["pos"] = parse.pos;
  return j;
}

void Oracles::set(OracleKind kind, std::shared_ptr<OracleTransport> transport) {
  transports_[kind] = std::move(transport);
}

bool Oracles::has(OracleKind kind) const { return transports_.count(kind) != 0; }

std::shared_ptr<OracleTransport> Oracles::transport(OracleKind kind) const {
  auto it = transports_.find(kind);
  return it == transports_.end() ? nullptr : it->second;
}

OracleResponse Oracles::call(const OracleRequest& request) const {
  auto it = transports_.find(request.kind);
  if (it == transports_.end() || !it->second) {
    throw OracleUnavailable("no transport configured for " + std::string(to_string(request.kind)));
  }
  OracleResponse response = it->second->call(request);
  if (!response.ok) {
    throw OracleUnavailable(std::string(to_string(request.kind)) + " oracle error: " + response.error);
  }
  return response;
}

MaskedFillResult Oracles::masked_fill(const std::string& prompt, std::size_t k) const {
  if (count_masks(prompt) != 1) {
    throw ArgumentError("prompt must contain exactly one " + std::string(kMask) + ": " + prompt);
  }
  OracleResponse r = call(masked_fill_request(prompt, k));
  MaskedFillResult out;
  if (r.result.is_null()) return out;
  try {
    for (const auto& f : r.result.at("fills")) {
      std::string token = f.at("token").get<std::string>();
      auto b = token.find_first_not_of(" \t");
      auto e = token.find_last_not_of(" \t");
      token = b == std::string::npos ? std::string() : token.substr(b, e - b + 1);
      if (token.empty()) continue;
      out.push_back({token, f.value("score", 0.0)});
    }
  } catch (const json::exception& e) {
    malformed(OracleKind::MaskedFill, e.what());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FillCandidate& a, const FillCandidate& b) { return a.score > b.score; });
  if (out.size() > k) out.resize(k);
  return out;
}

std::optional<WsdAnswer> Oracles::wsd(const Tokens& sentence, std::size_t index) const {
  if (index >= sentence.size()) throw ArgumentError("wsd index out of range");
  OracleResponse r = call(wsd_request(sentence, index));
  if (r.result.is_null()) return std::nullopt;
  try {
    WsdAnswer a;
    a.sense = r.result.at("sense").get<std::string>();
    a.synonyms = r.result.at("synonyms").get<std::vector<std::string>>();
    return a;
  } catch (const json::exception& e) {
    malformed(OracleKind::Wsd, e.what());
  }
}

std::vector<NerSpan> Oracles::ner(const Tokens& sentence) const {
  OracleResponse r = call(ner_request(sentence));
  std::vector<NerSpan> out;
  if (r.result.is_null()) return out;
  try {
    for (const auto& s : r.result.at("spans")) {
      auto type = parse_ner_type(s.at("type").get<std::string>());
      if (!type) malformed(OracleKind::Ner, "unknown entity type " + s.at("type").dump());
      out.push_back({s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>(), *type});
    }
  } catch (const json::exception& e) {
    malformed(OracleKind::Ner, e.what());
  }
  std::sort(out.begin(), out.end(), [](const NerSpan& a, const NerSpan& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].start >= out[i].end || out[i].end > sentence.size()) {
      malformed(OracleKind::Ner, "span out of range");
    }
    if (i > 0 && out[i].start < out[i - 1].end) malformed(OracleKind::Ner, "overlapping spans");
  }
  return out;
}

std::optional<TokenSpan> Oracles::coref(const Tokens& sentence, TokenSpan mention) const {
  OracleResponse r = call(coref_request(sentence, mention));
  if (r.result.is_null()) return std::nullopt;
  try {
    const json& a = r.result.at("antecedent");
    if (a.is_null()) return std::nullopt;
    TokenSpan span{a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>()};
    if (span.start >= span.end || span.end > sentence.size()) {
      malformed(OracleKind::Coref, "antecedent out of range");
    }
    return span;
  } catch (const json::exception& e) {
    malformed(OracleKind::Coref, e.what());
  }
}

std::optional<DependencyParse> Oracles::depparse(const Tokens& mention, const Tokens& left,
                                                 const Tokens& right) const {
  if (mention.empty()) throw ArgumentError("depparse needs a non-empty mention");
  OracleResponse r = call(depparse_request(mention, left, right));
  if (r.result.is_null()) return std::nullopt;
  DependencyParse parse;
  try {
    parse.heads = r.result.at("heads").get<std::vector<std::size_t>>();
    if (auto pos = r.result.find("pos"); pos != r.result.end()) {
      parse.pos = pos->get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    malformed(OracleKind::DepParse, e.what());
  }
  if (parse.heads.size() != mention.size()) malformed(OracleKind::DepParse, "one head per token expected");
  for (std::size_t h : parse.heads) {
    if (h >= mention.size()) malformed(OracleKind::DepParse, "head index out of range");
  }
  if (!parse.pos.empty() && parse.pos.size() != mention.size()) {
    malformed(OracleKind::DepParse, "one POS tag per token expected");
  }
  if (parse.roots().empty()) malformed(OracleKind::DepParse, "no root");
  return parse;
}

}  // namespace typebias
