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

#include <cctype>
#include <cstdio>
#include <iostream>
#include <mutex>

#include "typebias/bias_kind.hpp"
#include "typebias/error.hpp"
#include "typebias/hash.hpp"
#include "typebias/log.hpp"
#include "typebias/rng.hpp"

namespace typebias {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ArgumentError("Rng::index requires n > 0");
  const std::uint64_t bound = n;
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw ArgumentError("cannot sample more items than available");
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + index(n - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  // splitmix64 finalizer over (seed, fnv(key)).
  std::uint64_t z = seed ^ fnv1a64(key);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view to_string(BiasKind kind) {
  switch (kind) {
    case BiasKind::MentionContext: return "MentionContext";
    case BiasKind::LexicalOverlapping: return "LexicalOverlapping";
    case BiasKind::NamedEntity: return "NamedEntity";
    case BiasKind::Pronoun: return "Pronoun";
    case BiasKind::Dependency: return "Dependency";
    case BiasKind::Overgeneralization: return "Overgeneralization";
  }
  return "?";
}

std::optional<BiasKind> parse_bias_kind(std::string_view name) {
  // Accept the enum spelling as well as kebab/snake case ("mention-context").
  std::string squashed;
  for (char c : name) {
    if (c == '-' || c == '_' || c == ' ') continue;
    squashed.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (BiasKind kind : kAllBiasKinds) {
    std::string canonical;
    for (char c : to_string(kind)) {
      canonical.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (canonical == squashed) return kind;
  }
  return std::nullopt;
}

BiasKind bias_kind_from_string(std::string_view name) {
  if (auto kind = parse_bias_kind(name)) return *kind;
  throw ArgumentError("unknown bias kind '" + std::string(name) + "'");
}

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

LogSink& current_sink() {
  static LogSink sink = [](LogLevel level, const std::string& message) {
    if (level < LogLevel::Warning) return;
    std::cerr << (level == LogLevel::Warning ? "warning: " : "error: ") << message << '\n';
  };
  return sink;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(log_mutex());
  LogSink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

void log(LogLevel level, const std::string& message) {
  std::lock_guard<std::mutex> lock(log_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace typebias
