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

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

// Command-line front end: diagnose, augment, train, evaluate, probe-empty
// and gen-synthetic over one run directory each.
namespace typebias {

// Resolved key/value configuration. Every key has a registered default.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<std::string>& known_keys();
  // TYPEBIAS_ + upper-cased key with '.' replaced by '_'.
  static std::string env_name(std::string_view key);

  // Throws ValidationError for unknown keys.
  void set(const std::string& key, std::string value);
  bool is_set(const std::string& key) const;  // non-empty
  const std::string& get(const std::string& key) const;

  // Typed accessors; malformed values are a ValidationError naming the key.
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;  // comma separated

  // Sorted "key = value" lines.
  std::string serialize() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// `key = value` lines; `#` and `;` start comments; `[section]` prefixes the
// following keys with "section.".
std::map<std::string, std::string> parse_config_text(std::string_view text);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

// Defaults, then the file, then TYPEBIAS_* variables, then `flags`.
RunConfig resolve_config(const std::optional<std::string>& file_text, const EnvLookup& env,
                         const std::map<std::string, std::string>& flags);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitOracleRate = 4;
inline constexpr int kExitOracle = 5;

// Errors are printed to `err` as one JSON object per line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace typebias
