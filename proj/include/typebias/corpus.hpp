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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "typebias/bias_kind.hpp"

namespace typebias {

using Tokens = std::vector<std::string>;
using TypeSet = std::set<std::string>;

enum class Region { Left, Mention, Right };

std::string_view to_string(Region region);

// Replace tokens [begin, end) of one region of the source instance.
struct Edit {
  Region region = Region::Mention;
  std::size_t begin = 0;
  std::size_t end = 0;
  Tokens replacement;

  friend bool operator==(const Edit&, const Edit&) = default;
};

struct PerturbationRecord {
  std::string source_id;
  BiasKind strategy = BiasKind::LexicalOverlapping;
  std::vector<Edit> edits;
  std::optional<std::uint64_t> rng_seed;
  // Free-form remark, e.g. which fallback produced the edit.
  std::string note;

  friend bool operator==(const PerturbationRecord&, const PerturbationRecord&) = default;
};

struct TypingInstance {
  std::string id;
  Tokens left;
  Tokens mention;
  Tokens right;
  TypeSet gold;
  std::set<BiasKind> bias_tags;
  std::optional<PerturbationRecord> provenance;

  bool is_empty_probe() const { return left.empty() && mention.empty() && right.empty(); }

  // left + mention + right.
  Tokens sentence() const;

  friend bool operator==(const TypingInstance&, const TypingInstance&) = default;
};

// The all-empty instance used to probe label-distribution skew.
TypingInstance empty_probe();

// Applies `edits` to `source`. Edits within a region must not overlap; they
// are applied right to left so offsets always refer to the source.
TypingInstance apply_edits(const TypingInstance& source, std::span<const Edit> edits);

// Re-derives an augmented instance from its source and provenance. The id,
// tags and provenance are copied from `augmented`'s record.
TypingInstance replay_provenance(const TypingInstance& source, const PerturbationRecord& record,
                                 std::string_view id);

enum class Tier { General, Fine, UltraFine };

std::string_view to_string(Tier tier);
Tier tier_from_string(std::string_view name);

class LabelSpace {
 public:
  LabelSpace() = default;

  // Types not present in `tiers` default to UltraFine.
  static LabelSpace from_types(std::span<const std::string> types,
                               const std::map<std::string, Tier>& tiers = {});

  // One type per line; the optional side file holds `type<TAB>tier` rows.
  static LabelSpace load(const std::filesystem::path& types_path,
                         const std::optional<std::filesystem::path>& tiers_path = std::nullopt);

  void save(const std::filesystem::path& types_path,
            const std::optional<std::filesystem::path>& tiers_path = std::nullopt) const;

  // Sorted, unique.
  const std::vector<std::string>& types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  bool empty() const { return types_.empty(); }
  bool contains(std::string_view type) const;
  std::optional<std::size_t> index_of(std::string_view type) const;
  Tier tier(std::string_view type) const;

  // Canonical type for a free-form word: its lowercase form, or a
  // singular/plural variant of a type.
  std::optional<std::string> resolve(std::string_view word) const;

 private:
  std::vector<std::string> types_;
  std::map<std::string, Tier, std::less<>> tiers_;
  std::map<std::string, std::string, std::less<>> normalized_;
};

std::string lowercase(std::string_view text);

// Splits on single spaces, dropping empty pieces.
Tokens split_tokens(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens, std::string_view sep = " ");

nlohmann::json instance_to_json(const TypingInstance& instance);

// `fallback_id` is used when the record has no "id" field.
TypingInstance instance_from_json(const nlohmann::json& record, const std::string& fallback_id);

std::vector<TypingInstance> load_dataset(const std::filesystem::path& path,
                                         const LabelSpace* label_space = nullptr);

void write_dataset(std::span<const TypingInstance> instances, const std::filesystem::path& path);

// Throws ValidationError listing every gold type missing from the space.
void validate_against(std::span<const TypingInstance> instances, const LabelSpace& label_space);

// Writes `contents` to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace typebias
