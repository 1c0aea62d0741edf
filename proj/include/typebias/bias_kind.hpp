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
#include <optional>
#include <string>
#include <string_view>

namespace typebias {

enum class BiasKind {
  MentionContext,
  LexicalOverlapping,
  NamedEntity,
  Pronoun,
  Dependency,
  Overgeneralization,
};

inline constexpr std::array<BiasKind, 6> kAllBiasKinds = {
    BiasKind::MentionContext, BiasKind::LexicalOverlapping, BiasKind::NamedEntity,
    BiasKind::Pronoun,        BiasKind::Dependency,         BiasKind::Overgeneralization,
};

std::string_view to_string(BiasKind kind);
std::optional<BiasKind> parse_bias_kind(std::string_view name);

// Throws ArgumentError on unknown names.
BiasKind bias_kind_from_string(std::string_view name);

}  // namespace typebias
