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

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "typebias/corpus.hpp"

namespace typebias {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when recall was computed against an empty gold set.
  bool empty_gold = false;

  friend bool operator==(const PRF&, const PRF&) = default;
};

// Harmonic mean; 0 when p + r == 0.
double harmonic_f1(double precision, double recall);

PRF instance_prf(const TypeSet& gold, const TypeSet& pred);

struct GoldPred {
  TypeSet gold;
  TypeSet pred;
};

// Precision averages over pairs with a non-empty prediction, recall over all
// pairs, F1 is the harmonic mean of the two averages.
PRF macro_prf(std::span<const GoldPred> pairs);

// 100 * (after - before) / before. Throws UndefinedDelta when before == 0.
double relative_delta(double before, double after);

struct ScoredType {
  std::string type;
  double probability = 0.0;

  friend bool operator==(const ScoredType&, const ScoredType&) = default;
};

struct EmptyInputReport {
  std::vector<ScoredType> top_types;     // descending
  std::vector<ScoredType> bottom_types;  // ascending
  double uniform_divergence = 0.0;       // KL(normalized probs || uniform)

  friend bool operator==(const EmptyInputReport&, const EmptyInputReport&) = default;
};

inline constexpr double kProbabilityFloor = 1e-9;

// k larger than the label space is clamped with a warning.
EmptyInputReport empty_input_report(const std::map<std::string, double>& probs, std::size_t k);

}  // namespace typebias
