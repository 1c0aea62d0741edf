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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "typebias/augment.hpp"
#include "typebias/bias_kind.hpp"
#include "typebias/corpus.hpp"
#include "typebias/metrics.hpp"
#include "typebias/oracles.hpp"
#include "typebias/prompting.hpp"
#include "typebias/typers.hpp"

namespace typebias {

inline constexpr int kReportSchemaVersion = 1;

// One aggregated cell. `prf` is absent when the cell holds no instance.
struct GridCell {
  std::size_t n = 0;
  std::optional<PRF> prf;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

// Raw model output on one input form of one test instance.
struct PredictionRow {
  std::string instance_id;
  std::string split;  // biased | unbiased | undecided | general | ultra-fine | ...
  std::string form;   // original | perturbed | mention | headword
  TypeSet gold;
  TypeSet pred;
  double f1 = 0.0;

  friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

enum class Split { Biased = 0, Unbiased = 1 };
enum class InputForm { Original = 0, Perturbed = 1 };

struct DiagnosisReport {
  BiasKind bias_kind = BiasKind::MentionContext;
  std::size_t n_biased = 0;
  std::size_t n_unbiased = 0;
  std::size_t n_undecided = 0;
  // Decided instances for which no perturbed input could be built.
  std::size_t n_unperturbed = 0;
  std::size_t n_oracle_failures = 0;
  // grid[split][form]; both forms cover the same perturbable instances.
  std::array<std::array<GridCell, 2>, 2> grid{};
  std::optional<double> delta_biased;    // percent
  std::optional<double> delta_unbiased;  // percent
  std::string direction;
  std::vector<PredictionRow> rows;

  const GridCell& cell(Split s, InputForm f) const {
    return grid[static_cast<int>(s)][static_cast<int>(f)];
  }
  friend bool operator==(const DiagnosisReport&, const DiagnosisReport&) = default;
};

// "↑" for MentionContext, "↓" for the other kinds.
std::string_view expected_direction(BiasKind kind);

struct DiagnosisOptions {
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  // Required for Pronoun.
  const NameLists* names = nullptr;
  std::size_t n_names = 5;
  // Receives one verdict per test instance when set.
  std::vector<BiasVerdict>* verdicts = nullptr;
};

// Splits `test_set` by prompt verdicts and scores the model on original and
// perturbed inputs. Instances whose oracles fail are counted as undecided.
DiagnosisReport run_bias_diagnosis(const TypingModel& model, std::span<const TypingInstance> test_set,
                                   BiasKind bias_kind, const Oracles& oracles,
                                   const LabelSpace& label_space, const DiagnosisOptions& options = {});

struct DependencyReport {
  std::size_t n_total = 0;     // multi-token mentions with a headword
  std::size_t n_improved = 0;  // F1 strictly higher on the headword
  std::size_t n_failed = 0;    // parse failures, excluded from n_total
  GridCell mention;            // over the improved subset
  GridCell headword;
  std::optional<double> delta;
  std::vector<PredictionRow> rows;

  friend bool operator==(const DependencyReport&, const DependencyReport&) = default;
};

DependencyReport run_dependency_diagnosis(const TypingModel& model,
                                          std::span<const TypingInstance> test_set,
                                          const Oracles& oracles);

struct OvergeneralizationReport {
  GridCell general;     // gold purely General
  GridCell ultra_fine;  // gold purely UltraFine
  EmptyInputReport empty_input;
  std::vector<PredictionRow> rows;

  friend bool operator==(const OvergeneralizationReport&, const OvergeneralizationReport&) = default;
};

// Tiers come from `label_space`.
OvergeneralizationReport run_overgeneralization_diagnosis(const TypingModel& model,
                                                          std::span<const TypingInstance> test_set,
                                                          const LabelSpace& label_space,
                                                          std::size_t top_k = 10);

struct LocationRow {
  std::string location;  // mention-overlap | mention-other | context
  GridCell before;
  GridCell after;
  std::optional<double> delta;

  friend bool operator==(const LocationRow&, const LocationRow&) = default;
};

struct LocationReport {
  std::array<LocationRow, 3> rows{};
  std::size_t n_oracle_failures = 0;

  friend bool operator==(const LocationReport&, const LocationReport&) = default;
};

// Each instance contributes to a row when one of its words in that location
// has a usable synonym; the first such word gets its first synonym.
LocationReport perturbation_location_control(const TypingModel& model,
                                             std::span<const TypingInstance> test_set,
                                             const Oracles& oracles, const LabelSpace& label_space);

struct FullReport {
  std::vector<DiagnosisReport> bias;
  std::optional<DependencyReport> dependency;
  std::optional<OvergeneralizationReport> overgeneralization;
  std::optional<LocationReport> location;

  friend bool operator==(const FullReport&, const FullReport&) = default;
};

enum class ReportFormat { Text, Json };

// "text" or "json"; anything else is an ArgumentError.
ReportFormat report_format_from_string(std::string_view name);

nlohmann::json report_to_json(const FullReport& report);
FullReport report_from_json(const nlohmann::json& j);

// Metrics are rounded to six decimals on construction so that rendering is
// stable across platforms.
std::string render_report(const FullReport& report, ReportFormat format);
std::string render_report(const FullReport& report, std::string_view format);

}  // namespace typebias
