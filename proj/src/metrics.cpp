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

#include "typebias/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "typebias/error.hpp"
#include "typebias/log.hpp"

namespace typebias {

double harmonic_f1(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

PRF instance_prf(const TypeSet& gold, const TypeSet& pred) {
  std::size_t hit = 0;
  for (const auto& t : pred) hit += gold.count(t);
  PRF out;
  out.precision = pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
  out.empty_gold = gold.empty();
  out.recall = gold.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(gold.size());
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

PRF macro_prf(std::span<const GoldPred> pairs) {
  if (pairs.empty()) throw ArgumentError("macro_prf needs at least one pair");
  double p_sum = 0.0;
  double r_sum = 0.0;
  std::size_t p_count = 0;
  for (const auto& pair : pairs) {
    PRF one = instance_prf(pair.gold, pair.pred);
    if (!pair.pred.empty()) {
      p_sum += one.precision;
      ++p_count;
    }
    r_sum += one.recall;
  }
  PRF out;
  out.precision = p_count ? p_sum / static_cast<double>(p_count) : 0.0;
  out.recall = r_sum / static_cast<double>(pairs.size());
  out.f1 = harmonic_f1(out.precision, out.recall);
  return out;
}

double relative_delta(double before, double after) {
  if (before == 0.0) throw UndefinedDelta();
  return 100.0 * (after - before) / before;
}

EmptyInputReport empty_input_report(const std::map<std::string, double>& probs, std::size_t k) {
  EmptyInputReport report;
  if (probs.empty()) return report;
  if (k > probs.size()) {
    log_warning("empty_input_report: k=" + std::to_string(k) + " exceeds label space of " +
                std::to_string(probs.size()) + "; clamping");
    k = probs.size();
  }
  std::vector<ScoredType> all;
  all.reserve(probs.size());
  for (const auto& [type, p] : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ArgumentError("probability for '" + type + "' outside [0,1]");
    }
    all.push_back({type, p});
  }
  // std::map iteration is already lexicographic, so stable sorts keep the
  // lexicographic tie order.
  std::vector<ScoredType> desc = all;
  std::stable_sort(desc.begin(), desc.end(),
                   [](const ScoredType& a, const ScoredType& b) { return a.probability > b.probability; });
  std::vector<ScoredType> asc = all;
  std::stable_sort(asc.begin(), asc.end(),
                   [](const ScoredType& a, const ScoredType& b) { return a.probability < b.probability; });
  report.top_types.assign(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(k));
  report.bottom_types.assign(asc.begin(), asc.begin() + static_cast<std::ptrdiff_t>(k));

  const double n = static_cast<double>(all.size());
  double total = 0.0;
  for (const auto& s : all) total += std::max(s.probability, kProbabilityFloor);
  double kl = 0.0;
  for (const auto& s : all) {
    const double q = std::max(s.probability, kProbabilityFloor) / total;
    kl += q * std::log(q * n);
  }
  // Equal inputs give exactly zero; rounding can leave a tiny negative.
  bool uniform = std::all_of(all.begin(), all.end(),
                             [&](const ScoredType& s) { return s.probability == all.front().probability; });
  report.uniform_divergence = uniform ? 0.0 : std::max(kl, 0.0);
  return report;
}

}  // namespace typebias
