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


// Helpers shared by the unit tests and the acceptance binary.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "typebias/augment.hpp"
#include "typebias/corpus.hpp"
#include "typebias/debias.hpp"
#include "typebias/oracles.hpp"
#include "typebias/typers.hpp"

namespace typebias::testing {

std::filesystem::path source_dir();
std::filesystem::path worked_dir();
std::filesystem::path names_dir();

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Reference F1 values are the floating-point F1 cut (not rounded) to three
// decimals: 2pr/(p+r) for (1, 0.6) is 0.7499999999999999 and prints 0.749.
double truncate3(double x);

TypingInstance make_instance(const std::string& id, const std::string& left, const std::string& mention,
                             const std::string& right, const TypeSet& gold);

// The worked examples under data/worked with strict replay oracles.
struct WorkedFixture {
  LabelSpace labels;
  std::vector<TypingInstance> instances;
  NameLists names;
  Oracles oracles;
  std::uint64_t seed = 1;
  const TypingInstance& by_id(const std::string& id) const;
};
WorkedFixture load_worked_fixture();

struct CheckLine {
  std::string name;
  bool ok = false;
  std::string detail;
};

// ---- gradients -------------------------------------------------------------

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central differences over every parameter the batch touches (embedding rows
// that received gradient, the output layer and the objective's own
// parameters). Relative error is |a - n| / max(|a|, |n|, floor).
GradCheck check_gradients(ReferenceModel& model, Objective& objective,
                          std::span<const std::size_t> batch, double h = 1e-5, double floor = 1e-7);

// Reference BCE plus every ensemble objective on a small generated batch.
std::vector<CheckLine> gradient_suite(std::size_t batch_size = 5, double tolerance = 1e-4);

// Each debiasing method in its degenerate setting against the baseline.
std::vector<CheckLine> degenerate_suite(double tolerance = 1e-6);

}  // namespace typebias::testing
