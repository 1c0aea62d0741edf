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

#include <atomic>
#include <cstdlib>
#include <string>

#include "typebias/error.hpp"
#include "typebias/kernels.hpp"

namespace typebias::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* pick_default() {
  const char* env = std::getenv("TYPEBIAS_SIMD");
  if (env && std::string(env) == "scalar") return &scalar::table();
  if (avx2::table() && cpu_has_avx2()) return avx2::table();
  return &scalar::table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

bool available(Isa isa) {
  if (isa == Isa::Scalar) return true;
  return avx2::table() != nullptr && cpu_has_avx2();
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (!available(isa)) {
    throw ArgumentError("kernel variant '" + std::string(to_string(isa)) + "' is not available");
  }
  slot().store(isa == Isa::Scalar ? &scalar::table() : avx2::table(), std::memory_order_release);
}

void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> x, std::span<double> out) {
  const KernelTable& k = active();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = bias[r] + k.dot(weights.data() + r * cols, x.data(), cols);
  }
}

void outer_accumulate(std::span<const double> coeff, std::span<const double> x,
                      std::span<double> weights) {
  const KernelTable& k = active();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < coeff.size(); ++r) {
    if (coeff[r] != 0.0) k.axpy(coeff[r], x.data(), weights.data() + r * cols, cols);
  }
}

void transposed_accumulate(std::span<const double> weights, std::span<const double> coeff,
                           std::span<double> out) {
  const KernelTable& k = active();
  const std::size_t cols = out.size();
  for (std::size_t r = 0; r < coeff.size(); ++r) {
    if (coeff[r] != 0.0) k.axpy(coeff[r], weights.data() + r * cols, out.data(), cols);
  }
}

}  // namespace typebias::kernels
