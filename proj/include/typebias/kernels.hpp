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

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision inner loops used by the typing models. Every
// variant performs the same floating-point operations in the same order
// (four interleaved accumulators, no fused multiply-add), so results are
// bitwise identical whichever variant the dispatcher picks.
namespace typebias::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct AdamStep {
  double lr_t;  // bias-corrected learning rate
  double beta1;
  double beta2;
  double eps;
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  void (*adam)(const AdamStep& step, double* param, const double* grad, double* m, double* v,
               std::size_t n);
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
// nullptr when the variant was not compiled in.
const KernelTable* table();
}

bool available(Isa isa);

// The table in use. The first call picks AVX2 when the CPU supports it,
// unless TYPEBIAS_SIMD=scalar is set.
const KernelTable& active();

// Forces a variant (tests, benchmarks). Throws ArgumentError if unavailable.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

// out[r] = bias[r] + dot(W[r, :], x) for a row-major rows x x.size() matrix.
void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> x, std::span<double> out);

// W[r, :] += coeff[r] * x  (outer-product accumulation).
void outer_accumulate(std::span<const double> coeff, std::span<const double> x,
                      std::span<double> weights);

// out += W^T coeff.
void transposed_accumulate(std::span<const double> weights, std::span<const double> coeff,
                           std::span<double> out);

}  // namespace typebias::kernels
