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

#include <cmath>

#include "typebias/kernels.hpp"

namespace typebias::kernels::scalar {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = acc0 + a[i] * b[i];
    acc1 = acc1 + a[i + 1] * b[i + 1];
    acc2 = acc2 + a[i + 2] * b[i + 2];
    acc3 = acc3 + a[i + 3] * b[i + 3];
  }
  double sum = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) sum = sum + a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

void adam(const AdamStep& s, double* param, const double* grad, double* m, double* v,
          std::size_t n) {
  const double c1 = 1.0 - s.beta1;
  const double c2 = 1.0 - s.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + c1 * g;
    v[i] = s.beta2 * v[i] + c2 * (g * g);
    const double den = std::sqrt(v[i]) + s.eps;
    param[i] = param[i] - (s.lr_t * m[i]) / den;
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::Scalar, &dot, &axpy, &scale, &adam};
  return t;
}

}  // namespace typebias::kernels::scalar
