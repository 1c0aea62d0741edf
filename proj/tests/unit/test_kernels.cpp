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

#include <cstring>
#include <vector>

#include "doctest.h"
#include "typebias/kernels.hpp"
#include "typebias/rng.hpp"

using namespace typebias;
namespace k = typebias::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree bit for bit") {
  const auto* avx = k::avx2::table();
  if (!avx || !k::available(k::Isa::Avx2)) {
    MESSAGE("avx2 not available, skipping");
    return;
  }
  const auto& sc = k::scalar::table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 257u}) {
    CAPTURE(n);
    const auto a = random_vec(n, 1 + n), b = random_vec(n, 100 + n);
    const double d1 = sc.dot(a.data(), b.data(), n), d2 = avx->dot(a.data(), b.data(), n);
    CHECK(std::memcmp(&d1, &d2, sizeof d1) == 0);

    auto y1 = b, y2 = b;
    sc.axpy(0.37, a.data(), y1.data(), n);
    avx->axpy(0.37, a.data(), y2.data(), n);
    CHECK(same_bits(y1, y2));

    auto s1 = a, s2 = a;
    sc.scale(-1.5, s1.data(), n);
    avx->scale(-1.5, s2.data(), n);
    CHECK(same_bits(s1, s2));

    auto p1 = a, p2 = a, m1 = random_vec(n, 7), m2 = m1, v1 = random_vec(n, 8), v2 = v1;
    for (auto& x : v1) x = x * x;
    v2 = v1;
    const k::AdamStep step{0.01, 0.9, 0.999, 1e-8};
    sc.adam(step, p1.data(), b.data(), m1.data(), v1.data(), n);
    avx->adam(step, p2.data(), b.data(), m2.data(), v2.data(), n);
    CHECK(same_bits(p1, p2));
    CHECK(same_bits(m1, m2));
    CHECK(same_bits(v1, v2));
  }
}

TEST_CASE("dispatch selects the requested table") {
  const auto before = k::active().isa;
  k::select(k::Isa::Scalar);
  CHECK(k::active().isa == k::Isa::Scalar);
  const auto a = random_vec(9, 1), b = random_vec(9, 2);
  const double ref = k::dot(a, b);
  if (k::available(k::Isa::Avx2)) {
    k::select(k::Isa::Avx2);
    CHECK(k::active().isa == k::Isa::Avx2);
    CHECK(k::dot(a, b) == ref);
  }
  k::select(before);
  CHECK(k::to_string(k::Isa::Scalar) == "scalar");
}

TEST_CASE("affine and accumulators") {
  // 2x3 weights, row-major
  const std::vector<double> w = {1, 2, 3, 4, 5, 6}, bias = {0.5, -1}, x = {1, 0, -1};
  std::vector<double> out(2);
  k::affine(w, bias, x, out);
  CHECK(out[0] == 0.5 + 1 - 3);
  CHECK(out[1] == -1 + 4 - 6);

  std::vector<double> g(6, 0.0);
  k::outer_accumulate(std::vector<double>{2, -1}, x, g);
  CHECK(g == std::vector<double>{2, 0, -2, -1, 0, 1});

  std::vector<double> t(3, 0.0);
  k::transposed_accumulate(w, std::vector<double>{1, 1}, t);
  CHECK(t == std::vector<double>{5, 7, 9});
}
